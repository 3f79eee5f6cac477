import { ApiClient } from "./api.js";
import { browserUrlHost, ExplorerApp } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const app = new ExplorerApp(root, new ApiClient(""), browserUrlHost(window));
  void app.init();
});
