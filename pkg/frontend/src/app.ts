/** Controller for the exploration loop: view a document, inspect its two
 * neighbor lists, click a neighbor to re-query from it. Session state lives
 * in the URL; in-flight requests are aborted on navigation; revisiting a
 * trail position replays from the response cache without a new fetch. */

import { ApiClient, ApiError, DocumentRecord, NeighborsResponse, ServiceConfig } from "./api.js";
import { clampCounts, ExplorerState, HopSource, parseState, serializeState } from "./state.js";
import {
  renderBanner,
  renderDocumentPanel,
  renderNeighborPanels,
  renderSearchResults,
  renderTrail,
} from "./view.js";

export interface UrlHost {
  getSearch(): string;
  push(query: string): void;
  replace(query: string): void;
  onPop(callback: () => void): void;
}

const SEARCH_DEBOUNCE_MS = 250;

export class ExplorerApp {
  state: ExplorerState = { doc: null, nw: 10, ne: 2, trail: [] };
  config: ServiceConfig | null = null;

  private neighborCache = new Map<string, NeighborsResponse>();
  private documentCache = new Map<string, DocumentRecord>();
  private controller: AbortController | null = null;
  private searchTimer: ReturnType<typeof setTimeout> | null = null;

  private elements!: {
    banner: HTMLElement;
    searchInput: HTMLInputElement;
    searchResults: HTMLElement;
    nwInput: HTMLInputElement;
    neInput: HTMLInputElement;
    countsNote: HTMLElement;
    trail: HTMLElement;
    document: HTMLElement;
    wordPanel: HTMLElement;
    embPanel: HTMLElement;
  };

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private url: UrlHost,
  ) {}

  async init(): Promise<void> {
    this.buildSkeleton();
    this.url.onPop(() => {
      void this.restoreFromUrl(false);
    });
    try {
      this.config = await this.client.getConfig();
    } catch {
      renderBanner(this.elements.banner, "service unreachable", () => void this.init());
      return;
    }
    renderBanner(this.elements.banner, null);
    await this.restoreFromUrl(false);
  }

  private buildSkeleton(): void {
    const doc = this.root.ownerDocument;
    this.root.replaceChildren();
    this.root.insertAdjacentHTML(
      "beforeend",
      `
      <div id="banner"></div>
      <header class="topbar">
        <h1>corpus explorer</h1>
        <div class="search">
          <input id="search-input" type="search" placeholder="find a starting document…" />
          <div id="search-results"></div>
        </div>
        <div class="counts">
          <label>word <input id="nw-input" type="number" min="0" /></label>
          <label>embedding <input id="ne-input" type="number" min="0" /></label>
          <span id="counts-note" class="panel-note"></span>
        </div>
      </header>
      <nav id="trail" aria-label="exploration trail"></nav>
      <main class="columns">
        <section id="document-panel"></section>
        <section class="neighbors">
          <h2>word neighbors</h2>
          <div id="word-panel"></div>
        </section>
        <section class="neighbors">
          <h2>embedding neighbors</h2>
          <div id="emb-panel"></div>
        </section>
      </main>
      `,
    );
    const get = (id: string) => doc.getElementById(id) as HTMLElement;
    this.elements = {
      banner: get("banner"),
      searchInput: get("search-input") as HTMLInputElement,
      searchResults: get("search-results"),
      nwInput: get("nw-input") as HTMLInputElement,
      neInput: get("ne-input") as HTMLInputElement,
      countsNote: get("counts-note"),
      trail: get("trail"),
      document: get("document-panel"),
      wordPanel: get("word-panel"),
      embPanel: get("emb-panel"),
    };
    this.elements.searchInput.addEventListener("input", () => this.scheduleSearch());
    this.elements.nwInput.addEventListener("change", () => void this.applyCountInputs());
    this.elements.neInput.addEventListener("change", () => void this.applyCountInputs());
  }

  private callbacks = {
    onSelectNeighbor: (id: string, via: HopSource) => void this.selectNeighbor(id, via),
    onTrailJump: (index: number) => void this.replayTrailHop(index),
  };

  private async restoreFromUrl(push: boolean): Promise<void> {
    const defaults = this.config
      ? { nw: this.config.config.n_w, ne: this.config.config.n_e }
      : { nw: 10, ne: 2 };
    this.state = parseState(this.url.getSearch(), defaults);
    this.syncCountInputs();
    renderTrail(this.elements.trail, this.state.trail, this.callbacks);
    if (this.state.doc !== null) {
      await this.showDocument(this.state.doc, push);
    }
  }

  /** The core loop: a clicked neighbor becomes the new query document. */
  async selectNeighbor(id: string, via: HopSource): Promise<void> {
    this.state.trail = [...this.state.trail, { id, via }];
    this.state.doc = id;
    renderSearchResults(this.elements.searchResults, null, this.callbacks);
    renderTrail(this.elements.trail, this.state.trail, this.callbacks);
    this.pushUrl();
    await this.showDocument(id, false);
  }

  /** Revisit an earlier hop; the trail itself is append-only. */
  async replayTrailHop(index: number): Promise<void> {
    const hop = this.state.trail[index];
    if (!hop) return;
    this.state.doc = hop.id;
    this.pushUrl();
    await this.showDocument(hop.id, false);
  }

  async applyCountInputs(): Promise<void> {
    const cacheK = this.config?.config.cache_k ?? 99;
    const requested = {
      nw: Number(this.elements.nwInput.value || 0),
      ne: Number(this.elements.neInput.value || 0),
    };
    const { nw, ne, clamped } = clampCounts(requested.nw, requested.ne, cacheK);
    this.state.nw = nw;
    this.state.ne = ne;
    this.syncCountInputs();
    this.elements.countsNote.textContent = clamped
      ? `capped at the bundle cache (${cacheK})`
      : "";
    if (clamped) {
      this.elements.nwInput.title = `the bundle caches at most ${cacheK} neighbors`;
      this.elements.neInput.title = `the bundle caches at most ${cacheK} neighbors`;
    }
    this.pushUrl();
    if (this.state.doc !== null) {
      await this.showDocument(this.state.doc, false);
    }
  }

  private syncCountInputs(): void {
    this.elements.nwInput.value = String(this.state.nw);
    this.elements.neInput.value = String(this.state.ne);
    if (this.config) {
      this.elements.nwInput.max = String(this.config.config.cache_k);
      this.elements.neInput.max = String(this.config.config.cache_k);
    }
  }

  private pushUrl(): void {
    this.url.push(serializeState(this.state));
  }

  private async showDocument(id: string, pushUrl: boolean): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    if (pushUrl) this.pushUrl();

    let record = this.documentCache.get(id) ?? null;
    try {
      if (!record) {
        const body = await this.client.getDocument(id, controller.signal);
        record = body.document;
        this.documentCache.set(id, record);
      }
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      if (err instanceof ApiError && err.status === 404) {
        renderDocumentPanel(this.elements.document, null, "document not found");
        renderNeighborPanels(this.elements.wordPanel, this.elements.embPanel, null,
          { ne: this.state.ne }, this.callbacks);
        return;
      }
      renderBanner(this.elements.banner, "service unreachable", () => void this.showDocument(id, false));
      return;
    }
    renderBanner(this.elements.banner, null);
    renderDocumentPanel(this.elements.document, record);

    const cacheKey = `${id}|${this.state.nw}|${this.state.ne}`;
    const cached = this.neighborCache.get(cacheKey);
    if (cached) {
      renderNeighborPanels(this.elements.wordPanel, this.elements.embPanel, cached, {
        ne: this.state.ne,
        currentLang: record.lang,
      }, this.callbacks);
      return;
    }
    try {
      const body = await this.client.getNeighbors(id, this.state.nw, this.state.ne, controller.signal);
      this.neighborCache.set(cacheKey, body);
      renderNeighborPanels(this.elements.wordPanel, this.elements.embPanel, body, {
        ne: this.state.ne,
        currentLang: record.lang,
      }, this.callbacks);
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      if (err instanceof ApiError && err.status === 409) {
        renderNeighborPanels(this.elements.wordPanel, this.elements.embPanel, null, {
          ne: this.state.ne,
          error: "this document has no indexed terms, so it has no neighbors",
        }, this.callbacks);
        return;
      }
      renderNeighborPanels(this.elements.wordPanel, this.elements.embPanel, null, {
        ne: this.state.ne,
        error: "could not load neighbors",
      }, this.callbacks);
    }
  }

  private scheduleSearch(): void {
    if (this.searchTimer) clearTimeout(this.searchTimer);
    const query = this.elements.searchInput.value.trim();
    if (!query) {
      renderSearchResults(this.elements.searchResults, null, this.callbacks);
      return;
    }
    this.searchTimer = setTimeout(() => void this.runSearch(query), SEARCH_DEBOUNCE_MS);
  }

  async runSearch(query: string): Promise<void> {
    try {
      const body = await this.client.search(query, 10);
      renderSearchResults(this.elements.searchResults, body, this.callbacks);
    } catch (err) {
      if (err instanceof ApiError && err.code === "no_lexicon_terms") {
        renderSearchResults(this.elements.searchResults, null, this.callbacks,
          "no lexicon terms in query");
        return;
      }
      renderSearchResults(this.elements.searchResults, null, this.callbacks,
        "search unavailable");
    }
  }
}

export function browserUrlHost(win: Window): UrlHost {
  return {
    getSearch: () => win.location.search,
    push: (query) => win.history.pushState(null, "", `?${query}`),
    replace: (query) => win.history.replaceState(null, "", `?${query}`),
    onPop: (callback) => win.addEventListener("popstate", callback),
  };
}
