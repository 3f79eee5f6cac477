/** DOM rendering. Pure functions from data to elements; all interaction is
 * routed through the callbacks the controller passes in. */

import { DocumentRecord, NeighborEntry, NeighborsResponse, SearchResponse } from "./api.js";
import { HopSource, TrailHop } from "./state.js";

export interface ViewCallbacks {
  onSelectNeighbor(id: string, via: HopSource): void;
  onTrailJump(index: number): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function langBadge(doc: Document, lang: string, currentLang?: string): HTMLElement {
  const cross = currentLang !== undefined && lang !== currentLang;
  const badge = el(doc, "span", cross ? "badge lang cross" : "badge lang", lang);
  if (cross) badge.title = "different language than the current document";
  return badge;
}

export function renderDocumentPanel(
  container: HTMLElement,
  record: DocumentRecord | null,
  error?: string,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (error) {
    container.appendChild(el(doc, "div", "inline-error", error));
    return;
  }
  if (!record) return;
  const card = el(doc, "article", "doc-card");
  const head = el(doc, "header");
  head.appendChild(el(doc, "span", "doc-id", record.id));
  head.appendChild(langBadge(doc, record.lang));
  card.appendChild(head);
  if (record.image_url) {
    const img = el(doc, "img", "doc-image");
    img.src = record.image_url;
    img.alt = "";
    card.appendChild(img);
  }
  card.appendChild(el(doc, "p", "doc-text", record.text));
  if (record.meta) {
    const dl = el(doc, "dl", "doc-meta");
    for (const [key, value] of Object.entries(record.meta)) {
      dl.appendChild(el(doc, "dt", undefined, key));
      dl.appendChild(el(doc, "dd", undefined, value));
    }
    card.appendChild(dl);
  }
  container.appendChild(card);
}

function neighborItem(
  doc: Document,
  entry: NeighborEntry,
  via: HopSource,
  inBoth: boolean,
  currentLang: string | undefined,
  callbacks: ViewCallbacks,
): HTMLElement {
  const item = el(doc, "li", "neighbor");
  const button = el(doc, "button", "neighbor-link");
  button.type = "button";
  button.dataset.docId = entry.id;
  button.dataset.via = via;
  button.addEventListener("click", () => callbacks.onSelectNeighbor(entry.id, inBoth ? "both" : via));
  const head = el(doc, "span", "neighbor-head");
  head.appendChild(el(doc, "span", "score", entry.score.toFixed(3)));
  head.appendChild(langBadge(doc, entry.lang, currentLang));
  if (inBoth) {
    const badge = el(doc, "span", "badge both", "both");
    badge.title = "appears in both neighbor lists";
    head.appendChild(badge);
  }
  button.appendChild(head);
  button.appendChild(el(doc, "span", "snippet", entry.snippet));
  if (entry.image_url) {
    const img = el(doc, "img", "thumb");
    img.src = entry.image_url;
    img.alt = "";
    button.appendChild(img);
  }
  item.appendChild(button);
  return item;
}

export function renderNeighborPanels(
  wordContainer: HTMLElement,
  embContainer: HTMLElement,
  body: NeighborsResponse | null,
  options: { ne: number; currentLang?: string; error?: string },
  callbacks: ViewCallbacks,
): void {
  const doc = wordContainer.ownerDocument;
  wordContainer.replaceChildren();
  embContainer.replaceChildren();
  if (options.error) {
    wordContainer.appendChild(el(doc, "div", "inline-error", options.error));
    return;
  }
  if (!body) return;
  const wordIds = new Set(body.word.map((e) => e.id));
  const embIds = new Set(body.emb.map((e) => e.id));

  const wordList = el(doc, "ol", "neighbor-list word");
  for (const entry of body.word) {
    wordList.appendChild(
      neighborItem(doc, entry, "word", embIds.has(entry.id), options.currentLang, callbacks),
    );
  }
  wordContainer.appendChild(wordList);
  if (body.word.length === 0) {
    wordContainer.appendChild(el(doc, "p", "panel-note", "no word neighbors"));
  }

  if (options.ne === 0) {
    embContainer.appendChild(el(doc, "p", "panel-note", "disabled"));
    return;
  }
  const embList = el(doc, "ol", "neighbor-list emb");
  for (const entry of body.emb) {
    embList.appendChild(
      neighborItem(doc, entry, "embedding", wordIds.has(entry.id), options.currentLang, callbacks),
    );
  }
  embContainer.appendChild(embList);
  if (body.emb.length === 0) {
    embContainer.appendChild(el(doc, "p", "panel-note", "no embedding neighbors"));
  }
}

export function renderTrail(
  container: HTMLElement,
  trail: TrailHop[],
  callbacks: ViewCallbacks,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  trail.forEach((hop, index) => {
    if (index > 0) {
      container.appendChild(el(doc, "span", "trail-sep", "→"));
    }
    const chip = el(doc, "button", `trail-hop via-${hop.via}`);
    chip.type = "button";
    chip.textContent = hop.id;
    chip.title = `reached via ${hop.via}`;
    chip.addEventListener("click", () => callbacks.onTrailJump(index));
    container.appendChild(chip);
  });
}

export function renderSearchResults(
  container: HTMLElement,
  body: SearchResponse | null,
  callbacks: ViewCallbacks,
  hint?: string,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (hint) {
    container.appendChild(el(doc, "p", "panel-note", hint));
    return;
  }
  if (!body) return;
  const list = el(doc, "ol", "search-results");
  for (const entry of body.results) {
    const item = el(doc, "li");
    const button = el(doc, "button", "neighbor-link");
    button.type = "button";
    button.dataset.docId = entry.id;
    button.addEventListener("click", () => callbacks.onSelectNeighbor(entry.id, "search"));
    button.appendChild(el(doc, "span", "score", entry.score.toFixed(3)));
    button.appendChild(langBadge(doc, entry.lang));
    button.appendChild(el(doc, "span", "snippet", entry.snippet));
    item.appendChild(button);
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderBanner(container: HTMLElement, message: string | null, onRetry?: () => void): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (!message) return;
  const banner = el(doc, "div", "banner");
  banner.appendChild(el(doc, "span", undefined, message));
  if (onRetry) {
    const retry = el(doc, "button", "retry", "retry");
    retry.type = "button";
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
  }
  container.appendChild(banner);
}
