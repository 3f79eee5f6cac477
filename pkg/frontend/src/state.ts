/** Session state and its URL round trip.
 *
 * The whole view (current document, the two counts, and the exploration
 * trail) serializes into the query string, so any position in a session is
 * a shareable, bookmarkable link. The trail is append-only while exploring.
 */

export type HopSource = "word" | "embedding" | "both" | "search";

export interface TrailHop {
  id: string;
  via: HopSource;
}

export interface ExplorerState {
  doc: string | null;
  nw: number;
  ne: number;
  trail: TrailHop[];
}

const SOURCES: HopSource[] = ["word", "embedding", "both", "search"];

export function serializeState(state: ExplorerState): string {
  const params = new URLSearchParams();
  if (state.doc !== null) params.set("doc", state.doc);
  params.set("nw", String(state.nw));
  params.set("ne", String(state.ne));
  if (state.trail.length > 0) {
    params.set(
      "trail",
      state.trail.map((h) => `${encodeURIComponent(h.id)}:${h.via}`).join(","),
    );
  }
  return params.toString();
}

export function parseState(search: string, defaults: { nw: number; ne: number }): ExplorerState {
  const params = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
  const parseCount = (raw: string | null, fallback: number) => {
    const value = raw === null ? NaN : Number(raw);
    return Number.isInteger(value) && value >= 0 ? value : fallback;
  };
  const trail: TrailHop[] = [];
  for (const piece of (params.get("trail") ?? "").split(",")) {
    if (!piece) continue;
    const sep = piece.lastIndexOf(":");
    if (sep <= 0) continue;
    const via = piece.slice(sep + 1) as HopSource;
    if (!SOURCES.includes(via)) continue;
    trail.push({ id: decodeURIComponent(piece.slice(0, sep)), via });
  }
  return {
    doc: params.get("doc"),
    nw: parseCount(params.get("nw"), defaults.nw),
    ne: parseCount(params.get("ne"), defaults.ne),
    trail,
  };
}

export function clampCounts(nw: number, ne: number, cacheK: number): { nw: number; ne: number; clamped: boolean } {
  const cw = Math.min(nw, cacheK);
  const ce = Math.min(ne, cacheK);
  return { nw: cw, ne: ce, clamped: cw !== nw || ce !== ne };
}
