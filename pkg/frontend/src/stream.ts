// Live statistics feed: SSE when the browser has it, long-poll otherwise.
// Either path delivers the same StatsPayload objects and ends after the
// final (post-close) snapshot.

import type { StatsPayload, TeacherApi } from "./api.js";

export interface StatsFeedHandlers {
  onStats: (stats: StatsPayload) => void;
  onEnd: () => void;
  onError?: (err: unknown) => void;
}

export function subscribeStats(api: TeacherApi, windowId: string,
                               h: StatsFeedHandlers): () => void {
  if (typeof EventSource !== "undefined") {
    return sseFeed(api, windowId, h);
  }
  return pollFeed(api, windowId, h);
}

function sseFeed(api: TeacherApi, windowId: string,
                 h: StatsFeedHandlers): () => void {
  const source = new EventSource(api.streamUrl(windowId));
  source.onmessage = (ev) => {
    const stats = JSON.parse(ev.data) as StatsPayload;
    h.onStats(stats);
    if (stats.final) {
      source.close();
      h.onEnd();
    }
  };
  source.onerror = (ev) => h.onError?.(ev);
  return () => source.close();
}

export function pollFeed(api: TeacherApi, windowId: string,
                         h: StatsFeedHandlers, timeoutMs = 15000): () => void {
  let stopped = false;
  let version = -1;

  const loop = async () => {
    while (!stopped) {
      try {
        const stats = version < 0
          ? await api.stats(windowId)
          : await api.pollStats(windowId, version, timeoutMs);
        if (stopped) return;
        if (stats.version !== undefined && stats.version !== version) {
          version = stats.version;
          h.onStats(stats);
        }
        if (stats.final) {
          h.onEnd();
          return;
        }
      } catch (err) {
        if (stopped) return;
        h.onError?.(err);
        await new Promise((r) => setTimeout(r, 2000));
      }
    }
  };
  void loop();
  return () => { stopped = true; };
}
