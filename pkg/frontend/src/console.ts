// Teacher console: compose groups, lock/unlock, open and close windows,
// publish, and watch the bars move. Nothing renders optimistically; every
// state change on screen follows a 2xx from the server.

import { TeacherApi, type GroupView, type StatsPayload, type WindowView,
         RequestFailed } from "./api.js";
import { renderBars } from "./bars.js";
import { Countdown, formatDisplay, startTicker } from "./countdown.js";
import { subscribeStats } from "./stream.js";

const $ = (id: string) => document.getElementById(id) as HTMLElement;
const field = (id: string) => ($(id) as HTMLInputElement).value;

let api: TeacherApi | null = null;
let activeWindow: WindowView | null = null;
let stopFeed: (() => void) | null = null;
let stopTicker: (() => void) | null = null;

function fail(err: unknown): void {
  const el = $("error");
  el.textContent = err instanceof RequestFailed
    ? `${err.body.error}: ${JSON.stringify(err.body.detail ?? "")}`
    : String(err);
}

function clearError(): void {
  $("error").textContent = "";
}

async function refreshGroups(): Promise<void> {
  if (!api) return;
  // group list is rebuilt from the question list response and local compose
  // results; the server has no list-groups endpoint beyond what we created
  const host = $("groups");
  host.querySelectorAll(".group").forEach((n) => n.remove());
  for (const g of knownGroups.values()) {
    host.appendChild(groupRow(g));
  }
}

const knownGroups = new Map<string, GroupView>();

function groupRow(g: GroupView): HTMLElement {
  const row = document.createElement("div");
  row.className = "group";
  const title = document.createElement("strong");
  title.textContent = g.title;
  const badge = document.createElement("span");
  badge.className = "badge";
  badge.textContent = g.state === "locked" ? " [locked]" : "";
  row.append(title, badge, ` (${g.items.length} questions) `);

  const lockBtn = document.createElement("button");
  lockBtn.textContent = g.state === "locked" ? "unlock" : "lock";
  lockBtn.onclick = async () => {
    clearError();
    try {
      const updated = await api!.setGroupState(
        g.group_id, g.state === "locked" ? "unlocked" : "locked");
      knownGroups.set(updated.group_id, updated);
      await refreshGroups();
    } catch (err) { fail(err); }
  };

  const openBtn = document.createElement("button");
  openBtn.textContent = "open window";
  openBtn.onclick = async () => {
    clearError();
    const dur = field("duration");
    try {
      const win = await api!.openWindow(g.group_id, dur ? Number(dur) : null);
      watchWindow(win);
    } catch (err) { fail(err); }
  };

  row.append(lockBtn, " ", openBtn);
  return row;
}

function renderStats(stats: StatsPayload): void {
  const host = $("live");
  host.textContent = "";
  for (const q of stats.questions) {
    const head = document.createElement("h3");
    head.textContent = `${q.text} (${q.respondent_count} answered)`;
    host.appendChild(head);
    const chart = document.createElement("div");
    renderBars(chart, q.options, 300);
    host.appendChild(chart);
  }
}

function watchWindow(win: WindowView): void {
  stopFeed?.();
  stopTicker?.();
  activeWindow = win;
  $("window-info").textContent =
    `window ${win.window_id} - join code ${win.join_code ?? "n/a"} - ` +
    `share /?window=${win.window_id}`;

  const cd = new Countdown();
  stopTicker = startTicker(cd, {
    fetchStatus: async () => {
      const res = await fetch(`/api/windows/${win.window_id}/status`);
      return res.json();
    },
    onTick: (d) => { $("countdown").textContent = formatDisplay(d); },
    onClosed: () => { $("countdown").textContent = "closed"; },
  });

  stopFeed = subscribeStats(api!, win.window_id, {
    onStats: renderStats,
    onEnd: () => { $("countdown").textContent = "closed"; },
    onError: fail,
  });
}

export function boot(): void {
  ($("login-form") as HTMLFormElement).onsubmit = async (ev) => {
    ev.preventDefault();
    clearError();
    try {
      api = await TeacherApi.login(field("password"));
      $("login").hidden = true;
      $("console").hidden = false;
    } catch (err) { fail(err); }
  };

  ($("question-form") as HTMLFormElement).onsubmit = async (ev) => {
    ev.preventDefault();
    clearError();
    try {
      const q = await api!.createQuestion(
        field("q-text"),
        field("q-kind"),
        field("q-options").split("\n").map((s) => s.trim()).filter(Boolean));
      const item = document.createElement("option");
      item.value = q.question_id;
      item.textContent = q.text;
      $("q-pick").appendChild(item);
    } catch (err) { fail(err); }
  };

  ($("group-form") as HTMLFormElement).onsubmit = async (ev) => {
    ev.preventDefault();
    clearError();
    const picked = Array.from(($("q-pick") as HTMLSelectElement).selectedOptions)
      .map((o) => o.value);
    try {
      const g = await api!.composeGroup(field("g-title"), picked,
        field("g-visibility"));
      knownGroups.set(g.group_id, g);
      await refreshGroups();
    } catch (err) { fail(err); }
  };

  ($("close-btn") as HTMLButtonElement).onclick = async () => {
    clearError();
    if (!activeWindow) return;
    try { await api!.closeWindow(activeWindow.window_id); }
    catch (err) { fail(err); }
  };

  ($("publish-btn") as HTMLButtonElement).onclick = async () => {
    clearError();
    if (!activeWindow) return;
    try { activeWindow = await api!.publish(activeWindow.window_id); }
    catch (err) { fail(err); }
  };
}

boot();
