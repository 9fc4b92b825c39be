// Student answer pad: join by window id (+ code for protected groups),
// render the pinned questions, submit, and go read-only at close.

import { PadApi, type QuestionView, RequestFailed } from "./api.js";
import { Countdown, formatDisplay, startTicker } from "./countdown.js";
import { PadQuestion } from "./padState.js";
import { renderBars } from "./bars.js";

const $ = (id: string) => document.getElementById(id) as HTMLElement;

function note(text: string, isError = false): void {
  const el = $("note");
  el.textContent = text;
  el.className = isError ? "error" : "";
}

interface Wired {
  state: PadQuestion;
  inputs: HTMLInputElement[];
  badge: HTMLElement;
}

function renderQuestion(api: PadApi, q: QuestionView, host: HTMLElement): Wired {
  const state = new PadQuestion(q.question_id, q.kind,
    q.options.map((o) => o.option_id));
  const box = document.createElement("fieldset");
  const legend = document.createElement("legend");
  legend.textContent = q.text;
  box.appendChild(legend);

  const inputs: HTMLInputElement[] = [];
  for (const opt of q.options) {
    const row = document.createElement("label");
    const input = document.createElement("input");
    input.type = q.kind === "single" ? "radio" : "checkbox";
    input.name = q.question_id;
    input.value = opt.option_id;
    input.addEventListener("change", () => {
      state.toggle(opt.option_id);
      void send();
    });
    row.append(input, document.createTextNode(" " + opt.label));
    box.appendChild(row);
    inputs.push(input);
  }

  const badge = document.createElement("p");
  badge.className = "badge";
  badge.textContent = "Draft";
  box.appendChild(badge);
  host.appendChild(box);

  let seq = 0;
  async function send(): Promise<void> {
    const selection = state.beginSubmit();
    if (selection === null) {
      badge.textContent = state.submitState;
      return;
    }
    seq += 1;
    let outcome: "accepted" | "replaced" | "rejected" = "rejected";
    try {
      const receipt = await api.submit(q.question_id, selection,
        `${q.question_id}:${seq}`);
      outcome = receipt.replaced_prior ? "replaced" : "accepted";
    } catch (err) {
      if (err instanceof RequestFailed && err.body.error === "WindowClosed") {
        state.close();
      } else {
        note(err instanceof Error ? err.message : String(err), true);
      }
    }
    if (state.finishSubmit(outcome)) void send();
    badge.textContent = state.submitState;
    if (state.inputsDisabled) inputs.forEach((i) => { i.disabled = true; });
  }

  return { state, inputs, badge };
}

async function showResults(api: PadApi): Promise<void> {
  try {
    const stats = await api.results();
    const host = $("results");
    host.textContent = "";
    for (const q of stats.questions) {
      const head = document.createElement("h3");
      head.textContent = `${q.text} (${q.respondent_count} answered)`;
      host.appendChild(head);
      const chart = document.createElement("div");
      renderBars(chart, q.options, 300);
      host.appendChild(chart);
    }
  } catch (err) {
    if (!(err instanceof RequestFailed && err.body.error === "NotPublished")) {
      throw err;
    }
  }
}

export async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const windowId = params.get("window");
  if (!windowId) {
    note("missing ?window=... in the link", true);
    return;
  }
  let api: PadApi;
  try {
    api = await PadApi.join(windowId, params.get("code") ?? undefined);
  } catch (err) {
    note(err instanceof Error ? err.message : String(err), true);
    return;
  }

  const view = await api.view();
  $("title").textContent = view.group.title;
  const wired = view.questions.map((q) => renderQuestion(api, q, $("questions")));

  const cd = new Countdown();
  startTicker(cd, {
    fetchStatus: () => api.status(),
    onTick: (d) => { $("countdown").textContent = formatDisplay(d); },
    onClosed: () => {
      for (const w of wired) {
        w.state.close();
        w.inputs.forEach((i) => { i.disabled = true; });
      }
      note("answering is closed");
      void showResults(api);
    },
  });
}

boot().catch((err) => note(String(err), true));
