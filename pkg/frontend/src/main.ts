// Page wiring for the annotation tool. All labeling logic lives in
// session.ts; this file only reflects session state into the DOM and maps
// clicks/keys onto session calls.

import { AnnotatorSession, INTENTS, Intent } from "./session.js";

const LABELS: Record<Intent, string> = {
  I: "Informational",
  T: "Transactional",
  N: "Navigational",
};

const KEY_TO_INTENT: Record<string, Intent> = { "1": "I", "2": "T", "3": "N" };

let session: AnnotatorSession | null = null;
let progressTimer: number | undefined;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function render(): void {
  if (!session) {
    return;
  }
  const state = session.state;
  const queryEl = el<HTMLDivElement>("query");
  const controlsEl = el<HTMLDivElement>("controls");
  const statusEl = el<HTMLDivElement>("status");
  const submitBtn = el<HTMLButtonElement>("submit");

  statusEl.textContent = "";
  statusEl.classList.remove("error");

  if (state.kind === "done") {
    queryEl.textContent = "All queries labeled — thank you!";
    controlsEl.innerHTML = "";
    submitBtn.hidden = true;
    el<HTMLAnchorElement>("export-link").hidden = false;
    return;
  }
  if (state.kind === "error") {
    queryEl.textContent = "";
    statusEl.textContent = state.message;
    statusEl.classList.add("error");
    const banner = el<HTMLDivElement>("retry-banner");
    banner.hidden = false;
    el<HTMLButtonElement>("retry").onclick = async () => {
      banner.hidden = true;
      await state.retry();
      render();
    };
    return;
  }
  if (state.kind !== "annotating") {
    return;
  }

  el<HTMLDivElement>("retry-banner").hidden = true;
  el<HTMLAnchorElement>("export-link").hidden = true;
  submitBtn.hidden = false;
  queryEl.textContent = state.task.tokens.join(" ");
  el<HTMLSpanElement>("mode").textContent =
    state.task.mode === "single-intent" ? "pick exactly one intent" : "pick all intents that apply";

  // checkboxes in multi mode, radio buttons in single mode
  const inputType = state.task.mode === "single-intent" ? "radio" : "checkbox";
  controlsEl.innerHTML = "";
  for (const intent of INTENTS) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = inputType;
    input.name = "intent";
    input.value = intent;
    input.checked = session.isSelected(intent);
    input.onchange = () => {
      session!.toggle(intent);
      render();
    };
    label.appendChild(input);
    label.appendChild(document.createTextNode(` ${LABELS[intent]} (${INTENTS.indexOf(intent) + 1})`));
    controlsEl.appendChild(label);
  }
  submitBtn.disabled = !session.canSubmit();
}

async function submit(): Promise<void> {
  if (!session || !session.canSubmit()) {
    return;
  }
  const outcome = await session.submit();
  render();
  if (!outcome.ok && outcome.message) {
    const statusEl = el<HTMLDivElement>("status");
    statusEl.textContent = outcome.message;
    statusEl.classList.add("error");
  }
  void refreshProgress();
}

async function refreshProgress(): Promise<void> {
  if (!session) {
    return;
  }
  const progress = await session.progress();
  if (!progress) {
    return;
  }
  el<HTMLDivElement>("progress").textContent =
    `${progress.labeled} / ${progress.total} labels — ` +
    `${progress.fully_annotated} queries fully annotated ` +
    `(GT-2: ${progress.gt2_count}, GT-3: ${progress.gt3_count})`;
}

function onKey(ev: KeyboardEvent): void {
  if (!session || session.state.kind !== "annotating") {
    return;
  }
  const target = ev.target as HTMLElement | null;
  if (target && target.tagName === "INPUT" && (target as HTMLInputElement).type === "text") {
    return;
  }
  const intent = KEY_TO_INTENT[ev.key];
  if (intent) {
    session.toggle(intent);
    render();
    ev.preventDefault();
  } else if (ev.key === "Enter") {
    void submit();
    ev.preventDefault();
  }
}

function begin(): void {
  const idInput = el<HTMLInputElement>("annotator-id");
  const id = idInput.value.trim();
  if (!id) {
    idInput.focus();
    return;
  }
  session = new AnnotatorSession(id, (url, init) => fetch(url, init));
  el<HTMLDivElement>("login").hidden = true;
  el<HTMLDivElement>("workspace").hidden = false;
  void session.start().then(() => {
    render();
    void refreshProgress();
  });
  progressTimer = window.setInterval(() => void refreshProgress(), 5000);
}

window.addEventListener("DOMContentLoaded", () => {
  el<HTMLButtonElement>("begin").onclick = begin;
  el<HTMLInputElement>("annotator-id").onkeydown = (ev) => {
    if (ev.key === "Enter") {
      begin();
    }
  };
  el<HTMLButtonElement>("submit").onclick = () => void submit();
  document.addEventListener("keydown", onKey);
});

window.addEventListener("unload", () => {
  if (progressTimer !== undefined) {
    window.clearInterval(progressTimer);
  }
});
