// Browser console wiring: binds the REST/SSE client, the view-model and
// the canvas renderer to the page controls.

import { Client, EventFeed, ApiError } from "./api.js";
import {
  applyEvent,
  applySnapshot,
  controls,
  draftAsBody,
  emptyState,
  toggleVerdict,
  type ViewState,
} from "./state.js";
import { candidateTooltip, render } from "./render.js";

const CANVAS_PX = 640;

const params = new URLSearchParams(location.search);
const baseUrl =
  params.get("api") ??
  localStorage.getItem("gridplan-api") ??
  `${location.protocol}//${location.host}`;
localStorage.setItem("gridplan-api", baseUrl);

const client = new Client(baseUrl);
let state: ViewState = emptyState();
let feed: EventFeed | null = null;
let autopilotWanted = true;

const $ = (id: string) => document.getElementById(id)!;
const canvas = $("grid") as HTMLCanvasElement;
canvas.width = CANVAS_PX;
canvas.height = CANVAS_PX;
const ctx = canvas.getContext("2d")!;

function banner(text: string, kind: "info" | "error" = "info"): void {
  const el = $("banner");
  el.textContent = text;
  el.className = `banner ${kind}`;
  el.style.display = text ? "block" : "none";
}

function repaint(): void {
  render(ctx, state, CANVAS_PX);
  $("phase").textContent = state.phase ?? "-";
  $("metrics").textContent = Object.entries(state.metrics)
    .map(([k, v]) => `${k}: ${v}`)
    .join("  ");
  const offline = feed !== null && !state.connected;
  const gate = controls(state, offline);
  ($("step") as HTMLButtonElement).disabled = !gate.canStep;
  ($("step-to-pause") as HTMLButtonElement).disabled = !gate.canStepToPause;
  ($("submit") as HTMLButtonElement).disabled = !gate.canSubmitVerdicts;
  ($("reset") as HTMLButtonElement).disabled = !gate.canReset;
  renderTranscript();
  renderProposal();
}

function renderTranscript(): void {
  const box = $("transcript");
  box.innerHTML = "";
  for (const entry of state.transcript) {
    const div = document.createElement("div");
    div.className = `say ${entry.role}`;
    div.textContent = `${entry.role}: ${entry.text}`;
    box.appendChild(div);
  }
  box.scrollTop = box.scrollHeight;
}

function renderProposal(): void {
  const box = $("proposal");
  box.innerHTML = "";
  for (const cand of state.pending) {
    const row = document.createElement("label");
    row.className = "candidate";
    row.title = candidateTooltip(cand);
    const check = document.createElement("input");
    check.type = "checkbox";
    check.checked = state.verdictDraft.get(cand.id) ?? true;
    check.disabled = state.verdictInFlight;
    check.onchange = () => {
      toggleVerdict(state, cand.id);
      repaint();
    };
    row.appendChild(check);
    row.appendChild(document.createTextNode(" " + candidateTooltip(cand)));
    box.appendChild(row);
  }
}

async function resync(): Promise<void> {
  if (!state.sessionId) return;
  applySnapshot(state, await client.getSession(state.sessionId));
  repaint();
}

function subscribe(): void {
  feed?.close();
  if (!state.sessionId) return;
  feed = new EventFeed(
    client,
    state.sessionId,
    state.seq,
    (event) => {
      if (!applyEvent(state, event)) {
        void resync(); // gap: fall back to a snapshot
      }
      repaint();
    },
    (connected) => {
      state.connected = connected;
      banner(connected ? "" : "stream disconnected, retrying...", "error");
    },
    (url) => {
      const es = new EventSource(url);
      const like = {
        onmessage: null as ((ev: { data: string; lastEventId: string }) => void) | null,
        onerror: null as ((ev: unknown) => void) | null,
        close: () => es.close(),
      };
      es.onmessage = (ev) =>
        like.onmessage?.({ data: ev.data, lastEventId: ev.lastEventId });
      es.onerror = (ev) => like.onerror?.(ev);
      return like;
    },
  );
}

async function createSession(): Promise<void> {
  const mapName = ($("map-select") as HTMLSelectElement).value;
  const planner = ($("planner-select") as HTMLSelectElement).value;
  const advisor = planner.startsWith("llm") ? "scripted" : "none";
  try {
    const snap = await client.createSession({
      map_name: mapName,
      planner,
      advisor,
      autopilot: autopilotWanted,
    });
    state = emptyState();
    state.sessionId = snap.id;
    applySnapshot(state, snap);
    subscribe();
    banner("");
    repaint();
  } catch (err) {
    banner(err instanceof ApiError ? err.message : String(err), "error");
  }
}

async function step(count: number): Promise<void> {
  if (!state.sessionId) return;
  try {
    await client.step(state.sessionId, count);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) return; // busy/paused
    banner(String(err), "error");
  }
}

async function submitVerdicts(): Promise<void> {
  if (!state.sessionId || state.verdictInFlight) return;
  state.verdictInFlight = true;
  repaint();
  try {
    await client.submitVerdicts(state.sessionId, draftAsBody(state).verdicts);
  } catch (err) {
    state.verdictInFlight = false;
    banner(err instanceof ApiError ? err.message : String(err), "error");
  }
  repaint();
}

async function boot(): Promise<void> {
  const select = $("map-select") as HTMLSelectElement;
  try {
    for (const info of await client.listMaps()) {
      const opt = document.createElement("option");
      opt.value = info.name;
      opt.textContent = `${info.name} (${info.width}x${info.height})`;
      select.appendChild(opt);
    }
  } catch (err) {
    banner(`cannot reach ${baseUrl}: ${err}`, "error");
  }

  $("create").onclick = () => void createSession();
  $("step").onclick = () => void step(1);
  $("step-to-pause").onclick = () => void step(10_000);
  $("submit").onclick = () => void submitVerdicts();
  $("reset").onclick = async () => {
    if (state.sessionId) {
      feed?.close();
      await client.deleteSession(state.sessionId).catch(() => undefined);
      state = emptyState();
      repaint();
    }
  };
  ($("autopilot") as HTMLInputElement).onchange = (ev) => {
    autopilotWanted = (ev.target as HTMLInputElement).checked;
  };
  repaint();
}

void boot();
