// View-model and pure update logic. The server is the single source of
// truth: this module only projects snapshots and applies event deltas so
// the grid stays live between resyncs — no planning logic lives here.

import { rleDecode } from "./rle.js";
import type {
  Candidate,
  CellClass,
  Phase,
  SessionEvent,
  WireSession,
} from "./types.js";

export interface ViewState {
  sessionId: string | null;
  phase: Phase | null;
  planner: string;
  autopilot: boolean;
  width: number;
  height: number;
  mapName: string;
  cells: CellClass[];
  pathGradient: Map<string, number>; // "x,y" -> path index
  pending: Candidate[];
  // staged human verdicts for the pending proposal, id -> accept
  verdictDraft: Map<number, boolean>;
  verdictInFlight: boolean;
  transcript: { role: string; text: string }[];
  metrics: Record<string, number>;
  subgoal: [number, number] | null;
  seq: number;
  connected: boolean;
  failureReason: string | null;
}

export function emptyState(): ViewState {
  return {
    sessionId: null,
    phase: null,
    planner: "astar",
    autopilot: true,
    width: 0,
    height: 0,
    mapName: "",
    cells: [],
    pathGradient: new Map(),
    pending: [],
    verdictDraft: new Map(),
    verdictInFlight: false,
    transcript: [],
    metrics: {},
    subgoal: null,
    seq: 0,
    connected: false,
    failureReason: null,
  };
}

export function fromSnapshot(snap: WireSession): ViewState {
  const state = emptyState();
  state.sessionId = snap.id;
  applySnapshot(state, snap);
  return state;
}

export function applySnapshot(state: ViewState, snap: WireSession): void {
  state.phase = snap.phase;
  state.planner = snap.planner;
  state.autopilot = snap.autopilot;
  state.width = snap.width;
  state.height = snap.height;
  state.mapName = snap.map_name;
  state.cells = rleDecode(snap.grid);
  state.pathGradient = new Map(
    snap.path_gradient.map((g) => [key(g.cell[0], g.cell[1]), g.index]),
  );
  state.pending = snap.pending;
  state.verdictDraft = defaultDraft(snap.pending);
  state.verdictInFlight = false;
  state.transcript = snap.transcript;
  state.metrics = snap.metrics;
  state.seq = snap.seq;
  state.failureReason = snap.failure_reason;
}

export function key(x: number, y: number): string {
  return `${x},${y}`;
}

function defaultDraft(pending: Candidate[]): Map<number, boolean> {
  return new Map(pending.map((c) => [c.id, true])); // default accept
}

function paint(state: ViewState, cell: [number, number], cls: CellClass): void {
  const [x, y] = cell;
  const i = y * state.width + x;
  const current = state.cells[i];
  if (current === "start" || current === "goal" || current === "obstacle") return;
  state.cells[i] = cls;
}

// Events arrive in sequence order; gaps mean a missed message and the
// caller should resync from a snapshot instead.
export function applyEvent(state: ViewState, event: SessionEvent): boolean {
  if (event.seq !== state.seq + 1) return false;
  state.seq = event.seq;
  const p = event.payload;
  switch (event.kind) {
    case "Expansion":
      paint(state, p.cell, "closed");
      for (const opened of p.opened ?? []) paint(state, opened, "open");
      for (const v of p.verdicts ?? []) {
        paint(state, v.cell, v.accept ? "open" : "deferred");
      }
      break;
    case "Proposal":
      paint(state, p.cell, "closed");
      state.phase = "await_verdict";
      state.pending = p.candidates;
      state.verdictDraft = defaultDraft(p.candidates);
      state.verdictInFlight = false;
      break;
    case "VerdictApplied":
      for (const v of p.verdicts) {
        paint(state, v.cell, v.accept ? "open" : "deferred");
      }
      state.pending = [];
      state.verdictDraft = new Map();
      state.verdictInFlight = false;
      state.phase = "expanding";
      break;
    case "SubgoalChosen":
      state.subgoal = p.subgoal;
      state.phase = "expanding";
      break;
    case "StageComplete":
      state.phase = "await_seed";
      break;
    case "PathFound": {
      state.phase = "done";
      state.pathGradient = new Map();
      (p.path as [number, number][]).forEach((cell, index) => {
        paint(state, cell, "path");
        state.pathGradient.set(key(cell[0], cell[1]), index);
      });
      state.metrics = p.metrics ?? state.metrics;
      break;
    }
    case "Failure":
      state.phase = "failed";
      state.failureReason = p.reason ?? "failed";
      break;
  }
  return true;
}

export function toggleVerdict(state: ViewState, candidateId: number): void {
  if (state.verdictInFlight) return;
  const current = state.verdictDraft.get(candidateId);
  if (current === undefined) return;
  state.verdictDraft.set(candidateId, !current);
}

export function draftAsBody(state: ViewState): {
  verdicts: { id: number; accept: boolean }[];
} {
  return {
    verdicts: state.pending.map((c) => ({
      id: c.id,
      accept: state.verdictDraft.get(c.id) ?? true,
    })),
  };
}

// Controls mirror the server's phase machine: nothing clickable that the
// server would reject with a wrong-phase error.
export interface Controls {
  canCreate: boolean;
  canStep: boolean;
  canStepToPause: boolean;
  canSubmitVerdicts: boolean;
  canReset: boolean;
}

export function controls(state: ViewState, offline = false): Controls {
  const live =
    !offline &&
    state.sessionId !== null &&
    state.phase !== null &&
    state.phase !== "done" &&
    state.phase !== "failed";
  const stepping =
    live && state.phase !== "await_verdict";
  return {
    canCreate: !offline,
    canStep: stepping,
    canStepToPause: stepping,
    canSubmitVerdicts:
      live && state.phase === "await_verdict" && !state.verdictInFlight &&
      state.pending.length > 0,
    canReset: state.sessionId !== null,
  };
}

// Expansion sequence as painted so far; used to compare interactive
// accept-all runs against autopilot runs in tests.
export function expansionCells(events: SessionEvent[]): string[] {
  const out: string[] = [];
  for (const e of events) {
    if (e.kind === "Expansion" || e.kind === "Proposal") {
      out.push(key(e.payload.cell[0], e.payload.cell[1]));
    }
  }
  return out;
}
