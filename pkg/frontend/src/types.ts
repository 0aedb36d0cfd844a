// Wire types mirroring the session service JSON.

export type CellClass =
  | "free"
  | "obstacle"
  | "open"
  | "closed"
  | "deferred"
  | "path"
  | "start"
  | "goal";

export type Phase =
  | "init"
  | "await_seed"
  | "expanding"
  | "await_verdict"
  | "stage_done"
  | "done"
  | "failed";

export interface Candidate {
  id: number;
  cell: [number, number];
  f: number;
  g: number;
  h: number;
}

export interface WireSession {
  id: string;
  phase: Phase;
  planner: string;
  advisor: string;
  autopilot: boolean;
  map_name: string;
  width: number;
  height: number;
  grid: [number, CellClass][];
  path_gradient: { cell: [number, number]; index: number }[];
  metrics: Record<string, number>;
  pending: Candidate[];
  transcript: { role: string; text: string }[];
  seq: number;
  failure_reason: string | null;
}

export interface SessionEvent {
  seq: number;
  kind:
    | "Expansion"
    | "Proposal"
    | "VerdictNeeded"
    | "VerdictApplied"
    | "SubgoalChosen"
    | "StageComplete"
    | "PathFound"
    | "Failure";
  payload: any;
}

export interface MapInfo {
  name: string;
  width: number;
  height: number;
}

export interface StepResponse {
  events: SessionEvent[];
  phase: Phase;
  seq: number;
}
