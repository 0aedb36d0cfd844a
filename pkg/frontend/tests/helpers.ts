import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { SessionEvent, WireSession } from "../src/types.js";

const HERE = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(HERE, "fixtures", name), "utf-8")) as T;
}

export interface InteractiveCapture {
  create: WireSession;
  steps: { events: SessionEvent[]; phase: string; seq: number }[];
  verdicts: { event: SessionEvent; phase: string; seq: number }[];
  snapshots: WireSession[];
}

export interface AutopilotCapture {
  create: WireSession;
  steps: { events: SessionEvent[]; phase: string; seq: number }[];
  final: WireSession;
}

/** All events of an interactive capture in sequence order. */
export function interactiveEvents(cap: InteractiveCapture): SessionEvent[] {
  const all = [
    ...cap.steps.flatMap((s) => s.events),
    ...cap.verdicts.map((v) => v.event),
  ];
  return all.sort((a, b) => a.seq - b.seq);
}

export function autopilotEvents(cap: AutopilotCapture): SessionEvent[] {
  return cap.steps.flatMap((s) => s.events);
}
