import type { CellClass } from "./types.js";

// Grid classes travel run-length encoded: [[count, class], ...]
export function rleDecode(runs: [number, CellClass][]): CellClass[] {
  const out: CellClass[] = [];
  for (const [count, cls] of runs) {
    for (let i = 0; i < count; i++) out.push(cls);
  }
  return out;
}
