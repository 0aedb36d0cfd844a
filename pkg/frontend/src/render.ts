// Canvas painting of the live grid. Colors follow the workbench
// convention: white free space, black obstacles, green search space
// (open and closed), hatched deferred cells, pink start, yellow goal,
// and the final path as a blue-to-red gradient by path position.

import { key, type ViewState } from "./state.js";
import type { CellClass } from "./types.js";

export const COLORS: Record<CellClass, string> = {
  free: "#ffffff",
  obstacle: "#1c1c1c",
  open: "#9be89b",
  closed: "#4caf50",
  deferred: "#d8d8d8",
  path: "#888888", // overridden by the gradient
  start: "#ff6fb5",
  goal: "#ffd94a",
};

export function pathColor(index: number, total: number): string {
  const t = total <= 1 ? 0 : index / (total - 1);
  const r = Math.round(40 + 205 * t);
  const b = Math.round(245 - 205 * t);
  return `rgb(${r},60,${b})`;
}

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
}

export function render(ctx: Ctx2D, state: ViewState, sizePx: number): void {
  if (state.width === 0) return;
  const cell = sizePx / Math.max(state.width, state.height);
  ctx.clearRect(0, 0, sizePx, sizePx);
  const total = state.pathGradient.size;
  for (let y = 0; y < state.height; y++) {
    for (let x = 0; x < state.width; x++) {
      const cls = state.cells[y * state.width + x];
      const gradientIndex = state.pathGradient.get(key(x, y));
      if (cls === "path" && gradientIndex !== undefined) {
        ctx.fillStyle = pathColor(gradientIndex, total);
      } else {
        ctx.fillStyle = COLORS[cls];
      }
      ctx.fillRect(x * cell, y * cell, cell, cell);
      if (cls === "deferred") hatch(ctx, x * cell, y * cell, cell);
    }
  }
  // pending candidates outlined on top
  ctx.strokeStyle = "#d32f2f";
  ctx.lineWidth = 2;
  for (const cand of state.pending) {
    const [x, y] = cand.cell;
    ctx.strokeRect(x * cell + 1, y * cell + 1, cell - 2, cell - 2);
  }
  if (state.subgoal) {
    ctx.strokeStyle = "#1565c0";
    const [x, y] = state.subgoal;
    ctx.strokeRect(x * cell + 1, y * cell + 1, cell - 2, cell - 2);
  }
}

function hatch(ctx: Ctx2D, px: number, py: number, size: number): void {
  ctx.strokeStyle = "#9e9e9e";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(px, py + size);
  ctx.lineTo(px + size, py);
  ctx.moveTo(px, py + size / 2);
  ctx.lineTo(px + size / 2, py);
  ctx.stroke();
}

export function candidateTooltip(cand: {
  cell: [number, number];
  f: number;
  g: number;
  h: number;
}): string {
  return (
    `(${cand.cell[0]},${cand.cell[1]}) ` +
    `f=${cand.f.toFixed(1)} g=${cand.g.toFixed(1)} h=${cand.h.toFixed(1)}`
  );
}
