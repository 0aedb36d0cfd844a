"""Generators for the shipped reference maps (Aisle, Canyon, Double Door).

Each motif is produced at 16x16, 24x24 and 32x32 by scaling the same
construction rules; `python -m gridplan.mapgen` rewrites the .txt assets
under gridplan/maps/. Start sits near the upper-right corner and the goal
near the lower-left, matching the evaluation setup the benchmarks mirror.

All three motifs deliberately contain heuristic traps (dead-end pockets
and offset doors whose interiors look attractive to h-only search), which
is what separates greedy-style from cost-aware planners on these layouts.
"""

from __future__ import annotations

from pathlib import Path

from .grid import Cell, GridMap

SIZES = (16, 24, 32)
MOTIFS = ("aisle", "canyon", "double_door")

MAPS_DIR = Path(__file__).parent / "maps"


class _Builder:
    def __init__(self, n: int, fill: bool = False):
        self.n = n
        self.blocked = [[fill] * n for _ in range(n)]

    def block(self, x: int, y: int) -> None:
        if 0 <= x < self.n and 0 <= y < self.n:
            self.blocked[y][x] = True

    def free(self, x: int, y: int) -> None:
        if 0 <= x < self.n and 0 <= y < self.n:
            self.blocked[y][x] = False

    def block_col(self, x: int, y0: int, y1: int) -> None:
        for y in range(y0, y1 + 1):
            self.block(x, y)

    def block_row(self, y: int, x0: int, x1: int) -> None:
        for x in range(x0, x1 + 1):
            self.block(x, y)

    def to_map(self, name: str, start: Cell, goal: Cell) -> GridMap:
        n = self.n
        self.blocked[start.y][start.x] = False
        self.blocked[goal.y][goal.x] = False
        cells = bytes(
            1 if self.blocked[y][x] else 0 for y in range(n) for x in range(n)
        )
        return GridMap(n, n, cells, start, goal, name)


def _endpoints(n: int) -> tuple[Cell, Cell]:
    return Cell(n - 2, 1), Cell(1, n - 2)


def _aisle(n: int, spacing: int, passage: int) -> GridMap:
    b = _Builder(n)
    start, goal = _endpoints(n)
    shelf_xs = list(range(spacing, n - 3, spacing))
    for i, x in enumerate(shelf_xs):
        if i % 2 == 0:
            b.block_col(x, 0, n - 1 - passage)   # hangs from the ceiling
        else:
            b.block_col(x, passage, n - 1)       # stands on the floor
    return b.to_map(f"aisle_{n}x{n}", start, goal)


def aisle(n: int) -> GridMap:
    """Warehouse aisles: vertical shelves alternating their attachment
    between ceiling and floor, so travel snakes through the pass-throughs.
    Floor-attached shelves form pockets whose bottoms are Manhattan-close
    to the goal; heuristic-only search dives all the way down before
    climbing back out."""
    return _aisle(n, spacing=max(4, n // 4), passage=max(2, n // 4))


def _canyon(n: int, width: int, spacing: int) -> GridMap:
    b = _Builder(n, fill=True)
    start, goal = _endpoints(n)
    y0 = (n - width) // 2

    def carve(x0, x1, ya, yb):
        for y in range(ya, yb + 1):
            for x in range(x0, x1 + 1):
                b.free(x, y)

    carve(n - 1 - width, n - 1, 0, y0 + width - 1)      # entry leg, right edge
    carve(0, n - 1 - width, y0, y0 + width - 1)         # traverse
    carve(0, width, y0, n - 1)                          # exit leg, left edge

    # rock fingers across the traverse, alternating attachment: fingers
    # rising from the canyon floor dead-end the goal-side rim the
    # heuristic prefers to hug
    finger_xs = list(range(n - 2 - width - spacing, width + 2, -spacing))
    for i, x in enumerate(finger_xs):
        if i % 2 == 0:
            b.block_col(x, y0 + 1, y0 + width - 1)      # gap at the top rim
        else:
            b.block_col(x, y0, y0 + width - 2)          # gap at the floor
    return b.to_map(f"canyon_{n}x{n}", start, goal)


def canyon(n: int) -> GridMap:
    """A winding canyon through solid rock: an entry gorge down the right
    edge, a long traverse, and an exit gorge to the goal, with rock
    fingers alternating between the canyon walls so the channel winds.
    Floor-attached fingers dead-end the goal-side rim that heuristic-only
    search hugs, forcing it into climbs it must retrace."""
    return _canyon(n, width=max(3, n // 5), spacing=max(4, n // 4))


def _double_door(
    n: int, door1: int, door2: int, stub_h: int, stub_gap: int
) -> GridMap:
    b = _Builder(n)
    start, goal = _endpoints(n)
    y1, y2 = n // 3, (2 * n) // 3
    for x in range(n):
        if not (door1 <= x < door1 + 2):
            b.block(x, y1)
        if not (door2 <= x < door2 + 2):
            b.block(x, y2)
    if stub_h > 0:
        # notch stubs rising from each wall just east of its door
        b.block_col(door1 + 1 + stub_gap, y1 - stub_h, y1)
        b.block_col(door2 + 1 + stub_gap, y2 - stub_h, y2)
    return b.to_map(f"double_door_{n}x{n}", start, goal)


def double_door(n: int) -> GridMap:
    """Two full-width walls, each pierced by one two-cell door near the
    goal-side edge, guarded by a notch stub on the approach flank: descent
    hugs the wall into the notch and has to climb around it, while
    cost-aware search clears the stub directly."""
    return _double_door(n, door1=3, door2=3, stub_h=max(2, n // 5), stub_gap=1)


_GENERATORS = {"aisle": aisle, "canyon": canyon, "double_door": double_door}


def generate(motif: str, n: int) -> GridMap:
    return _GENERATORS[motif](n)


def write_assets(directory: Path = MAPS_DIR) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for motif in MOTIFS:
        for n in SIZES:
            grid = generate(motif, n)
            path = directory / f"{motif}_{n}x{n}.txt"
            path.write_text(grid.to_text())
            written.append(path)
    return written


if __name__ == "__main__":
    for path in write_assets():
        print(f"wrote {path}")
