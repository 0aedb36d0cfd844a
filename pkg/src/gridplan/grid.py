"""Occupancy-grid environment: map representation, parsing, moves, distances.

Maps are rectangular grids of free/obstacle cells with a named start and
goal. Agents move in the 8 compass directions; a diagonal move is legal
only when both flanking orthogonal cells are free (no corner cutting).
Move cost is the Manhattan displacement of the move: 1 orthogonal,
2 diagonal, which keeps the Manhattan heuristic admissible and consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

FREE = 0
OBSTACLE = 1

_CHARS = {".": FREE, "#": OBSTACLE, "S": FREE, "G": FREE}


class MapError(ValueError):
    """Base class for map construction/parsing failures."""


class RaggedRows(MapError):
    pass


class MissingEndpoint(MapError):
    pass


class IllegalChar(MapError):
    pass


class EndpointOnObstacle(MapError):
    pass


class OutOfBounds(MapError):
    pass


class OnObstacle(MapError):
    pass


class Cell(NamedTuple):
    """A grid coordinate: x is the column, y is the row, both 0-based."""

    x: int
    y: int


class Move(NamedTuple):
    """One of the 8 compass moves with its Manhattan step cost (1 or 2)."""

    dx: int
    dy: int
    step_cost: int


# Fixed successor order: N, NE, E, SE, S, SW, W, NW. y grows downward,
# so N is dy = -1. step_cost = |dx| + |dy|.
MOVES: tuple[Move, ...] = (
    Move(0, -1, 1),
    Move(1, -1, 2),
    Move(1, 0, 1),
    Move(1, 1, 2),
    Move(0, 1, 1),
    Move(-1, 1, 2),
    Move(-1, 0, 1),
    Move(-1, -1, 2),
)


def manhattan(a: Cell, b: Cell) -> int:
    """|ax - bx| + |ay - by|; the cumulative/heuristic distance convention."""
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


@dataclass(frozen=True)
class GridMap:
    """Immutable occupancy grid with start and goal endpoints.

    ``cells`` is row-major, one byte per cell (FREE/OBSTACLE), so the map
    is safe to share across concurrent readers and cheap to hash.
    """

    width: int
    height: int
    cells: bytes
    start: Cell
    goal: Cell
    name: str = field(default="unnamed")

    def __post_init__(self) -> None:
        # The 2x2 minimum is relaxed to allow single-row/column corridors
        # as long as the map holds at least two cells.
        if self.width < 1 or self.height < 1 or self.width * self.height < 2:
            raise MapError(f"map too small: {self.width}x{self.height}")
        if len(self.cells) != self.width * self.height:
            raise MapError("cells length does not match width*height")
        if self.start == self.goal:
            raise MapError("start and goal must differ")
        for label, cell in (("start", self.start), ("goal", self.goal)):
            if not self.in_bounds(cell):
                raise OutOfBounds(f"{label} {cell} out of bounds")
            if not self.is_free(cell):
                raise EndpointOnObstacle(f"{label} {cell} is on an obstacle")

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.cells[cell[1] * self.width + cell[0]] == FREE

    def obstacle_cells(self) -> list[Cell]:
        return [
            Cell(x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.cells[y * self.width + x] == OBSTACLE
        ]

    def free_cells(self) -> Iterator[Cell]:
        for y in range(self.height):
            for x in range(self.width):
                if self.cells[y * self.width + x] == FREE:
                    yield Cell(x, y)

    def to_text(self) -> str:
        """Serialize back to the ASCII map format (round-trips load_map)."""
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                cell = Cell(x, y)
                if cell == self.start:
                    row.append("S")
                elif cell == self.goal:
                    row.append("G")
                else:
                    row.append("#" if not self.is_free(cell) else ".")
            rows.append("".join(row))
        return "\n".join(rows) + "\n"


def load_map(text: str, name: str = "unnamed") -> GridMap:
    """Parse the ASCII map format: rows over {'.', '#', 'S', 'G'}.

    Exactly one S and one G are required; rows must have equal length.
    """
    rows = text.splitlines()
    while rows and rows[-1] == "":
        rows.pop()
    if not rows:
        raise MapError("empty map document")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise RaggedRows("rows have unequal lengths")
    height = len(rows)

    cells = bytearray(width * height)
    start = goal = None
    for y, row in enumerate(rows):
        for x, ch in enumerate(row):
            if ch not in _CHARS:
                raise IllegalChar(f"illegal character {ch!r} at ({x},{y})")
            cells[y * width + x] = _CHARS[ch]
            if ch == "S":
                if start is not None:
                    raise MissingEndpoint("duplicate start S")
                start = Cell(x, y)
            elif ch == "G":
                if goal is not None:
                    raise MissingEndpoint("duplicate goal G")
                goal = Cell(x, y)
    if start is None or goal is None:
        raise MissingEndpoint("map must contain exactly one S and one G")
    return GridMap(width, height, bytes(cells), start, goal, name)


def successors(grid: GridMap, s: Cell) -> list[tuple[Cell, Move]]:
    """Free 8-neighbors of s in fixed compass order (N, NE, E, SE, S, SW, W, NW).

    A diagonal neighbor is included only when both flanking orthogonal
    cells are free, so paths never cut corners.
    """
    if not grid.in_bounds(s):
        raise OutOfBounds(f"{s} out of bounds")
    if not grid.is_free(s):
        raise OnObstacle(f"{s} is an obstacle")
    out = []
    for move in MOVES:
        t = Cell(s[0] + move.dx, s[1] + move.dy)
        if not grid.in_bounds(t) or not grid.is_free(t):
            continue
        if move.step_cost == 2:
            side_a = Cell(s[0] + move.dx, s[1])
            side_b = Cell(s[0], s[1] + move.dy)
            if not (grid.is_free(side_a) and grid.is_free(side_b)):
                continue
        out.append((t, move))
    return out
