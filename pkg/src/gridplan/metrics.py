"""Evaluation metrics: Path Length, MDT, and Search Complexity.

Path Length counts cells in the final path (not summed step costs).
MDT counts path steps whose direction makes an angle in (pi/2, pi] with
the overall start->goal direction, i.e. steps with a negative dot product
against it; it proxies path smoothness. Search Complexity is
|open| + |closed| for A*-style planners and the number of distinct cells
ever generated or visited for greedy-style and RL planners.
"""

from __future__ import annotations

from dataclasses import dataclass

from .grid import Cell
from .search import SearchOutcome

ASTAR_STYLE = frozenset({"astar", "llm-astar"})
ACCESS_STYLE = frozenset({"greedy", "llm-greedy", "ppo"})


class DisconnectedPath(ValueError):
    pass


class EmptyPath(ValueError):
    pass


@dataclass
class MetricsReport:
    """Mean metric values for one (planner, map) benchmark cell."""

    planner: str
    map_name: str
    path_length: float
    mdt: float
    complexity: float
    repeats: int = 1
    failures: int = 0

    @property
    def failed(self) -> bool:
        return self.failures >= self.repeats


def path_length(path: list[Cell]) -> int:
    """Number of cells in a connected path."""
    if not path:
        return 0
    for a, b in zip(path, path[1:]):
        if max(abs(a[0] - b[0]), abs(a[1] - b[1])) != 1:
            raise DisconnectedPath(f"{a} -> {b} is not one move")
    return len(path)


def mdt(path: list[Cell], start: Cell, goal: Cell) -> int:
    """Count of moves pointing away from the start->goal direction.

    A move counts when its angle against the global direction lies in
    (pi/2, pi], which for integer step vectors is exactly a negative dot
    product; zero vectors contribute nothing.
    """
    if not path:
        raise EmptyPath("mdt needs a nonempty path")
    vdx = goal[0] - start[0]
    vdy = goal[1] - start[1]
    count = 0
    for a, b in zip(path, path[1:]):
        dot = vdx * (b[0] - a[0]) + vdy * (b[1] - a[1])
        if dot < 0:
            count += 1
    return count


def search_complexity(outcome: SearchOutcome, planner: str) -> int:
    """The paper-style complexity indicator for a finished search.

    A*-style planners report |open| + |closed|; declined cells that never
    recycled into the frontier are excluded (they were never "to visit").
    Greedy-style and RL planners report every distinct cell accessed.
    """
    if planner in ASTAR_STYLE:
        return len(outcome.open_final) + len(outcome.closed_final)
    if planner in ACCESS_STYLE:
        return len(outcome.touched())
    raise ValueError(f"unknown planner kind {planner!r}")
