"""Best-first grid search with advisor filtering and frontier bookkeeping.

One stepwise engine backs everything: classic A* (f = g + h), greedy
best-first (f = h), and the advisor-guided variants in which freshly
generated successors are offered for an accept/decline verdict. Declined
cells land in a deferred set instead of open; whenever open drains while
deferred is nonempty, every deferred cell is recycled into open, so the
search stays complete no matter how adversarial the verdicts are.

Expansion order is fully deterministic: the frontier is keyed by
(priority, h, insertion sequence), so ties on f break toward the lower
heuristic and then toward the earlier push (successors are generated in
fixed compass order). Cells reached again on a strictly cheaper path are
re-opened even after closing, which preserves optimal path costs when the
blended heuristic is admissible but not consistent.

A compiled kernel (gridplan._speedups) accelerates advisor-free planning;
it is selected at import when present and replicates this module's
expansion order exactly. Set GRIDPLAN_PURE=1 to force the Python engine.
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .grid import Cell, GridMap, OnObstacle, OutOfBounds, manhattan, successors
from .values import ValueTable

try:  # compiled kernel is optional; the Python engine is always available
    from . import _speedups  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover
    _speedups = None


class NoPath(RuntimeError):
    """Open and deferred sets both exhausted without reaching the goal."""

    def __init__(self, message: str, outcome: "SearchOutcome | None" = None):
        super().__init__(message)
        self.outcome = outcome


class InvalidEndpoint(ValueError):
    pass


class BrokenChain(ValueError):
    pass


class PendingVerdicts(RuntimeError):
    """expand_once was called while candidates still await verdicts."""


class UnknownCandidate(KeyError):
    pass


ASTAR = "astar"
GREEDY = "greedy"


@dataclass(frozen=True)
class CostModel:
    """Search cost policy: classic A* or heuristic-only greedy.

    heuristic_weight scales the learned value correction inside the
    effective heuristic; None defers to the value table's own lambda,
    and 0 disables the value layer outright.
    """

    mode: str = ASTAR
    heuristic_weight: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in (ASTAR, GREEDY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.heuristic_weight is not None and self.heuristic_weight < 0:
            raise ValueError("heuristic_weight must be nonnegative")


@dataclass(frozen=True)
class KeyPoint:
    """A cell where the expansion sequence jumped to another frontier branch."""

    cell: Cell
    discovered_at_expansion: int


@dataclass(frozen=True)
class Candidate:
    """A freshly generated successor offered to the advisor."""

    id: int
    cell: Cell
    f: float
    g: float
    h: float


@dataclass(frozen=True)
class CandidateContext:
    stage: int = 0
    jump_cells: tuple[Cell, ...] = ()
    explored: int = 0
    mode: str = ASTAR  # the planner's own cost convention (f vs h ranking)
    expanded: Cell | None = None  # the cell whose expansion produced the set


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[Candidate, ...]
    context: CandidateContext = field(default_factory=CandidateContext)


@dataclass
class SearchOutcome:
    """Final path plus the frontier history of the run."""

    path: list[Cell]
    path_cost: int
    open_final: set[Cell]
    closed_final: set[Cell]
    deferred_final: set[Cell]
    expansions: list[Cell]
    jump_points: list[KeyPoint]
    verdict_log: list[tuple[Cell, bool]]

    @property
    def found(self) -> bool:
        return bool(self.path)

    def touched(self) -> set[Cell]:
        """Every cell ever generated or visited (greedy/RL complexity base)."""
        return self.open_final | self.closed_final | self.deferred_final


@dataclass
class StepResult:
    """Outcome of one engine expansion."""

    kind: str  # "expanded" | "finished" | "exhausted"
    cell: Cell | None = None
    g: float = 0.0
    h: float = 0.0
    f: float = 0.0
    fresh: list[Candidate] = field(default_factory=list)
    jump: KeyPoint | None = None


def detect_jump(
    prev_expanded: Cell, cur_expanded: Cell, expansion_index: int = 0
) -> KeyPoint | None:
    """KeyPoint(prev) when consecutive expansions are not 8-adjacent."""
    dx = abs(prev_expanded[0] - cur_expanded[0])
    dy = abs(prev_expanded[1] - cur_expanded[1])
    if max(dx, dy) > 1:
        return KeyPoint(Cell(*prev_expanded), expansion_index)
    return None


def reconstruct_path(parents: Mapping[Cell, Cell], goal: Cell) -> list[Cell]:
    """Walk the predecessor map back from goal; cells without a parent are roots."""
    path = [goal]
    seen = {goal}
    node = goal
    while node in parents:
        node = parents[node]
        if node in seen:
            raise BrokenChain(f"cycle through {node} in predecessor map")
        seen.add(node)
        path.append(node)
    path.reverse()
    return path


def _path_cost(path: list[Cell]) -> int:
    return sum(manhattan(a, b) for a, b in zip(path, path[1:]))


class SearchEngine:
    """Stepwise best-first search over one (start, target) pair.

    The caller drives expand_once(); when `filtered` is set, expansions
    that generate fresh successors park them in `pending` until
    apply_verdicts() rules on every candidate.
    """

    def __init__(
        self,
        grid: GridMap,
        start: Cell,
        target: Cell,
        cost_model: CostModel = CostModel(),
        value: ValueTable | None = None,
        filtered: bool = False,
        cost_scale: float = 1.0,
    ):
        for label, cell in (("start", start), ("target", target)):
            if not grid.in_bounds(cell):
                raise InvalidEndpoint(f"{label} {cell} out of bounds")
            if not grid.is_free(cell):
                raise InvalidEndpoint(f"{label} {cell} is on an obstacle")
        self.grid = grid
        self.start = Cell(*start)
        self.target = Cell(*target)
        self.cost_model = cost_model
        self.value = value
        self.filtered = filtered
        self.cost_scale = cost_scale
        if cost_model.heuristic_weight is not None:
            self.lam = cost_model.heuristic_weight
        else:
            self.lam = value.lam if value is not None else 0.0

        self._heap: list[tuple[float, float, int, Cell, float]] = []
        self._seq = 0
        self._candidate_seq = 0
        self.best_g: dict[Cell, float] = {}
        self.parent: dict[Cell, Cell] = {}
        self.where: dict[Cell, str] = {}
        self._deferred: dict[Cell, None] = {}
        self.expansions: list[Cell] = []
        self.jump_points: list[KeyPoint] = []
        self.verdict_log: list[tuple[Cell, bool]] = []
        self.pending: list[Candidate] | None = None
        self.finished = False
        self.exhausted = False

        self.best_g[self.start] = 0.0 if cost_scale != 1.0 else 0
        self.where[self.start] = "open"
        self._push(self.start, self.best_g[self.start])

    # -- internals ---------------------------------------------------------

    def _heuristic(self, cell: Cell) -> float:
        d = manhattan(cell, self.target)
        if self.lam == 0.0 or self.value is None:
            return float(d)
        return max(0.0, d - self.lam * self.value.v(cell))

    def _priority(self, g: float, h: float) -> float:
        return h if self.cost_model.mode == GREEDY else g + h

    def _push(self, cell: Cell, g: float) -> None:
        h = self._heuristic(cell)
        heapq.heappush(self._heap, (self._priority(g, h), h, self._seq, cell, g))
        self._seq += 1

    def _recycle_deferred(self) -> None:
        for cell in self._deferred:
            self.where[cell] = "open"
            self._push(cell, self.best_g[cell])
        self._deferred.clear()

    def _pop_valid(self) -> tuple[Cell, float, float, float] | None:
        while True:
            while self._heap:
                f, h, _seq, cell, g = heapq.heappop(self._heap)
                if self.where.get(cell) == "open" and g == self.best_g[cell]:
                    return cell, g, h, f
            if self._deferred:
                self._recycle_deferred()
                continue
            return None

    # -- public stepping API -------------------------------------------------

    def expand_once(self) -> StepResult:
        if self.pending is not None:
            raise PendingVerdicts("apply verdicts before expanding again")
        if self.finished or self.exhausted:
            raise RuntimeError("search already terminated")

        popped = self._pop_valid()
        if popped is None:
            self.exhausted = True
            return StepResult(kind="exhausted")
        cell, g, h, f = popped
        self.where[cell] = "closed"

        jump = None
        if self.expansions:
            jump = detect_jump(self.expansions[-1], cell, len(self.expansions))
            if jump is not None:
                self.jump_points.append(jump)
        self.expansions.append(cell)

        if cell == self.target:
            self.finished = True
            return StepResult(kind="finished", cell=cell, g=g, h=h, f=f, jump=jump)

        fresh: list[Candidate] = []
        for t, move in successors(self.grid, cell):
            step = move.step_cost if self.cost_scale == 1.0 else move.step_cost * self.cost_scale
            tentative = g + step
            known = self.best_g.get(t)
            if known is None:
                self.best_g[t] = tentative
                self.parent[t] = cell
                th = self._heuristic(t)
                fresh.append(
                    Candidate(
                        id=self._candidate_seq,
                        cell=t,
                        f=tentative + th,
                        g=tentative,
                        h=th,
                    )
                )
                self._candidate_seq += 1
            elif tentative < known and self.cost_model.mode == ASTAR:
                # greedy mode never relaxes: g plays no part in its search,
                # so first-generation parents are final (classical greedy
                # best-first, wandering chains and all)
                self.best_g[t] = tentative
                self.parent[t] = cell
                state = self.where[t]
                if state == "closed":
                    # strictly cheaper route to an expanded cell: re-open so
                    # admissible-but-inconsistent heuristics stay optimal
                    self.where[t] = "open"
                    self._push(t, tentative)
                elif state == "open":
                    self._push(t, tentative)
                # deferred cells keep their verdict; the better g is used
                # when they recycle

        if fresh:
            if self.filtered:
                self.pending = fresh
                for cand in fresh:
                    self.where[cand.cell] = "pending"
            else:
                for cand in fresh:
                    self.where[cand.cell] = "open"
                    self._push(cand.cell, cand.g)
        return StepResult(kind="expanded", cell=cell, g=g, h=h, f=f, fresh=fresh, jump=jump)

    def apply_verdicts(self, verdicts: Mapping[int, bool]) -> None:
        """Rule on every pending candidate: True enqueues, False defers."""
        if self.pending is None:
            raise PendingVerdicts("no candidates awaiting verdicts")
        pending_ids = {c.id for c in self.pending}
        if set(verdicts.keys()) != pending_ids:
            missing = pending_ids - set(verdicts.keys())
            unknown = set(verdicts.keys()) - pending_ids
            raise UnknownCandidate(
                f"verdicts must cover candidates exactly (missing={sorted(missing)}, "
                f"unknown={sorted(unknown)})"
            )
        for cand in self.pending:
            accept = bool(verdicts[cand.id])
            self.verdict_log.append((cand.cell, accept))
            if accept:
                self.where[cand.cell] = "open"
                self._push(cand.cell, self.best_g[cand.cell])
            else:
                self.where[cand.cell] = "deferred"
                self._deferred[cand.cell] = None
        self.pending = None

    def candidate_set(self, stage: int = 0) -> CandidateSet:
        if self.pending is None:
            raise PendingVerdicts("no candidates awaiting verdicts")
        return CandidateSet(
            candidates=tuple(self.pending),
            context=CandidateContext(
                stage=stage,
                jump_cells=tuple(kp.cell for kp in self.jump_points),
                explored=len(self.expansions),
                mode=self.cost_model.mode,
                expanded=self.expansions[-1] if self.expansions else None,
            ),
        )

    def outcome(self) -> SearchOutcome:
        path: list[Cell] = []
        if self.finished:
            path = reconstruct_path(self.parent, self.target)
        open_final = {c for c, w in self.where.items() if w == "open"}
        closed_final = {c for c, w in self.where.items() if w == "closed"}
        deferred_final = {c for c, w in self.where.items() if w == "deferred"}
        return SearchOutcome(
            path=path,
            path_cost=_path_cost(path),
            open_final=open_final,
            closed_final=closed_final,
            deferred_final=deferred_final,
            expansions=list(self.expansions),
            jump_points=list(self.jump_points),
            verdict_log=list(self.verdict_log),
        )


AdvisorHook = Callable[[CandidateSet], "Mapping[int, bool] | object"]


def _hook_verdicts(response: object) -> Mapping[int, bool]:
    if isinstance(response, Mapping):
        return response
    verdicts = getattr(response, "verdicts", None)
    if verdicts is None:
        raise TypeError("advisor hook must return a mapping or AdvisorResponse")
    return verdicts


def kernel_loaded() -> bool:
    """True when the compiled search kernel was importable."""
    return _speedups is not None


def _want_kernel(backend: str, advisor_hook: Optional[AdvisorHook]) -> bool:
    if backend == "pure":
        return False
    if backend == "compiled":
        if _speedups is None:
            raise RuntimeError("compiled kernel requested but not built")
        if advisor_hook is not None:
            raise ValueError("compiled kernel cannot run advisor callbacks")
        return True
    if backend != "auto":
        raise ValueError(f"unknown backend {backend!r}")
    if os.environ.get("GRIDPLAN_PURE"):
        return False
    return _speedups is not None and advisor_hook is None


def plan(
    grid: GridMap,
    start: Cell | None = None,
    goal: Cell | None = None,
    cost_model: CostModel = CostModel(),
    value: ValueTable | None = None,
    advisor_hook: Optional[AdvisorHook] = None,
    backend: str = "auto",
) -> SearchOutcome:
    """Run one search to completion and return its SearchOutcome.

    With mode=astar, no value blending and no advisor, the result is a
    minimum-step-cost path. The advisor hook, when given, is called with
    every fresh CandidateSet and must rule on all ids; declined cells are
    deferred and recycled if open empties, so a path is found whenever one
    exists. Raises NoPath (carrying the partial outcome) on exhaustion.
    """
    start = Cell(*(start if start is not None else grid.start))
    goal = Cell(*(goal if goal is not None else grid.goal))
    for label, cell in (("start", start), ("goal", goal)):
        if not grid.in_bounds(cell):
            raise InvalidEndpoint(f"{label} {cell} out of bounds")
        if not grid.is_free(cell):
            raise InvalidEndpoint(f"{label} {cell} is on an obstacle")

    if _want_kernel(backend, advisor_hook):
        return _kernel_plan(grid, start, goal, cost_model, value)

    engine = SearchEngine(
        grid,
        start,
        goal,
        cost_model=cost_model,
        value=value,
        filtered=advisor_hook is not None,
    )
    while True:
        step = engine.expand_once()
        if step.kind == "finished":
            return engine.outcome()
        if step.kind == "exhausted":
            outcome = engine.outcome()
            raise NoPath(f"no path from {start} to {goal}", outcome)
        if engine.pending is not None:
            response = advisor_hook(engine.candidate_set())  # type: ignore[misc]
            engine.apply_verdicts(_hook_verdicts(response))


def _kernel_plan(
    grid: GridMap,
    start: Cell,
    goal: Cell,
    cost_model: CostModel,
    value: ValueTable | None,
) -> SearchOutcome:
    if cost_model.heuristic_weight is not None:
        lam = cost_model.heuristic_weight
    else:
        lam = value.lam if value is not None else 0.0
    values_flat = None
    if value is not None and lam != 0.0:
        values_flat = value.values.reshape(-1)
    found, path_xy, expansions_xy, open_xy, closed_xy = _speedups.plan_grid(
        grid.width,
        grid.height,
        grid.cells,
        start.x,
        start.y,
        goal.x,
        goal.y,
        1 if cost_model.mode == GREEDY else 0,
        float(lam),
        values_flat,
    )
    expansions = [Cell(x, y) for x, y in expansions_xy]
    jump_points = []
    for i in range(1, len(expansions)):
        jump = detect_jump(expansions[i - 1], expansions[i], i)
        if jump is not None:
            jump_points.append(jump)
    path = [Cell(x, y) for x, y in path_xy]
    outcome = SearchOutcome(
        path=path,
        path_cost=_path_cost(path),
        open_final={Cell(x, y) for x, y in open_xy},
        closed_final={Cell(x, y) for x, y in closed_xy},
        deferred_final=set(),
        expansions=expansions,
        jump_points=jump_points,
        verdict_log=[],
    )
    if not found:
        raise NoPath(f"no path from {start} to {goal}", outcome)
    return outcome
