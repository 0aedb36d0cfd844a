"""Learnable per-cell environment value folded into the search heuristic.

A tabular value function V(s) is trained online by TD updates. The reward
for a transition combines an advisor-supplied per-cell seed with a
discovery bonus: beta times the number of cells newly revealed when the
observation mask advances (Chebyshev radius rho around the new state).
Higher V makes a cell more attractive by lowering the effective heuristic
max(0, manhattan(s, goal) - lambda * V(s)); the clamp at 0 and the cap
V <= manhattan(start, goal) keep the blended heuristic admissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Cell, GridMap, manhattan


class NonFiniteReward(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class DuplicateCell(ValueError):
    pass


@dataclass(frozen=True)
class RewardSeed:
    """Advisor-emitted initial reward distribution: cell -> reward in [-1, 1].

    Cells absent from the mapping carry reward 0.
    """

    entries: dict[Cell, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for cell, reward in self.entries.items():
            if not math.isfinite(reward) or not -1.0 <= reward <= 1.0:
                raise ValueError(f"seed reward {reward} for {cell} outside [-1, 1]")

    def reward_at(self, cell: Cell) -> float:
        return self.entries.get(Cell(*cell), 0.0)

    def to_json(self) -> list[dict]:
        """The wire structure advisors emit: [{"cell": [x, y], "reward": r}, ...]."""
        return [
            {"cell": [c.x, c.y], "reward": r}
            for c, r in sorted(self.entries.items())
        ]

    @classmethod
    def from_json(cls, data: list[dict]) -> "RewardSeed":
        entries: dict[Cell, float] = {}
        for item in data:
            cell = Cell(int(item["cell"][0]), int(item["cell"][1]))
            if cell in entries:
                raise DuplicateCell(f"cell {cell} appears twice in reward seed")
            entries[cell] = float(item["reward"])
        return cls(entries)


EMPTY_SEED = RewardSeed()


class ObservationMask:
    """Per-cell seen bits; a cell is seen once any visited state came within
    Chebyshev distance rho of it. Bits only flip false -> true."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.seen = np.zeros((height, width), dtype=bool)

    def _window(self, cell: Cell, radius: int) -> tuple[slice, slice]:
        x, y = cell
        return (
            slice(max(0, y - radius), min(self.height, y + radius + 1)),
            slice(max(0, x - radius), min(self.width, x + radius + 1)),
        )

    def preview_reveal(self, cell: Cell, radius: int) -> int:
        """Count of cells that advancing to `cell` would newly reveal."""
        ys, xs = self._window(cell, radius)
        return int((~self.seen[ys, xs]).sum())

    def advance(self, cell: Cell, radius: int) -> int:
        """Mark everything within `radius` of `cell` seen; return newly seen count."""
        ys, xs = self._window(cell, radius)
        fresh = int((~self.seen[ys, xs]).sum())
        self.seen[ys, xs] = True
        return fresh

    def is_seen(self, cell: Cell) -> bool:
        return bool(self.seen[cell[1], cell[0]])

    def seen_count(self) -> int:
        return int(self.seen.sum())


class ValueTable:
    """Per-cell learned value with TD-learning parameters.

    alpha: TD step size in (0, 1].  gamma: discount in [0, 1).
    lam: heuristic blend weight (0 disables the value layer entirely).
    reveal_radius: Chebyshev radius for observation-mask discovery.
    beta: scale of the discovery reward term.
    Values are clamped to [0, v_max] after every update, where v_max is the
    Manhattan start-goal distance of the owning map.
    """

    def __init__(
        self,
        grid: GridMap,
        alpha: float = 0.5,
        gamma: float = 0.9,
        lam: float = 0.5,
        reveal_radius: int = 2,
        beta: float = 0.1,
    ):
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha {alpha} outside (0, 1]")
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma {gamma} outside [0, 1)")
        if lam < 0 or beta < 0 or reveal_radius < 0:
            raise ValueError("lam, beta and reveal_radius must be nonnegative")
        self.grid = grid
        self.alpha = alpha
        self.gamma = gamma
        self.lam = lam
        self.reveal_radius = reveal_radius
        self.beta = beta
        self.v_max = float(manhattan(grid.start, grid.goal))
        self.values = np.zeros((grid.height, grid.width), dtype=np.float64)
        self.active_seed: RewardSeed = EMPTY_SEED

    def v(self, cell: Cell) -> float:
        return float(self.values[cell[1], cell[0]])

    def apply_reward_seed(self, seed: RewardSeed) -> "ValueTable":
        """Install the seed used by pcat_reward for the coming stage.

        Does not touch V directly; rewards flow in through TD updates.
        """
        for cell in seed.entries:
            if not self.grid.in_bounds(cell):
                raise ValueError(f"seed cell {cell} out of bounds")
        self.active_seed = seed
        return self


def effective_heuristic(s: Cell, goal: Cell, value: ValueTable | None) -> float:
    """max(0, manhattan(s, goal) - lam * V(s)); plain Manhattan when no table."""
    d = manhattan(s, goal)
    if value is None or value.lam == 0.0:
        return float(d)
    return max(0.0, d - value.lam * value.v(s))


def pcat_reward(
    s: Cell,
    s_next: Cell,
    mask_before: ObservationMask,
    seed: RewardSeed,
    value: ValueTable,
) -> float:
    """Transition reward: seed(s_next) + beta * newly-revealed-cell count.

    The reveal count is what advancing `mask_before` to `s_next` with the
    table's radius would uncover; radical observation changes (many fresh
    cells) yield proportionally larger rewards. `mask_before` is not
    mutated here; the caller advances it when the transition commits.
    """
    fresh = mask_before.preview_reveal(s_next, value.reveal_radius)
    return seed.reward_at(s_next) + value.beta * fresh


def td_update(value: ValueTable, s: Cell, s_next: Cell, r: float) -> ValueTable:
    """V(s) += alpha * (r + gamma * V(s') - V(s)), clamped to [0, v_max]."""
    if not math.isfinite(r):
        raise NonFiniteReward(f"reward {r!r} is not finite")
    x, y = s
    target = r + value.gamma * value.v(s_next)
    updated = value.values[y, x] + value.alpha * (target - value.values[y, x])
    value.values[y, x] = min(max(updated, 0.0), value.v_max)
    return value


def value_loss(target: ValueTable, current: ValueTable) -> float:
    """Half the summed squared difference between two tables (diagnostic)."""
    if target.values.shape != current.values.shape:
        raise ShapeMismatch(
            f"{target.values.shape} vs {current.values.shape}"
        )
    diff = target.values - current.values
    return float(0.5 * np.sum(diff * diff))
