"""Grid-world path planning workbench.

Classic A* and greedy best-first search, advisor-guided variants with a
human-in-the-loop verdict protocol, a learned per-cell value layer, a PPO
baseline, the benchmark harness comparing them, and an HTTP session
service for live steering.
"""

from .grid import Cell, GridMap, Move, load_map, manhattan, successors
from .search import (
    CostModel,
    KeyPoint,
    NoPath,
    SearchOutcome,
    detect_jump,
    kernel_loaded,
    plan,
    reconstruct_path,
)
from .values import (
    ObservationMask,
    RewardSeed,
    ValueTable,
    effective_heuristic,
    pcat_reward,
    td_update,
    value_loss,
)

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "GridMap",
    "Move",
    "load_map",
    "manhattan",
    "successors",
    "CostModel",
    "KeyPoint",
    "NoPath",
    "SearchOutcome",
    "detect_jump",
    "kernel_loaded",
    "plan",
    "reconstruct_path",
    "ObservationMask",
    "RewardSeed",
    "ValueTable",
    "effective_heuristic",
    "pcat_reward",
    "td_update",
    "value_loss",
    "__version__",
]
