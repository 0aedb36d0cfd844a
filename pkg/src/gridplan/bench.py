"""Benchmark harness: every planner on every map, repeated and averaged.

One (map, planner, repeat) cell executes per worker; results merge
deterministically by sorted key, so a fixed seed with the scripted
advisor reproduces a run exactly. Failures (no path, diverged rollout,
failed session) become explicit failure rows rather than disappearing.
A manifest (seed, config, map hashes, advisor) accompanies every table.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .advisor import make_advisor
from .catalog import MapLoadError, resolve
from .grid import GridMap
from .metrics import MetricsReport, mdt, path_length, search_complexity
from .ppo import PpoConfig, RolloutDiverged, load_policy, rollout_path, train
from .search import CostModel, NoPath, plan
from .session import DONE, create_session

TABLE_ORDER = ("astar", "greedy", "llm-astar", "llm-greedy", "ppo")


class AdvisorUnavailable(RuntimeError):
    pass


@dataclass
class BenchPlan:
    maps: list[str]
    planners: list[str] = field(default_factory=lambda: ["astar", "llm-astar", "llm-greedy"])
    repeats: int = 3
    advisor: str = "scripted"
    out_format: str = "csv"
    seed: int = 0
    workers: int = 4
    ppo_checkpoint: str | None = None
    ppo_train: bool = False
    ppo_episodes: int = 2000

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        for p in self.planners:
            if p not in TABLE_ORDER:
                raise ValueError(f"unknown planner {p!r}")
        if "ppo" in self.planners and not (self.ppo_checkpoint or self.ppo_train):
            raise ValueError("ppo rows need --ppo-checkpoint or --ppo-train")
        if self.advisor == "human":
            raise ValueError("benchmarks cannot block on a human advisor")


def _cell_seed(base: int, map_name: str, planner: str, repeat: int) -> int:
    key = f"{base}:{map_name}:{planner}:{repeat}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:4], "big")


def _run_cell(grid: GridMap, planner: str, advisor_name: str, seed: int,
              policy_cache: dict) -> tuple[float, float, float] | None:
    """One benchmark execution; None signals an explicit failure."""
    if planner in ("astar", "greedy"):
        try:
            out = plan(grid, cost_model=CostModel(mode=planner))
        except NoPath:
            return None
        return (
            path_length(out.path),
            mdt(out.path, grid.start, grid.goal),
            search_complexity(out, planner),
        )
    if planner in ("llm-astar", "llm-greedy"):
        advisor = make_advisor(advisor_name)
        if advisor is None:
            raise AdvisorUnavailable(f"{planner} needs an advisor")
        session = create_session(grid, planner, advisor, autopilot=True)
        session.run_to_completion()
        if session.phase != DONE:
            return None
        m = session.metrics()
        return (m["path_length"], m["mdt"], m["complexity"])
    if planner == "ppo":
        policy = policy_cache[grid.name]
        try:
            out = rollout_path(policy, grid)
        except RolloutDiverged:
            return None
        return (
            path_length(out.path),
            mdt(out.path, grid.start, grid.goal),
            search_complexity(out, "ppo"),
        )
    raise ValueError(planner)


def run_benchmark(plan_spec: BenchPlan) -> tuple[list[MetricsReport], dict]:
    """Execute the plan; returns (reports sorted by (map, planner), manifest)."""
    grids: list[GridMap] = []
    for name in plan_spec.maps:
        try:
            grids.append(resolve(name))
        except MapLoadError:
            raise
    if plan_spec.advisor == "openai" and any(
        p.startswith("llm") for p in plan_spec.planners
    ):
        if not os.environ.get("LLM_API_BASE"):
            raise AdvisorUnavailable("openai advisor needs LLM_API_BASE configured")

    policy_cache: dict = {}
    if "ppo" in plan_spec.planners:
        for grid in grids:
            if plan_spec.ppo_checkpoint:
                policy_cache[grid.name] = load_policy(plan_spec.ppo_checkpoint)
            else:
                config = PpoConfig(episodes=plan_spec.ppo_episodes)
                policy_cache[grid.name], _ = train(grid, config, seed=plan_spec.seed)

    cells = [
        (grid, planner, r)
        for grid in grids
        for planner in plan_spec.planners
        for r in range(plan_spec.repeats)
    ]

    def execute(cell):
        grid, planner, repeat = cell
        seed = _cell_seed(plan_spec.seed, grid.name, planner, repeat)
        return (grid.name, planner, repeat), _run_cell(
            grid, planner, plan_spec.advisor, seed, policy_cache
        )

    results: dict = {}
    with ThreadPoolExecutor(max_workers=plan_spec.workers) as pool:
        for key, value in pool.map(execute, cells):
            results[key] = value

    reports = []
    for grid in grids:
        for planner in plan_spec.planners:
            values = [
                results[(grid.name, planner, r)] for r in range(plan_spec.repeats)
            ]
            good = [v for v in values if v is not None]
            failures = sum(1 for v in values if v is None)
            if good:
                reports.append(
                    MetricsReport(
                        planner=planner,
                        map_name=grid.name,
                        path_length=sum(v[0] for v in good) / len(good),
                        mdt=sum(v[1] for v in good) / len(good),
                        complexity=sum(v[2] for v in good) / len(good),
                        repeats=plan_spec.repeats,
                        failures=failures,
                    )
                )
            else:
                reports.append(
                    MetricsReport(
                        planner=planner,
                        map_name=grid.name,
                        path_length=0.0,
                        mdt=0.0,
                        complexity=0.0,
                        repeats=plan_spec.repeats,
                        failures=failures,
                    )
                )
    reports.sort(key=lambda r: (r.map_name, TABLE_ORDER.index(r.planner)))

    manifest = {
        "seed": plan_spec.seed,
        "repeats": plan_spec.repeats,
        "advisor": plan_spec.advisor,
        "planners": list(plan_spec.planners),
        "maps": {
            g.name: hashlib.sha256(g.to_text().encode()).hexdigest() for g in grids
        },
        "nondeterministic": plan_spec.advisor == "openai",
        "ppo": {
            "checkpoint": plan_spec.ppo_checkpoint,
            "trained": plan_spec.ppo_train,
            "episodes": plan_spec.ppo_episodes if plan_spec.ppo_train else None,
        },
    }
    return reports, manifest


METRIC_FIELDS = (("path_length", "Path Length"), ("mdt", "MDT"), ("complexity", "Complexity"))

DISPLAY_NAMES = {
    "astar": "A*",
    "greedy": "Greedy",
    "llm-astar": "LLM A*",
    "llm-greedy": "LLM Greedy",
    "ppo": "PPO",
}


def _column_name(planner: str) -> str:
    return planner.replace("-", "_")


def _format_value(report: MetricsReport, metric: str) -> str:
    if report.failed:
        return "FAIL"
    value = getattr(report, metric)
    if abs(value - round(value)) < 1e-9:
        return str(int(round(value)))
    return f"{value:.2f}"


def _planner_columns(reports: list[MetricsReport]) -> list[str]:
    present = {r.planner for r in reports}
    return [p for p in TABLE_ORDER if p in present]


def emit_table(reports: list[MetricsReport], out_format: str = "csv") -> str:
    """Pivot reports Table-I style: one row per (metric, environment)."""
    if not reports:
        raise ValueError("no reports to emit")
    planners = _planner_columns(reports)
    maps = sorted({r.map_name for r in reports})
    cell = {(r.map_name, r.planner): r for r in reports}
    repeats = {r.repeats for r in reports}

    if out_format == "csv":
        lines = []
        if len(repeats) == 1:
            lines.append(f"# repeats={repeats.pop()}")
        lines.append("metric,environment," + ",".join(_column_name(p) for p in planners))
        for metric, _label in METRIC_FIELDS:
            for name in maps:
                row = [metric, name]
                for p in planners:
                    row.append(_format_value(cell[(name, p)], metric))
                lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    if out_format == "markdown":
        header = "| Metrics | Environments | " + " | ".join(
            DISPLAY_NAMES[p] for p in planners
        ) + " |"
        sep = "|" + "---|" * (len(planners) + 2)
        lines = [header, sep]
        for metric, label in METRIC_FIELDS:
            for i, name in enumerate(maps):
                values = [_format_value(cell[(name, p)], metric) for p in planners]
                numeric = [
                    (float(v), j) for j, v in enumerate(values) if v != "FAIL"
                ]
                # best two results highlighted, mirroring the benchmark table
                best = {j for _, j in sorted(numeric)[:2]}
                shown = [
                    f"**{v}**" if j in best else v for j, v in enumerate(values)
                ]
                row_label = label if i == 0 else ""
                lines.append(f"| {row_label} | {name} | " + " | ".join(shown) + " |")
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown format {out_format!r}")


def parse_table(text: str) -> list[MetricsReport]:
    """Inverse of emit_table's csv form (FAIL cells parse as failures)."""
    repeats = 1
    rows = []
    header: list[str] | None = None
    for line in text.strip().splitlines():
        if line.startswith("#"):
            if "repeats=" in line:
                repeats = int(line.split("repeats=")[1])
            continue
        parts = line.split(",")
        if header is None:
            header = parts
            continue
        rows.append(parts)
    if header is None:
        raise ValueError("empty table")
    planners = [h.replace("_", "-") for h in header[2:]]
    acc: dict[tuple[str, str], dict] = {}
    for parts in rows:
        metric, env = parts[0], parts[1]
        for planner, value in zip(planners, parts[2:]):
            entry = acc.setdefault(
                (env, planner),
                {"path_length": 0.0, "mdt": 0.0, "complexity": 0.0, "failed": False},
            )
            if value == "FAIL":
                entry["failed"] = True
            else:
                entry[metric] = float(value)
    reports = []
    for (env, planner), entry in acc.items():
        reports.append(
            MetricsReport(
                planner=planner,
                map_name=env,
                path_length=entry["path_length"],
                mdt=entry["mdt"],
                complexity=entry["complexity"],
                repeats=repeats,
                failures=repeats if entry["failed"] else 0,
            )
        )
    reports.sort(key=lambda r: (r.map_name, TABLE_ORDER.index(r.planner)))
    return reports
