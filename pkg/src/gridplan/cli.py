"""The `plan` command line: bench, solve, train-ppo, serve, kernel-bench.

Exit codes: 0 full success, 2 partial failures (explicit failure rows in a
benchmark, or an unsolvable solve), 1 fatal error.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import __version__
from .advisor import make_advisor
from .bench import AdvisorUnavailable, BenchPlan, emit_table, run_benchmark
from .catalog import MapLoadError, list_shipped, resolve
from .grid import GridMap
from .metrics import mdt as mdt_metric
from .metrics import path_length, search_complexity
from .ppo import PpoConfig, save_policy, train
from .search import CostModel, NoPath, kernel_loaded, plan as run_plan
from .session import AWAIT_VERDICT, DONE, FAILED, create_session


@click.group()
@click.version_option(__version__, prog_name="plan")
def main() -> None:
    """Grid-world path planning workbench."""


def _render(grid: GridMap, path) -> str:
    cells = {tuple(c) for c in path}
    rows = []
    for y in range(grid.height):
        row = []
        for x in range(grid.width):
            c = (x, y)
            if c == tuple(grid.start):
                row.append("S")
            elif c == tuple(grid.goal):
                row.append("G")
            elif c in cells:
                row.append("o")
            elif not grid.is_free(c):
                row.append("#")
            else:
                row.append(".")
        rows.append("".join(row))
    return "\n".join(rows)


@main.command()
@click.option("--maps", "map_specs", multiple=True, required=True,
              help="Shipped map name, file path, or glob (repeatable).")
@click.option("--planners", default="astar,llm-astar,llm-greedy",
              help="Comma-separated subset of astar,greedy,llm-astar,llm-greedy,ppo.")
@click.option("--advisor", default="scripted", type=click.Choice(["scripted", "openai"]))
@click.option("--repeats", default=3, show_default=True)
@click.option("--out", "out_path", default=None, help="Write the table here (stdout otherwise).")
@click.option("--seed", default=0, show_default=True)
@click.option("--format", "out_format", default=None,
              type=click.Choice(["csv", "markdown"]),
              help="Defaults from --out extension (md -> markdown), else csv.")
@click.option("--workers", default=4, show_default=True)
@click.option("--ppo-checkpoint", default=None, type=click.Path(exists=True))
@click.option("--ppo-train", is_flag=True, help="Train a PPO policy per map before benchmarking.")
@click.option("--ppo-episodes", default=2000, show_default=True)
def bench(map_specs, planners, advisor, repeats, out_path, seed, out_format,
          workers, ppo_checkpoint, ppo_train, ppo_episodes) -> None:
    """Run the benchmark grid: all planners x all maps, averaged over repeats."""
    names: list[str] = []
    for spec in map_specs:
        matches = sorted(str(p) for p in Path().glob(spec)) if any(
            ch in spec for ch in "*?[") else []
        names.extend(matches or [spec])
    if out_format is None:
        out_format = "markdown" if out_path and out_path.endswith(".md") else "csv"
    try:
        plan_spec = BenchPlan(
            maps=names,
            planners=[p.strip() for p in planners.split(",") if p.strip()],
            repeats=repeats,
            advisor=advisor,
            out_format=out_format,
            seed=seed,
            workers=workers,
            ppo_checkpoint=ppo_checkpoint,
            ppo_train=ppo_train,
            ppo_episodes=ppo_episodes,
        )
        reports, manifest = run_benchmark(plan_spec)
    except (ValueError, MapLoadError, AdvisorUnavailable) as exc:
        raise click.ClickException(str(exc))
    table = emit_table(reports, out_format)
    if out_path:
        Path(out_path).write_text(table)
        manifest_path = Path(out_path).with_suffix(".manifest.json")
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
        click.echo(f"wrote {out_path} and {manifest_path}")
    else:
        click.echo(table, nl=False)
    if any(r.failures for r in reports):
        sys.exit(2)


@main.command()
@click.option("--map", "map_spec", required=True, help="Shipped map name or file path.")
@click.option("--planner", default="astar",
              type=click.Choice(["astar", "greedy", "llm-astar", "llm-greedy"]))
@click.option("--advisor", default=None,
              type=click.Choice(["scripted", "openai", "human"]),
              help="Defaults to scripted for llm planners.")
@click.option("--interactive", is_flag=True,
              help="Pause at each proposal and rule from the terminal.")
def solve(map_spec, planner, advisor, interactive) -> None:
    """Solve one map and print the path, metrics, and rendered grid."""
    try:
        grid = resolve(map_spec)
    except MapLoadError as exc:
        raise click.ClickException(str(exc))
    if advisor is None and planner.startswith("llm"):
        advisor = "scripted"
    advisor_obj = make_advisor(advisor or "none")

    if planner in ("astar", "greedy") and not interactive:
        try:
            out = run_plan(grid, cost_model=CostModel(mode=planner))
        except NoPath:
            click.echo("no path exists")
            sys.exit(2)
        click.echo(_render(grid, out.path))
        click.echo(
            f"path_length={path_length(out.path)} "
            f"mdt={mdt_metric(out.path, grid.start, grid.goal)} "
            f"complexity={search_complexity(out, planner)} "
            f"path_cost={out.path_cost}"
        )
        return

    session = create_session(
        grid, planner, advisor_obj, autopilot=not interactive
    )
    while session.phase not in (DONE, FAILED):
        if session.phase == AWAIT_VERDICT:
            click.echo("proposal:")
            verdicts = {}
            for cand in session.pending_candidates():
                prompt = (
                    f"  accept ({cand['cell'][0]},{cand['cell'][1]}) "
                    f"f={cand['f']:.1f} g={cand['g']:.1f} h={cand['h']:.1f}?"
                )
                verdicts[cand["id"]] = click.confirm(prompt, default=True)
            session.submit_verdict(verdicts)
        else:
            session.step()
    if session.phase == FAILED:
        click.echo(f"failed: {session.failure_reason}")
        sys.exit(2)
    out = session.final_outcome
    click.echo(_render(grid, out.path))
    m = session.metrics()
    click.echo(
        f"path_length={m['path_length']} mdt={m['mdt']} "
        f"complexity={m['complexity']} stages={session.stage_index + 1}"
    )


@main.command("train-ppo")
@click.option("--map", "map_spec", required=True)
@click.option("--episodes", default=2000, show_default=True)
@click.option("--out", "out_path", required=True, help="Checkpoint path (JSON).")
@click.option("--curves", "curves_path", default=None, help="Learning-curve CSV path.")
@click.option("--seed", default=0, show_default=True)
@click.option("--max-steps", default=200, show_default=True)
def train_ppo(map_spec, episodes, out_path, curves_path, seed, max_steps) -> None:
    """Train the PPO baseline on one map and save a checkpoint."""
    try:
        grid = resolve(map_spec)
    except MapLoadError as exc:
        raise click.ClickException(str(exc))
    config = PpoConfig(episodes=episodes, max_steps=max_steps)
    policy, curves = train(grid, config, seed=seed, progress=True)
    save_policy(policy, out_path)
    click.echo(f"wrote {out_path}")
    if curves_path:
        Path(curves_path).write_text(curves.to_csv())
        click.echo(f"wrote {curves_path}")
    first = curves.scores[:100]
    last = curves.scores[-100:]
    click.echo(
        f"mean score first-100={sum(first) / len(first):.3f} "
        f"last-100={sum(last) / len(last):.3f}"
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8750, show_default=True)
@click.option("--ui-origin", default=None, help="CORS origin allowed for the browser UI.")
@click.option("--ui-dir", default=None, type=click.Path(exists=True),
              help="Serve a built UI from this directory at /.")
@click.option("--token", default=None, help="Require this bearer token on API calls.")
def serve(host, port, ui_origin, ui_dir, token) -> None:
    """Run the planning session HTTP service."""
    import uvicorn

    from .service import build_app

    app = build_app(ui_origin=ui_origin, ui_dir=ui_dir, token=token)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("kernel-bench")
@click.option("--sizes", default="16,24,32,48,64", show_default=True)
@click.option("--repeats", default=5, show_default=True)
@click.option("--density", default=0.25, show_default=True)
def kernel_bench(sizes, repeats, density) -> None:
    """Compare the compiled search kernel against the pure-Python engine."""
    import random

    from .grid import Cell

    if not kernel_loaded():
        click.echo("compiled kernel not built; nothing to compare")
        sys.exit(1)
    click.echo(f"{'size':>6} {'pure (ms)':>12} {'compiled (ms)':>14} {'speedup':>9}")
    rng = random.Random(0)
    for size in [int(s) for s in sizes.split(",")]:
        grids = []
        while len(grids) < repeats:
            cells = bytes(
                1 if rng.random() < density else 0 for _ in range(size * size)
            )
            try:
                grid = GridMap(size, size, cells, Cell(0, 0), Cell(size - 1, size - 1))
            except ValueError:
                continue
            try:
                run_plan(grid, backend="compiled")
            except NoPath:
                continue
            grids.append(grid)
        timings = {}
        for backend in ("pure", "compiled"):
            t0 = time.perf_counter()
            for grid in grids:
                run_plan(grid, backend=backend)
            timings[backend] = (time.perf_counter() - t0) * 1000 / repeats
        click.echo(
            f"{size:>6} {timings['pure']:>12.3f} {timings['compiled']:>14.3f} "
            f"{timings['pure'] / timings['compiled']:>8.1f}x"
        )


@main.command("maps")
def maps_cmd() -> None:
    """List the shipped reference maps."""
    for name in list_shipped():
        click.echo(name)


if __name__ == "__main__":
    main()
