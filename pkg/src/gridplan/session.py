"""Staged, human-interruptible planning sessions.

A session runs one planner over one map as a sequence of stages: the
advisor seeds rewards and picks a sub-goal, the search engine expands
toward it (learning cell values from discovery rewards as it goes), jump
points and exploration feed back to the advisor, and the loop repeats
until the goal falls. Plain A*/greedy sessions are the degenerate single
stage with no advisor traffic.

Every state change is recorded as a SessionEvent with a gap-free sequence
number; with the deterministic scripted advisor, replaying the event log
against a fresh session reproduces the final snapshot byte for byte.
"""

from __future__ import annotations

import itertools
import uuid
from dataclasses import dataclass, field
from typing import Mapping

from .advisor import Advisor, AdvisorResponse
from .grid import Cell, GridMap
from .metrics import mdt, path_length, search_complexity
from .search import (
    CostModel,
    KeyPoint,
    SearchEngine,
    SearchOutcome,
    UnknownCandidate,
)
from .values import EMPTY_SEED, ObservationMask, ValueTable, pcat_reward, td_update

PLANNERS = ("astar", "greedy", "llm-astar", "llm-greedy")
LLM_PLANNERS = ("llm-astar", "llm-greedy")

INIT = "init"
AWAIT_SEED = "await_seed"
EXPANDING = "expanding"
AWAIT_VERDICT = "await_verdict"
STAGE_DONE = "stage_done"
DONE = "done"
FAILED = "failed"

EXPANSION = "Expansion"
PROPOSAL = "Proposal"
VERDICT_NEEDED = "VerdictNeeded"  # reserved wire kind; Proposal carries the pause
VERDICT_APPLIED = "VerdictApplied"
SUBGOAL_CHOSEN = "SubgoalChosen"
STAGE_COMPLETE = "StageComplete"
PATH_FOUND = "PathFound"
FAILURE = "Failure"


class WrongPhase(RuntimeError):
    pass


class IncompatibleConfig(ValueError):
    pass


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    payload: dict

    def to_json(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload}


def _xy(cell: Cell) -> list[int]:
    return [int(cell[0]), int(cell[1])]


@dataclass
class ValueParams:
    alpha: float = 0.5
    gamma: float = 0.9
    lam: float = 0.5
    reveal_radius: int = 2
    beta: float = 0.1


class PlanningSession:
    """One planning run; mutate only through step() and submit_verdict()."""

    def __init__(
        self,
        grid: GridMap,
        planner: str,
        advisor: Advisor | None,
        autopilot: bool = True,
        value_params: ValueParams | None = None,
        session_id: str | None = None,
    ):
        if planner not in PLANNERS:
            raise IncompatibleConfig(f"unknown planner {planner!r}")
        if planner in LLM_PLANNERS and advisor is None:
            raise IncompatibleConfig(f"{planner} requires an advisor")
        if advisor is not None and advisor.kind == "human":
            autopilot = False  # a human must be asked, never auto-applied

        self.id = session_id or uuid.uuid4().hex[:12]
        self.grid = grid
        self.planner = planner
        self.advisor = advisor
        self.autopilot = autopilot
        self.guided = planner in LLM_PLANNERS
        self.mode = "greedy" if planner.endswith("greedy") else "astar"

        self.phase = INIT
        self.stage_index = 0
        self.current = grid.start
        self.subgoal: Cell | None = None
        self.events: list[SessionEvent] = []
        self.transcript: list[dict] = []
        self.key_points: list[KeyPoint] = []
        self._seq = itertools.count(1)
        self._engine: SearchEngine | None = None
        self._stage_retry_used = False
        self._expansion_base = 0  # session-wide expansion count before this stage
        self._committed_where: dict[Cell, str] = {}
        self._committed_path: list[Cell] = []
        self._committed_expansions: list[Cell] = []
        self._committed_verdicts: list[tuple[Cell, bool]] = []
        self.final_outcome: SearchOutcome | None = None
        self.failure_reason: str | None = None

        if self.guided:
            params = value_params or ValueParams()
            self.value: ValueTable | None = ValueTable(
                grid,
                alpha=params.alpha,
                gamma=params.gamma,
                lam=params.lam,
                reveal_radius=params.reveal_radius,
                beta=params.beta,
            )
            self.mask: ObservationMask | None = ObservationMask(grid.width, grid.height)
            self.mask.advance(grid.start, self.value.reveal_radius)
        else:
            self.value = None
            self.mask = None

        if advisor is not None:
            system_text = advisor.begin_session(grid)
            self.transcript.append({"role": "system", "text": system_text})

        self.phase = AWAIT_SEED if self.guided else EXPANDING
        if not self.guided:
            self.subgoal = grid.goal
            self._engine = self._make_engine(grid.start, grid.goal)

    # -- internals -----------------------------------------------------------

    def _make_engine(self, start: Cell, target: Cell) -> SearchEngine:
        return SearchEngine(
            self.grid,
            start,
            target,
            cost_model=CostModel(mode=self.mode),
            value=self.value,
            filtered=self.guided,
        )

    def _emit(self, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(next(self._seq), kind, payload)
        self.events.append(event)
        return event

    def _say(self, role: str, text: str) -> None:
        if text:
            self.transcript.append({"role": role, "text": text})

    def _commit_stage(self) -> None:
        """Fold the live engine's frontier history into the session record."""
        assert self._engine is not None
        outcome = self._engine.outcome()
        for cell, state in self._engine.where.items():
            prior = self._committed_where.get(cell)
            state = "open" if state == "pending" else state
            if prior == "closed" or (prior == "open" and state == "deferred"):
                continue
            if state == "closed" or prior is None or prior == "deferred":
                self._committed_where[cell] = state
        if outcome.path:
            if self._committed_path:
                self._committed_path.extend(outcome.path[1:])
            else:
                self._committed_path.extend(outcome.path)
        self._committed_expansions.extend(outcome.expansions)
        self._committed_verdicts.extend(outcome.verdict_log)
        self._expansion_base += len(outcome.expansions)
        self._engine = None

    def _merged_outcome(self) -> SearchOutcome:
        where = dict(self._committed_where)
        if self._engine is not None:
            for cell, state in self._engine.where.items():
                prior = where.get(cell)
                state = "open" if state == "pending" else state
                if prior == "closed" or (prior == "open" and state == "deferred"):
                    continue
                if state == "closed" or prior is None or prior == "deferred":
                    where[cell] = state
        expansions = list(self._committed_expansions)
        verdicts = list(self._committed_verdicts)
        if self._engine is not None:
            expansions.extend(self._engine.expansions)
            verdicts.extend(self._engine.verdict_log)
        path = list(self._committed_path)
        cost = sum(
            abs(a[0] - b[0]) + abs(a[1] - b[1]) for a, b in zip(path, path[1:])
        )
        return SearchOutcome(
            path=path,
            path_cost=cost,
            open_final={c for c, w in where.items() if w == "open"},
            closed_final={c for c, w in where.items() if w == "closed"},
            deferred_final={c for c, w in where.items() if w == "deferred"},
            expansions=expansions,
            jump_points=list(self.key_points),
            verdict_log=verdicts,
        )

    def _open_stage(self) -> SessionEvent:
        assert self.advisor is not None and self.value is not None
        response = self.advisor.open_stage(
            self.current,
            self.grid.goal,
            self.key_points,
            self.mask,
            retry=self._stage_retry_used,
        )
        self._say("advisor", response.rationale)
        subgoal = response.subgoal if response.subgoal is not None else self.grid.goal
        seed = response.reward_seed if response.reward_seed is not None else EMPTY_SEED
        self.value.apply_reward_seed(seed)
        self.subgoal = subgoal
        self._engine = self._make_engine(self.current, subgoal)
        self.phase = EXPANDING
        return self._emit(
            SUBGOAL_CHOSEN,
            {
                "stage": self.stage_index,
                "subgoal": _xy(subgoal),
                "seed": seed.to_json(),
            },
        )

    def _learn_from_expansion(self, cell: Cell) -> None:
        if self.value is None or self.mask is None:
            return
        parent = self._engine.parent.get(cell) if self._engine else None
        if parent is not None:
            reward = pcat_reward(parent, cell, self.mask, self.value.active_seed, self.value)
            td_update(self.value, parent, cell, reward)
        self.mask.advance(cell, self.value.reveal_radius)

    def _handle_exhausted(self) -> SessionEvent:
        self._commit_stage()
        if self.guided and not self._stage_retry_used:
            # one re-request of a different sub-goal before giving up
            self._stage_retry_used = True
            if self.advisor is not None and self.subgoal is not None:
                self.advisor.note_subgoal_reached(self.subgoal)  # exclude it
            self.phase = AWAIT_SEED
            return self._emit(
                STAGE_COMPLETE,
                {"stage": self.stage_index, "reached": False, "retry": True},
            )
        self.phase = FAILED
        self.failure_reason = "no path to target"
        self.final_outcome = self._merged_outcome()
        return self._emit(FAILURE, {"reason": self.failure_reason})

    # -- public API ------------------------------------------------------------

    def step(self) -> SessionEvent:
        """Advance exactly one unit of work and return its event."""
        if self.phase == AWAIT_SEED:
            return self._open_stage()
        if self.phase == STAGE_DONE:
            if self.subgoal == self.grid.goal:
                self.phase = DONE
                self.final_outcome = self._merged_outcome()
                return self._emit(
                    PATH_FOUND,
                    {
                        "path": [_xy(c) for c in self.final_outcome.path],
                        "path_cost": self.final_outcome.path_cost,
                        "metrics": self.metrics(),
                    },
                )
            self.current = self.subgoal
            self.stage_index += 1
            self._stage_retry_used = False
            self.phase = AWAIT_SEED
            return self._emit(
                STAGE_COMPLETE,
                {"stage": self.stage_index - 1, "reached": True, "retry": False},
            )
        if self.phase != EXPANDING:
            raise WrongPhase(f"cannot step in phase {self.phase}")

        assert self._engine is not None
        step = self._engine.expand_once()
        if step.kind == "exhausted":
            return self._handle_exhausted()

        cell = step.cell
        if step.jump is not None:
            self.key_points.append(
                KeyPoint(step.jump.cell, self._expansion_base + step.jump.discovered_at_expansion)
            )
        self._learn_from_expansion(cell)

        if step.kind == "finished":
            if self.advisor is not None:
                self.advisor.note_subgoal_reached(self.subgoal)
            self._commit_stage()
            self.phase = STAGE_DONE
            return self._emit(
                EXPANSION,
                {
                    "cell": _xy(cell),
                    "g": step.g,
                    "h": step.h,
                    "f": step.f,
                    "stage": self.stage_index,
                    "stage_complete": True,
                },
            )

        payload = {
            "cell": _xy(cell),
            "g": step.g,
            "h": step.h,
            "f": step.f,
            "stage": self.stage_index,
            "opened": [_xy(c.cell) for c in step.fresh],
        }
        if self._engine.pending is not None:
            if self.autopilot and self.advisor is not None:
                response = self.advisor.request_verdicts(
                    self._engine.candidate_set(self.stage_index)
                )
                self._say("advisor", response.rationale)
                self._engine.apply_verdicts(response.verdicts)
                payload["verdicts"] = [
                    {"id": c.id, "cell": _xy(c.cell), "accept": bool(response.verdicts[c.id])}
                    for c in step.fresh
                ]
                return self._emit(EXPANSION, payload)
            self.phase = AWAIT_VERDICT
            return self._emit(
                PROPOSAL,
                {
                    "cell": _xy(cell),
                    "stage": self.stage_index,
                    "candidates": [
                        {"id": c.id, "cell": _xy(c.cell), "f": c.f, "g": c.g, "h": c.h}
                        for c in step.fresh
                    ],
                },
            )
        return self._emit(EXPANSION, payload)

    def submit_verdict(self, verdicts: Mapping[int, bool]) -> SessionEvent:
        """Apply human/advisor verdicts to the pending proposal."""
        if self.phase != AWAIT_VERDICT:
            raise WrongPhase(f"no proposal pending in phase {self.phase}")
        assert self._engine is not None
        pending = list(self._engine.pending or [])
        self._engine.apply_verdicts(verdicts)
        self._say(
            "human",
            "; ".join(
                f"{'ACCEPT' if verdicts[c.id] else 'DECLINE'} {c.id}" for c in pending
            ),
        )
        self.phase = EXPANDING
        return self._emit(
            VERDICT_APPLIED,
            {
                "verdicts": [
                    {"id": c.id, "cell": _xy(c.cell), "accept": bool(verdicts[c.id])}
                    for c in pending
                ]
            },
        )

    def pending_candidates(self) -> list[dict]:
        if self.phase != AWAIT_VERDICT or self._engine is None or self._engine.pending is None:
            return []
        return [
            {"id": c.id, "cell": _xy(c.cell), "f": c.f, "g": c.g, "h": c.h}
            for c in self._engine.pending
        ]

    def metrics(self) -> dict:
        outcome = self.final_outcome or self._merged_outcome()
        done = self.phase == DONE
        return {
            "path_length": path_length(outcome.path) if done else 0,
            "path_cost": outcome.path_cost if done else 0,
            "mdt": mdt(outcome.path, self.grid.start, self.grid.goal) if done else 0,
            "complexity": search_complexity(outcome, self.planner),
            "expansions": len(outcome.expansions),
            "stage": self.stage_index,
        }

    def snapshot(self) -> dict:
        """Immutable render model: grid classes, metrics, transcript, proposal."""
        outcome = self.final_outcome or self._merged_outcome()
        classes = ["obstacle" if not self.grid.is_free(Cell(x, y)) else "free"
                   for y in range(self.grid.height) for x in range(self.grid.width)]

        def put(cell: Cell, name: str) -> None:
            classes[cell[1] * self.grid.width + cell[0]] = name

        for cell in outcome.open_final:
            put(cell, "open")
        for cell in outcome.closed_final:
            put(cell, "closed")
        for cell in outcome.deferred_final:
            put(cell, "deferred")
        gradient = []
        if self.phase == DONE:
            for i, cell in enumerate(outcome.path):
                put(cell, "path")
                gradient.append({"cell": _xy(cell), "index": i})
        put(self.grid.start, "start")
        put(self.grid.goal, "goal")
        return {
            "id": self.id,
            "phase": self.phase,
            "planner": self.planner,
            "advisor": self.advisor.kind if self.advisor else "none",
            "autopilot": self.autopilot,
            "width": self.grid.width,
            "height": self.grid.height,
            "map_name": self.grid.name,
            "cells": classes,
            "path_gradient": gradient,
            "metrics": self.metrics(),
            "transcript": list(self.transcript),
            "pending": self.pending_candidates(),
            "seq": self.events[-1].seq if self.events else 0,
            "failure_reason": self.failure_reason,
        }

    def run_to_completion(self, max_steps: int = 1_000_000) -> SearchOutcome:
        """Autopilot convenience: step until Done or Failed."""
        for _ in range(max_steps):
            if self.phase in (DONE, FAILED):
                break
            self.step()
        if self.phase == DONE:
            return self.final_outcome
        if self.phase == FAILED:
            return self.final_outcome or self._merged_outcome()
        raise RuntimeError("session did not terminate within max_steps")


def create_session(
    grid: GridMap,
    planner: str,
    advisor: Advisor | None = None,
    autopilot: bool = True,
    value_params: ValueParams | None = None,
    session_id: str | None = None,
) -> PlanningSession:
    return PlanningSession(grid, planner, advisor, autopilot, value_params, session_id)


def replay_events(
    grid: GridMap,
    planner: str,
    advisor: Advisor | None,
    events: list[SessionEvent],
    autopilot: bool = True,
    value_params: ValueParams | None = None,
    session_id: str | None = None,
) -> PlanningSession:
    """Drive a fresh session by the recorded event log.

    Verdict events are re-submitted verbatim; every other event is a plain
    step. With a deterministic advisor the rebuilt session emits the same
    event sequence and lands on an identical snapshot.
    """
    session = create_session(grid, planner, advisor, autopilot, value_params, session_id)
    for event in events:
        if event.kind == VERDICT_APPLIED:
            verdicts = {v["id"]: v["accept"] for v in event.payload["verdicts"]}
            session.submit_verdict(verdicts)
        else:
            session.step()
    return session
