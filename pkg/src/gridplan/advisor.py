"""High-level advisors that steer the search: verdicts, sub-goals, reward seeds.

Three interchangeable advisors share one interface:

* ScriptedOracle — deterministic line-of-sight rules; what CI and the
  benchmark harness run.
* LlmChatAdvisor — prompts a chat-completion endpoint and parses its
  replies with a constrained grammar (ACCEPT/DECLINE/SUBGOAL/SEED).
* HumanProxy — parks every decision on a channel until a person rules.

Advisors never mutate planner state; everything they decide flows back
through AdvisorResponse.
"""

from __future__ import annotations

import json
import queue
import re
from dataclasses import dataclass, field

from .chat import EndpointConfig, llm_chat
from .grid import Cell, GridMap, manhattan
from .search import CandidateSet, KeyPoint
from .values import ObservationMask, RewardSeed


class AdvisorTimeout(RuntimeError):
    pass


class MalformedReply(ValueError):
    pass


@dataclass
class AdvisorResponse:
    """The advisor's ruling: verdicts keyed by candidate id (True = accept),
    plus an optional sub-goal and reward seed, and free-text rationale for
    the transcript."""

    verdicts: dict[int, bool] = field(default_factory=dict)
    subgoal: Cell | None = None
    reward_seed: RewardSeed | None = None
    rationale: str = ""


def line_cells(a: Cell, b: Cell) -> list[Cell]:
    """Cells of the discrete (Bresenham) line a -> b, excluding a."""
    x0, y0 = a
    x1, y1 = b
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    out = []
    x, y = x0, y0
    while (x, y) != (x1, y1):
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
        out.append(Cell(x, y))
    return out


def segment_free(grid: GridMap, a: Cell, b: Cell, limit: int | None = None) -> bool:
    """True when the discrete line a -> b crosses only free cells.

    With a limit, only the first `limit` line cells are checked.
    """
    cells = line_cells(a, b)
    if limit is not None:
        cells = cells[:limit]
    return all(grid.in_bounds(c) and grid.is_free(c) for c in cells)


def build_init_prompt(grid: GridMap, rules_extra: str = "") -> str:
    """The session system prompt: environment facts plus planning rules.

    Deterministic for a given map, so transcripts are reproducible.
    """
    obstacles = grid.obstacle_cells()
    obstacle_text = ", ".join(f"({c.x},{c.y})" for c in obstacles) or "none"
    lines = [
        f"You are guiding a path-planning search on a {grid.width}x{grid.height} occupancy grid.",
        "Setup:",
        f"1. Initial state at ({grid.start.x},{grid.start.y}); goal state at ({grid.goal.x},{grid.goal.y}).",
        f"2. Obstacle cells ({len(obstacles)} total): {obstacle_text}.",
        "3. Action space: 8 compass moves (N, NE, E, SE, S, SW, W, NW); "
        "orthogonal moves cost 1, diagonal moves cost 2, and a diagonal is "
        "legal only when both flanking orthogonal cells are free.",
        "4. Cumulative and heuristic costs use Manhattan distance.",
        "5. Objective: plan a collision-free path from the initial state to the goal state.",
        "Planning rules:",
        "1. A viable path must avoid colliding with obstacles.",
        "2. The path should expand along the direction suggested by the heuristic or human guidance.",
        "3. Prefer actions that accelerate the planning process.",
        "Reply format (strict):",
        "- Verdicts: 'ACCEPT <ids>' and 'DECLINE <ids>' with comma-separated candidate ids.",
        "- Sub-goal: 'SUBGOAL (x,y)'.",
        "- Reward seed: 'SEED' followed by a JSON array of {\"cell\": [x, y], \"reward\": number in [-1,1]}.",
    ]
    if rules_extra:
        lines.append(rules_extra)
    return "\n".join(lines)


_ACCEPT_RE = re.compile(r"\bACCEPT\b[:\s]*([0-9,\s]+)", re.IGNORECASE)
_DECLINE_RE = re.compile(r"\bDECLINE\b[:\s]*([0-9,\s]+)", re.IGNORECASE)
_SUBGOAL_RE = re.compile(r"\bSUBGOAL\b[:\s]*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)", re.IGNORECASE)
_SEED_RE = re.compile(r"\bSEED\b[:\s]*\[", re.IGNORECASE)


def _parse_ids(fragment: str) -> list[int]:
    return [int(tok) for tok in re.split(r"[,\s]+", fragment.strip()) if tok]


def _extract_seed_block(text: str) -> str | None:
    """Slice out the bracket-balanced JSON array following a SEED marker."""
    match = _SEED_RE.search(text)
    if not match:
        return None
    start = match.end() - 1
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "[":
            depth += 1
        elif text[i] == "]":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def parse_reply(text: str) -> AdvisorResponse:
    """Extract verdicts, an optional sub-goal and an optional seed from
    free-form advisor text. Raises MalformedReply when no recognizable
    token is present at all."""
    verdicts: dict[int, bool] = {}
    for match in _ACCEPT_RE.finditer(text):
        for cid in _parse_ids(match.group(1)):
            verdicts[cid] = True
    for match in _DECLINE_RE.finditer(text):
        for cid in _parse_ids(match.group(1)):
            verdicts[cid] = False

    subgoal = None
    sg = _SUBGOAL_RE.search(text)
    if sg:
        subgoal = Cell(int(sg.group(1)), int(sg.group(2)))

    seed = None
    block = _extract_seed_block(text)
    if block is not None:
        try:
            seed = RewardSeed.from_json(json.loads(block))
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedReply(f"unparseable SEED block: {exc}") from exc

    if not verdicts and subgoal is None and seed is None:
        raise MalformedReply(f"no verdict/subgoal/seed tokens in reply: {text[:80]!r}")
    return AdvisorResponse(verdicts=verdicts, subgoal=subgoal, reward_seed=seed, rationale=text)


class Advisor:
    """Common advisor surface used by the session orchestrator."""

    kind = "none"

    def begin_session(self, grid: GridMap) -> str:
        """Bind to a map; returns the transcript's opening system text."""
        self.grid = grid
        self.subgoal: Cell | None = None
        self._achieved: set[Cell] = set()
        return build_init_prompt(grid)

    def note_subgoal_reached(self, cell: Cell) -> None:
        self._achieved.add(cell)

    def open_stage(
        self,
        current: Cell,
        goal: Cell,
        key_points: list[KeyPoint],
        mask: ObservationMask,
        retry: bool = False,
    ) -> AdvisorResponse:
        raise NotImplementedError

    def request_verdicts(self, candidates: CandidateSet) -> AdvisorResponse:
        raise NotImplementedError


class ScriptedOracle(Advisor):
    """Deterministic stand-in for the language model.

    Sub-goal: the farthest already-seen free cell on the discrete line to
    the goal whose segment from the current cell is obstacle-free; falls
    back to the recorded key point nearest the goal, then to the goal
    itself. Verdicts: accept a candidate when its straight segment toward
    the current sub-goal is clear within `lookahead` cells, or when it
    carries the minimum f of the set (progress guarantee).
    """

    kind = "scripted"

    def __init__(self, lookahead: int = 4, seed_profile: str = "subgoal"):
        if seed_profile not in ("none", "subgoal"):
            raise ValueError(f"unknown seed profile {seed_profile!r}")
        self.lookahead = lookahead
        self.seed_profile = seed_profile

    def choose_subgoal(
        self,
        grid: GridMap,
        current: Cell,
        goal: Cell,
        key_points: list[KeyPoint],
        mask: ObservationMask,
    ) -> Cell:
        if mask.is_seen(goal):
            return goal
        best: Cell | None = None
        for cell in line_cells(current, goal):
            if not grid.in_bounds(cell) or not grid.is_free(cell):
                break  # the segment is blocked from here on
            if not mask.is_seen(cell):
                continue
            if cell != current and cell not in self._achieved:
                best = cell
        if best is not None:
            return best
        fallback = [
            kp.cell
            for kp in key_points
            if kp.cell != current and kp.cell not in self._achieved
        ]
        if fallback:
            return min(fallback, key=lambda c: (manhattan(c, goal), c.x, c.y))
        return goal  # NoViableSubgoal is never fatal

    def _stage_seed(self, current: Cell, subgoal: Cell) -> RewardSeed:
        if self.seed_profile == "none":
            return RewardSeed()
        entries: dict[Cell, float] = {}
        for cell in line_cells(current, subgoal):
            if not self.grid.in_bounds(cell) or not self.grid.is_free(cell):
                break
            entries[cell] = 0.25
        entries[subgoal] = 1.0
        return RewardSeed(entries)

    def open_stage(self, current, goal, key_points, mask, retry=False):
        if retry:
            # after a failed stage the only guaranteed-reachable target is
            # the goal itself (same connected component as the start)
            subgoal = goal
        else:
            subgoal = self.choose_subgoal(self.grid, current, goal, key_points, mask)
        self.subgoal = subgoal
        return AdvisorResponse(
            subgoal=subgoal,
            reward_seed=self._stage_seed(current, subgoal),
            rationale=f"SUBGOAL ({subgoal.x},{subgoal.y})",
        )

    def request_verdicts(self, candidates: CandidateSet) -> AdvisorResponse:
        target = self.subgoal if self.subgoal is not None else self.grid.goal
        # "minimum cost" is judged by the planner's own cost convention:
        # g+h for A*-style searches, h alone for greedy ones
        if candidates.context.mode == "greedy":
            cost = {c.id: c.h for c in candidates.candidates}
        else:
            cost = {c.id: c.f for c in candidates.candidates}
        min_cost = min(cost.values())
        src = candidates.context.expanded
        verdicts = {}
        for cand in candidates.candidates:
            if cost[cand.id] == min_cost:
                verdicts[cand.id] = True  # progress guarantee
                continue
            # expansion-direction preference: prune only moves that regress
            # on both axes at once and have no clear straight shot at the
            # sub-goal; anything less clearly wrong stays in play
            doubly_backward = False
            if src is not None:
                sx = cand.cell.x - src.x
                sy = cand.cell.y - src.y
                tx = target.x - src.x
                ty = target.y - src.y
                doubly_backward = (sx * tx < 0 or (sx != 0 and tx == 0)) and (
                    sy * ty < 0 or (sy != 0 and ty == 0)
                )
            verdicts[cand.id] = not doubly_backward or segment_free(
                self.grid, cand.cell, target, limit=self.lookahead
            )
        accepted = sorted(i for i, v in verdicts.items() if v)
        declined = sorted(i for i, v in verdicts.items() if not v)
        parts = []
        if accepted:
            parts.append("ACCEPT " + ",".join(map(str, accepted)))
        if declined:
            parts.append("DECLINE " + ",".join(map(str, declined)))
        return AdvisorResponse(verdicts=verdicts, rationale="; ".join(parts))


class LlmChatAdvisor(Advisor):
    """Chat-completion-backed advisor speaking the constrained grammar.

    A malformed reply degrades to accept-all for that round (liveness over
    advisor fidelity); the raw reply is kept in the rationale either way.
    """

    kind = "llm"

    def __init__(self, endpoint: EndpointConfig | None = None):
        self.endpoint = endpoint or EndpointConfig()
        self.messages: list[dict] = []

    def begin_session(self, grid: GridMap) -> str:
        system_text = super().begin_session(grid)
        self.messages = [{"role": "system", "content": system_text}]
        return system_text

    def _round_trip(self, user_text: str) -> str:
        self.messages.append({"role": "user", "content": user_text})
        reply = llm_chat(self.endpoint, self.messages)
        self.messages.append({"role": "assistant", "content": reply})
        return reply

    def open_stage(self, current, goal, key_points, mask, retry=False):
        kp_text = ", ".join(f"({k.cell.x},{k.cell.y})" for k in key_points) or "none"
        prompt = (
            f"Stage update. Agent at ({current.x},{current.y}), goal at "
            f"({goal.x},{goal.y}). Seen cells: {mask.seen_count()}. "
            f"Jump points so far: {kp_text}. "
            "Choose the next SUBGOAL (x,y) and optionally a SEED reward array."
        )
        if retry:
            prompt += " The previous sub-goal was unreachable; choose a different one."
        reply = self._round_trip(prompt)
        try:
            parsed = parse_reply(reply)
        except MalformedReply:
            return AdvisorResponse(subgoal=goal, rationale=reply)
        subgoal = parsed.subgoal
        if (
            subgoal is None
            or not self.grid.in_bounds(subgoal)
            or not self.grid.is_free(subgoal)
        ):
            subgoal = goal
        self.subgoal = subgoal
        return AdvisorResponse(
            subgoal=subgoal, reward_seed=parsed.reward_seed, rationale=reply
        )

    def request_verdicts(self, candidates: CandidateSet) -> AdvisorResponse:
        listing = "; ".join(
            f"id {c.id}: cell ({c.cell.x},{c.cell.y}) f={c.f:.1f} g={c.g:.1f} h={c.h:.1f}"
            for c in candidates.candidates
        )
        prompt = (
            f"Expansion round (stage {candidates.context.stage}, "
            f"{candidates.context.explored} cells explored). Candidates: {listing}. "
            "Rule on every id with ACCEPT/DECLINE."
        )
        reply = self._round_trip(prompt)
        try:
            parsed = parse_reply(reply)
            verdicts = dict(parsed.verdicts)
        except MalformedReply:
            verdicts = {}
        # total response: unanswered candidates default to accept
        for cand in candidates.candidates:
            verdicts.setdefault(cand.id, True)
        verdicts = {c.id: verdicts[c.id] for c in candidates.candidates}
        return AdvisorResponse(verdicts=verdicts, rationale=reply)


class VerdictChannel:
    """Hand-off point between a blocked advisor call and a human decision."""

    def __init__(self):
        self._box: queue.Queue = queue.Queue(maxsize=1)

    def submit(self, response: AdvisorResponse) -> None:
        self._box.put(response)

    def wait(self, timeout: float | None = None) -> AdvisorResponse:
        try:
            return self._box.get(timeout=timeout)
        except queue.Empty as exc:
            raise AdvisorTimeout("no human verdict arrived in time") from exc


class HumanProxy(Advisor):
    """Blocks until a person submits decisions through the channel.

    Inside a session the orchestrator never actually blocks: it parks the
    session in the awaiting-verdict phase instead and the service resumes
    it on submission. The blocking path serves direct library use.
    """

    kind = "human"

    def __init__(self, channel: VerdictChannel | None = None, timeout: float | None = None):
        self.channel = channel or VerdictChannel()
        self.timeout = timeout

    def open_stage(self, current, goal, key_points, mask, retry=False):
        # humans steer through verdicts; the stage target is simply the goal
        self.subgoal = goal
        return AdvisorResponse(subgoal=goal, rationale="human-guided stage")

    def request_verdicts(self, candidates: CandidateSet) -> AdvisorResponse:
        response = self.channel.wait(self.timeout)
        for cand in candidates.candidates:
            response.verdicts.setdefault(cand.id, True)
        return response


def make_advisor(name: str, endpoint: EndpointConfig | None = None) -> Advisor | None:
    """Factory for CLI/service advisor names."""
    if name in ("none", ""):
        return None
    if name == "scripted":
        return ScriptedOracle()
    if name == "openai":
        return LlmChatAdvisor(endpoint)
    if name == "human":
        return HumanProxy()
    raise ValueError(f"unknown advisor {name!r}")
