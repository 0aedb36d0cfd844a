import json

import pytest

from gridplan.advisor import ScriptedOracle
from gridplan.grid import Cell, load_map
from gridplan.session import (
    AWAIT_SEED,
    AWAIT_VERDICT,
    DONE,
    EXPANDING,
    FAILED,
    STAGE_DONE,
    IncompatibleConfig,
    WrongPhase,
    create_session,
    replay_events,
)

from oracles import dijkstra_cost, random_solvable_grids


def drain(session, max_steps=100000):
    while session.phase not in (DONE, FAILED):
        if session.phase == AWAIT_VERDICT:
            session.submit_verdict({c["id"]: True for c in session.pending_candidates()})
        else:
            session.step()
    return session


def test_plain_astar_starts_expanding(corridor):
    s = create_session(corridor, "astar")
    assert s.phase == EXPANDING


def test_llm_planner_requires_advisor(corridor):
    with pytest.raises(IncompatibleConfig):
        create_session(corridor, "llm-astar")


def test_llm_with_scripted_awaits_seed(corridor):
    s = create_session(corridor, "llm-astar", ScriptedOracle())
    assert s.phase == AWAIT_SEED
    assert len(s.transcript) == 1
    assert s.transcript[0]["role"] == "system"


def test_unknown_planner(corridor):
    with pytest.raises(IncompatibleConfig):
        create_session(corridor, "dfs")


def test_corridor_autopilot_event_sequence(corridor):
    s = create_session(corridor, "astar")
    kinds = []
    while s.phase not in (DONE, FAILED):
        kinds.append(s.step().kind)
    assert s.phase == DONE
    assert kinds[:-1] == ["Expansion"] * 5
    assert kinds[-1] == "PathFound"
    assert s.metrics()["path_length"] == 5
    assert s.metrics()["expansions"] == 5


def test_event_seqs_gap_free(corridor):
    s = drain(create_session(corridor, "llm-astar", ScriptedOracle()))
    seqs = [e.seq for e in s.events]
    assert seqs == list(range(1, len(seqs) + 1))


def test_step_wrong_phase_after_done(corridor):
    s = drain(create_session(corridor, "astar"))
    with pytest.raises(WrongPhase):
        s.step()
    with pytest.raises(WrongPhase):
        s.submit_verdict({})


def test_verdict_outside_await_verdict(corridor):
    s = create_session(corridor, "astar")
    with pytest.raises(WrongPhase):
        s.submit_verdict({0: True})


def test_interactive_session_pauses_and_resumes(open_5x5):
    s = create_session(open_5x5, "llm-astar", ScriptedOracle(), autopilot=False)
    assert s.step().kind == "SubgoalChosen"
    event = s.step()  # first expansion generates fresh candidates
    assert event.kind == "Proposal"
    assert s.phase == AWAIT_VERDICT
    with pytest.raises(WrongPhase):
        s.step()
    cands = s.pending_candidates()
    applied = s.submit_verdict({c["id"]: True for c in cands})
    assert applied.kind == "VerdictApplied"
    assert s.phase == EXPANDING
    drain(s)
    assert s.phase == DONE


def test_partial_verdicts_rejected(open_5x5):
    from gridplan.search import UnknownCandidate

    s = create_session(open_5x5, "llm-astar", ScriptedOracle(), autopilot=False)
    s.step()
    s.step()
    cands = s.pending_candidates()
    with pytest.raises(UnknownCandidate):
        s.submit_verdict({cands[0]["id"]: True})


def test_decline_all_still_reaches_goal(open_5x5):
    s = create_session(open_5x5, "llm-astar", ScriptedOracle(), autopilot=False)
    while s.phase not in (DONE, FAILED):
        if s.phase == AWAIT_VERDICT:
            s.submit_verdict({c["id"]: False for c in s.pending_candidates()})
        else:
            s.step()
    assert s.phase == DONE
    out = s.final_outcome
    assert out.path[0] == open_5x5.start
    assert out.path[-1] == open_5x5.goal


def test_l_corridor_guided_session_completes(l_corridor):
    s = create_session(l_corridor, "llm-astar", ScriptedOracle())
    drain(s)
    assert s.phase == DONE
    path = s.final_outcome.path
    assert path[0] == l_corridor.start
    assert path[-1] == l_corridor.goal
    for a, b in zip(path, path[1:]):
        assert max(abs(a.x - b.x), abs(a.y - b.y)) == 1


def test_multi_stage_on_long_corridor():
    # line-of-sight is limited by the reveal radius, so the oracle advances
    # through several staged sub-goals before the goal becomes visible
    m = load_map("S" + "." * 10 + "G", name="long")
    s = create_session(m, "llm-astar", ScriptedOracle())
    subgoals = []
    while s.phase not in (DONE, FAILED):
        event = s.step()
        if event.kind == "SubgoalChosen":
            subgoals.append(tuple(event.payload["subgoal"]))
    assert s.phase == DONE
    assert s.stage_index >= 2
    assert subgoals[-1] == (11, 0)
    # concatenated stage paths form one connected start-to-goal path
    path = s.final_outcome.path
    assert path[0] == m.start and path[-1] == m.goal
    assert len(set(path)) == len(path)


def test_stagewise_costs_match_per_stage_oracle(l_corridor):
    # accept-all guided A*: each stage is admissible A*, so the concatenated
    # cost equals the sum of per-stage shortest costs
    class AcceptAll(ScriptedOracle):
        def request_verdicts(self, candidates):
            from gridplan.advisor import AdvisorResponse

            return AdvisorResponse(
                verdicts={c.id: True for c in candidates.candidates}
            )

    s = create_session(l_corridor, "llm-astar", AcceptAll())
    waypoints = [l_corridor.start]
    while s.phase not in (DONE, FAILED):
        event = s.step()
        if event.kind == "SubgoalChosen":
            waypoints.append(Cell(*event.payload["subgoal"]))
    assert s.phase == DONE
    expected = sum(
        dijkstra_cost(l_corridor, a, b) for a, b in zip(waypoints, waypoints[1:])
    )
    assert s.final_outcome.path_cost == expected


def test_session_failure_on_unsolvable():
    m = load_map("S#G")
    s = drain(create_session(m, "astar"))
    assert s.phase == FAILED
    assert s.events[-1].kind == "Failure"


def test_guided_failure_retries_once_then_fails():
    m = load_map("S#G")
    s = drain(create_session(m, "llm-astar", ScriptedOracle()))
    assert s.phase == FAILED
    kinds = [e.kind for e in s.events]
    # one retried stage: StageComplete(reached=False) before the Failure
    assert "StageComplete" in kinds
    retry_events = [
        e for e in s.events if e.kind == "StageComplete" and e.payload["retry"]
    ]
    assert len(retry_events) == 1


def test_guided_sessions_complete_on_random_maps():
    for grid in random_solvable_grids(seed=50, count=15):
        s = drain(create_session(grid, "llm-astar", ScriptedOracle()))
        assert s.phase == DONE, f"failed on {grid.to_text()}"
        s2 = drain(create_session(grid, "llm-greedy", ScriptedOracle()))
        assert s2.phase == DONE


def test_snapshot_purity(open_5x5):
    s = create_session(open_5x5, "llm-astar", ScriptedOracle())
    s.step()
    s.step()
    snap_a = json.dumps(s.snapshot(), sort_keys=True)
    snap_b = json.dumps(s.snapshot(), sort_keys=True)
    assert snap_a == snap_b


def test_snapshot_fresh_session_classes(open_5x5):
    s = create_session(open_5x5, "astar")
    snap = s.snapshot()
    kinds = set(snap["cells"])
    assert kinds <= {"free", "obstacle", "start", "goal", "open", "closed"}
    assert snap["cells"][0] == "start"
    assert snap["pending"] == []
    assert snap["metrics"]["path_length"] == 0


def test_snapshot_done_has_gradient(corridor):
    s = drain(create_session(corridor, "astar"))
    snap = s.snapshot()
    path_cells = [c for c in snap["cells"] if c == "path"]
    # start and goal overlay the two endpoints; 3 middle cells remain "path"
    assert len(path_cells) == 3
    assert len(snap["path_gradient"]) == 5
    indices = [g["index"] for g in snap["path_gradient"]]
    assert indices == sorted(indices)


def test_event_replay_reproduces_snapshot():
    for grid in random_solvable_grids(seed=51, count=5):
        s = drain(create_session(grid, "llm-astar", ScriptedOracle(), session_id="fix"))
        replayed = replay_events(
            grid, "llm-astar", ScriptedOracle(), s.events, session_id="fix"
        )
        original = json.dumps(s.snapshot(), sort_keys=True).encode()
        again = json.dumps(replayed.snapshot(), sort_keys=True).encode()
        assert original == again


def test_replay_interactive_session(open_5x5):
    import random

    rng = random.Random(4)
    s = create_session(
        open_5x5, "llm-astar", ScriptedOracle(), autopilot=False, session_id="fix"
    )
    while s.phase not in (DONE, FAILED):
        if s.phase == AWAIT_VERDICT:
            s.submit_verdict(
                {c["id"]: rng.random() < 0.7 for c in s.pending_candidates()}
            )
        else:
            s.step()
    assert s.phase == DONE
    replayed = replay_events(
        open_5x5,
        "llm-astar",
        ScriptedOracle(),
        s.events,
        autopilot=False,
        session_id="fix",
    )
    assert json.dumps(replayed.snapshot(), sort_keys=True) == json.dumps(
        s.snapshot(), sort_keys=True
    )


def test_merged_outcome_sets_disjoint(l_corridor):
    s = drain(create_session(l_corridor, "llm-astar", ScriptedOracle()))
    out = s.final_outcome
    assert not (out.open_final & out.closed_final)
    assert not (out.open_final & out.deferred_final)
    assert not (out.closed_final & out.deferred_final)
    # all path cells were expanded somewhere
    assert set(out.path) <= out.closed_final
