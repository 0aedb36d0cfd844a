"""Record real service wire traffic into frontend test fixtures.

The browser console's tests replay these captures, so the UI logic is
exercised against genuine server payloads without a running backend.
Regenerate with:  python tools/make_ui_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from gridplan.service import build_app

FIXTURES = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures"

CORRIDOR = "S....\n.....\n....G\n"


def record_interactive(client: TestClient, verdict_policy) -> dict:
    """One interactive llm-astar session; verdict_policy(candidates) -> list."""
    ws = client.post(
        "/sessions",
        json={
            "map_text": CORRIDOR,
            "map_name": "ui-fixture",
            "planner": "llm-astar",
            "advisor": "scripted",
            "autopilot": False,
        },
    ).json()
    sid = ws["id"]
    log = {"create": ws, "steps": [], "verdicts": [], "snapshots": []}
    while True:
        step = client.post(f"/sessions/{sid}/step", json={"count": 100}).json()
        log["steps"].append(step)
        snap = client.get(f"/sessions/{sid}").json()
        log["snapshots"].append(snap)
        if step["phase"] in ("done", "failed"):
            break
        assert step["phase"] == "await_verdict"
        verdicts = verdict_policy(snap["pending"])
        resp = client.post(f"/sessions/{sid}/verdict", json={"verdicts": verdicts}).json()
        log["verdicts"].append(resp)
        after = client.get(f"/sessions/{sid}").json()
        log["snapshots"].append(after)
    return log


def record_autopilot(client: TestClient) -> dict:
    ws = client.post(
        "/sessions",
        json={
            "map_text": CORRIDOR,
            "map_name": "ui-fixture",
            "planner": "llm-astar",
            "advisor": "scripted",
            "autopilot": True,
        },
    ).json()
    sid = ws["id"]
    steps = []
    while True:
        step = client.post(f"/sessions/{sid}/step", json={"count": 100}).json()
        steps.append(step)
        if step["phase"] in ("done", "failed"):
            break
    final = client.get(f"/sessions/{sid}").json()
    return {"create": ws, "steps": steps, "final": final}


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with TestClient(build_app()) as client:
        accept_all = record_interactive(
            client, lambda pending: [{"id": c["id"], "accept": True} for c in pending]
        )

        def decline_first(pending):
            return [
                {"id": c["id"], "accept": i != 0} for i, c in enumerate(pending)
            ]

        decline_one = record_interactive(client, decline_first)
        autopilot = record_autopilot(client)
        maps = client.get("/maps").json()

    (FIXTURES / "interactive_accept_all.json").write_text(
        json.dumps(accept_all, indent=1, sort_keys=True)
    )
    (FIXTURES / "interactive_decline_one.json").write_text(
        json.dumps(decline_one, indent=1, sort_keys=True)
    )
    (FIXTURES / "autopilot.json").write_text(
        json.dumps(autopilot, indent=1, sort_keys=True)
    )
    (FIXTURES / "maps.json").write_text(json.dumps(maps, indent=1, sort_keys=True))
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
