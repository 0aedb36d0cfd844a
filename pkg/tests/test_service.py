import json
import socket
import threading
import time

import pytest
import requests
from fastapi.testclient import TestClient

from gridplan.service import build_app, rle_decode, rle_encode


@pytest.fixture
def client():
    with TestClient(build_app()) as c:
        yield c


@pytest.fixture(scope="module")
def live_server():
    """A real uvicorn server; the TestClient buffers streaming responses,
    so SSE behavior is exercised over an actual socket."""
    import uvicorn

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    config = uvicorn.Config(build_app(), host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            requests.get(base + "/maps", timeout=1)
            break
        except requests.ConnectionError:
            time.sleep(0.05)
    yield base
    server.should_exit = True
    thread.join(timeout=5)


def sse_events(resp, limit=None):
    """Decode `data:` payloads from a streaming SSE response."""
    out = []
    for line in resp.iter_lines(decode_unicode=True):
        if line and line.startswith("data: "):
            payload = json.loads(line[6:])
            if not payload:
                break
            out.append(payload)
            if limit is not None and len(out) >= limit:
                break
    return out


CORRIDOR = "S...G\n"


def create_session(client, **overrides):
    body = {"map_text": CORRIDOR, "planner": "astar"}
    body.update(overrides)
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


def test_rle_round_trip():
    cells = ["free"] * 5 + ["obstacle"] * 3 + ["free"]
    runs = rle_encode(cells)
    assert runs == [[5, "free"], [3, "obstacle"], [1, "free"]]
    assert rle_decode(runs) == cells


def test_create_and_get(client):
    ws = create_session(client)
    assert ws["phase"] == "expanding"
    assert ws["width"] == 5 and ws["height"] == 1
    assert len(rle_decode(ws["grid"])) == 5
    got = client.get(f"/sessions/{ws['id']}")
    assert got.status_code == 200
    assert got.json()["id"] == ws["id"]


def test_create_from_shipped_map(client):
    ws = create_session(client, map_text=None, map_name="aisle_16x16")
    assert ws["width"] == 16


def test_maps_catalogue(client):
    resp = client.get("/maps")
    assert resp.status_code == 200
    names = {m["name"] for m in resp.json()}
    assert "double_door_32x32" in names
    assert all({"name", "width", "height"} <= set(m) for m in resp.json())


def test_create_errors(client):
    assert client.post("/sessions", json={"planner": "astar"}).status_code == 400
    assert (
        client.post(
            "/sessions", json={"map_text": "S.\n.G.\n", "planner": "astar"}
        ).status_code
        == 400
    )
    assert (
        client.post(
            "/sessions", json={"map_name": "atlantis", "planner": "astar"}
        ).status_code
        == 400
    )
    # llm planner without advisor: incompatible configuration
    assert (
        client.post(
            "/sessions", json={"map_text": CORRIDOR, "planner": "llm-astar"}
        ).status_code
        == 422
    )


def test_step_to_done_corridor(client):
    ws = create_session(client)
    resp = client.post(f"/sessions/{ws['id']}/step", json={"count": 50})
    assert resp.status_code == 200
    body = resp.json()
    assert body["phase"] == "done"
    kinds = [e["kind"] for e in body["events"]]
    assert kinds[-1] == "PathFound"
    final = client.get(f"/sessions/{ws['id']}").json()
    assert final["metrics"]["path_length"] == 5
    assert final["seq"] == body["seq"]


def test_step_validation_and_404(client):
    ws = create_session(client)
    assert client.post(f"/sessions/{ws['id']}/step", json={"count": 0}).status_code == 400
    assert client.post("/sessions/zzz/step", json={"count": 1}).status_code == 404
    assert client.get("/sessions/zzz").status_code == 404


def test_verdict_wrong_phase_is_409(client):
    ws = create_session(client)
    resp = client.post(
        f"/sessions/{ws['id']}/verdict",
        json={"verdicts": [{"id": 0, "accept": True}]},
    )
    assert resp.status_code == 409


def test_interactive_verdict_loop(client):
    ws = create_session(
        client, planner="llm-astar", advisor="scripted", autopilot=False
    )
    assert ws["phase"] == "await_seed"
    resp = client.post(f"/sessions/{ws['id']}/step", json={"count": 10})
    body = resp.json()
    assert body["phase"] == "await_verdict"
    snap = client.get(f"/sessions/{ws['id']}").json()
    assert snap["pending"]
    # declining a candidate moves it to the deferred set in the next snapshot
    declined = snap["pending"][0]
    verdicts = [{"id": c["id"], "accept": c["id"] != declined["id"]}
                for c in snap["pending"]]
    resp = client.post(f"/sessions/{ws['id']}/verdict", json={"verdicts": verdicts})
    assert resp.status_code == 200
    snap2 = client.get(f"/sessions/{ws['id']}").json()
    cells = rle_decode(snap2["grid"])
    x, y = declined["cell"]
    assert cells[y * snap2["width"] + x] == "deferred"


def test_verdict_unknown_candidate_400(client):
    ws = create_session(
        client, planner="llm-astar", advisor="scripted", autopilot=False
    )
    client.post(f"/sessions/{ws['id']}/step", json={"count": 10})
    resp = client.post(
        f"/sessions/{ws['id']}/verdict", json={"verdicts": [{"id": 999, "accept": True}]}
    )
    assert resp.status_code == 400


def test_delete_session(client):
    ws = create_session(client)
    assert client.delete(f"/sessions/{ws['id']}").status_code == 204
    assert client.get(f"/sessions/{ws['id']}").status_code == 404


def test_event_stream_follows_live_steps(live_server):
    ws = requests.post(
        f"{live_server}/sessions", json={"map_text": CORRIDOR, "planner": "astar"}
    ).json()
    sid = ws["id"]
    with requests.get(f"{live_server}/sessions/{sid}/events", stream=True, timeout=10) as resp:
        # step after subscribing: the subscriber sees exactly the new events
        requests.post(f"{live_server}/sessions/{sid}/step", json={"count": 3})
        received = sse_events(resp, limit=3)
    assert [e["seq"] for e in received] == [1, 2, 3]
    kinds = {e["kind"] for e in received}
    assert kinds == {"Expansion"}


def test_event_stream_resume_since(live_server):
    ws = requests.post(
        f"{live_server}/sessions", json={"map_text": CORRIDOR, "planner": "astar"}
    ).json()
    sid = ws["id"]
    requests.post(f"{live_server}/sessions/{sid}/step", json={"count": 50})

    def collect(**kw):
        with requests.get(
            f"{live_server}/sessions/{sid}/events", stream=True, timeout=10, **kw
        ) as resp:
            return [e["seq"] for e in sse_events(resp)]

    full = collect()
    tail = collect(params={"since": 3})
    via_header = collect(headers={"Last-Event-ID": "3"})
    assert full == list(range(1, len(full) + 1))
    assert tail == full[3:]
    assert via_header == full[3:]


def test_two_subscribers_identical(live_server):
    ws = requests.post(
        f"{live_server}/sessions", json={"map_text": CORRIDOR, "planner": "astar"}
    ).json()
    sid = ws["id"]
    requests.post(f"{live_server}/sessions/{sid}/step", json={"count": 50})

    def collect():
        with requests.get(
            f"{live_server}/sessions/{sid}/events", stream=True, timeout=10
        ) as resp:
            return sse_events(resp)

    assert collect() == collect()


def test_concurrent_steps_serialized(client):
    # the per-session writer lock turns a concurrent step into a 409
    ws = create_session(client, map_name="aisle_24x24", map_text=None)
    slot = client.app.state.registry[ws["id"]]
    assert slot.lock.acquire(blocking=False)
    try:
        resp = client.post(f"/sessions/{ws['id']}/step", json={"count": 1})
        assert resp.status_code == 409
    finally:
        slot.lock.release()
    assert client.post(f"/sessions/{ws['id']}/step", json={"count": 1}).status_code == 200


def test_bearer_token_enforced():
    with TestClient(build_app(token="sesame")) as client:
        resp = client.post("/sessions", json={"map_text": CORRIDOR, "planner": "astar"})
        assert resp.status_code == 401
        resp = client.post(
            "/sessions",
            json={"map_text": CORRIDOR, "planner": "astar"},
            headers={"Authorization": "Bearer sesame"},
        )
        assert resp.status_code == 201


def test_snapshot_after_stream_equals_direct_fetch(live_server):
    # event-sourcing consistency: the snapshot reached by applying streamed
    # events matches the directly fetched snapshot's sequence number
    ws = requests.post(
        f"{live_server}/sessions", json={"map_text": CORRIDOR, "planner": "astar"}
    ).json()
    sid = ws["id"]
    requests.post(f"{live_server}/sessions/{sid}/step", json={"count": 50})
    with requests.get(
        f"{live_server}/sessions/{sid}/events", stream=True, timeout=10
    ) as resp:
        seqs = [e["seq"] for e in sse_events(resp)]
    direct = requests.get(f"{live_server}/sessions/{sid}").json()
    assert direct["seq"] == seqs[-1]
