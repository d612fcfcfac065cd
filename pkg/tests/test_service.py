import time

import pytest
from fastapi.testclient import TestClient

from conftest import LABELS
from syngen.service import create_app


@pytest.fixture(scope="module")
def client(count_model):
    app = create_app(count_model, set(LABELS))
    with TestClient(app) as c:
        yield c


def _run_to_completion(client, sid, snap):
    while snap["status"] == "active":
        r = client.post(f"/sessions/{sid}/step", json={})
        assert r.status_code == 200
        snap = r.json()
    return snap


def test_healthz(client, count_model):
    r = client.get("/healthz")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["model_kind"] == "count"
    assert body["vocab_size"] == len(count_model.vocab)


def test_create_session_root_beam(client):
    r = client.post("/sessions", json={"source": ["bob", "sleeps"], "config": {"k": 5}})
    assert r.status_code == 201
    snap = r.json()
    assert snap["depth"] == 0
    assert snap["status"] == "active"
    assert snap["beam"] == [
        {"index": 0, "context": ["<T>"], "score": 0.0, "finished": False,
         "failed": False}
    ]


def test_stepping_matches_one_shot(client, small_corpus):
    for rec in small_corpus.records[:8]:
        cfg = {"k": 4, "alpha": 0.8}
        r = client.post("/sessions", json={"source": list(rec.source), "config": cfg})
        snap = _run_to_completion(client, r.json()["session_id"], r.json())
        stepped = [(h["tokens"], h["score"]) for h in snap["hypotheses"]]
        g = client.post("/generate", json={"source": list(rec.source), "config": cfg})
        one_shot = [(h["tokens"], h["score"]) for h in g.json()["hypotheses"]]
        assert stepped == one_shot


def test_step_returns_expansions(client):
    r = client.post("/sessions", json={"source": ["bob", "sleeps"], "config": {"k": 3}})
    sid = r.json()["session_id"]
    snap = client.post(f"/sessions/{sid}/step", json={}).json()
    assert snap["depth"] == 1
    assert snap["expansions"]
    for e in snap["expansions"]:
        assert set(e) == {"parent_index", "infilling", "delta_f", "delta", "reward"}
        assert e["parent_index"] == 0


def test_edit_recorded_and_applied(client):
    r = client.post("/sessions", json={"source": ["bob", "sleeps"], "config": {"k": 3}})
    sid = r.json()["session_id"]
    client.post(f"/sessions/{sid}/step", json={})  # depth 1: [<S>]
    edit_ctx = ["does", "<NP>", "<VP>", "?"]
    snap = client.post(
        f"/sessions/{sid}/step",
        json={"edits": [{"index": 0, "context": edit_ctx}]},
    ).json()
    assert snap["status"] in ("active", "finished")
    # every expansion derives from the edited slot
    for e in snap["expansions"]:
        assert e["parent_index"] == 0
    for b in snap["beam"]:
        assert b["context"][:1] == ["does"]
        assert b["context"][-1:] == ["?"]
    full = client.get(f"/sessions/{sid}").json()
    edits = [e for h in full["history"] for e in h["edits"]]
    assert edits == [{"index": 0, "context": edit_ctx}]


def test_edit_keeps_score(client):
    r = client.post("/sessions", json={"source": ["bob", "sleeps"], "config": {"k": 1}})
    sid = r.json()["session_id"]
    snap = client.post(f"/sessions/{sid}/step", json={}).json()
    prior = snap["beam"][0]["score"]
    snap = client.post(
        f"/sessions/{sid}/step",
        json={"edits": [{"index": 0, "context": ["alice", "sleeps"]}]},
    ).json()
    # edit produced a finished candidate with its accumulated score intact
    done = [h for h in snap["hypotheses"] if h["tokens"] == ["alice", "sleeps"]]
    assert done and done[0]["score"] == prior


def test_session_isolation(client):
    a = client.post("/sessions", json={"source": ["bob", "sleeps"]}).json()
    b = client.post("/sessions", json={"source": ["alice", "sleeps"]}).json()
    snap_a1 = client.post(f"/sessions/{a['session_id']}/step", json={}).json()
    snap_b1 = client.post(f"/sessions/{b['session_id']}/step", json={}).json()
    snap_a2 = client.get(f"/sessions/{a['session_id']}").json()
    assert snap_a2["depth"] == snap_a1["depth"] == 1
    assert snap_a2["source"] == ["bob", "sleeps"]
    assert snap_b1["session_id"] != snap_a1["session_id"]


def _err(resp):
    body = resp.json()
    assert set(body) == {"error"}
    assert set(body["error"]) == {"code", "message"}
    return resp.status_code, body["error"]["code"]


def test_error_shapes(client):
    assert _err(client.post("/sessions", json={"source": []}))[0] == 400
    assert _err(client.post("/sessions", json={"source": ["zzz-unknown"]}))[0] == 400
    assert _err(
        client.post("/sessions", json={"source": ["bob"], "config": {"k": 0}})
    )[0] == 400
    assert _err(
        client.post("/sessions", json={"source": ["bob"], "config": {"bogus": 1}})
    )[0] == 400
    assert _err(
        client.post("/sessions", json={"source": ["bob"], "config": {"template": "((("}})
    )[0] == 400
    assert _err(client.get("/sessions/nope"))[0] == 404


def test_edit_errors(client):
    r = client.post("/sessions", json={"source": ["bob", "sleeps"]})
    sid = r.json()["session_id"]
    code = _err(
        client.post(f"/sessions/{sid}/step",
                    json={"edits": [{"index": 9, "context": ["<S>"]}]})
    )
    assert code[0] == 400
    code = _err(
        client.post(f"/sessions/{sid}/step",
                    json={"edits": [{"index": 0, "context": ["<ZZZ>"]}]})
    )
    assert code[0] == 400
    # valid step, then run out, then step a finished session
    snap = _run_to_completion(client, sid, client.get(f"/sessions/{sid}").json())
    assert snap["status"] == "finished"
    status, code = _err(client.post(f"/sessions/{sid}/step", json={}))
    assert status == 409


def test_session_expiry(count_model):
    app = create_app(count_model, set(LABELS), ttl=0.05)
    with TestClient(app) as c:
        sid = c.post("/sessions", json={"source": ["bob", "sleeps"]}).json()[
            "session_id"
        ]
        time.sleep(0.1)
        assert c.get(f"/sessions/{sid}").status_code == 404
