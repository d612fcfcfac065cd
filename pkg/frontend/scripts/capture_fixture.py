"""Capture a scripted interactive session from the real backend service.

Runs the count-model service in-process, drives one session (fixed seed,
one context edit at depth 1), and writes the final GET /sessions/{id}
payload as a JSON fixture for the frontend fidelity test.

Usage:  python3 frontend/scripts/capture_fixture.py [out.json]
"""

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from syngen.grammar import TOY_TRANSFORMS, gen_paraphrase_corpus, load_builtin_grammar
from syngen.model import train_count
from syngen.service import create_app
from syngen.triplet import corpus_triplets

LABELS = {"NP", "VP", "PP", "S", "SBAR", "ADJP", "ADVP"}
EDIT = {"index": 0, "context": ["does", "<NP>", "<VP>", "?"]}


def main(out_path: str) -> None:
    pcfg = load_builtin_grammar()
    corpus = gen_paraphrase_corpus(pcfg, TOY_TRANSFORMS, 60, seed=11)
    model = train_count(corpus_triplets(corpus, LABELS))
    app = create_app(model, LABELS)
    with TestClient(app) as client:
        r = client.post(
            "/sessions",
            json={"source": ["bob", "sleeps"], "config": {"k": 3, "seed": 0}},
        )
        r.raise_for_status()
        sid = r.json()["session_id"]
        snap = client.post(f"/sessions/{sid}/step", json={}).json()
        snap = client.post(f"/sessions/{sid}/step", json={"edits": [EDIT]}).json()
        while snap["status"] == "active":
            snap = client.post(f"/sessions/{sid}/step", json={}).json()
        full = client.get(f"/sessions/{sid}").json()
    Path(out_path).write_text(json.dumps(full, indent=2) + "\n")
    print(f"wrote {out_path} (status={full['status']}, depth={full['depth']})")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(
        Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "scripted_session.json"
    )
    main(out)
