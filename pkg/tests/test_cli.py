import json
from pathlib import Path

import pytest

from syngen.cli import main


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def last_summary(stdout: str) -> dict:
    lines = [l for l in stdout.strip().splitlines() if l.strip()]
    return json.loads(lines[-1])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> build-triplets -> train, shared by the read-only tests."""
    d = tmp_path_factory.mktemp("cli")
    assert main(["--seed", "5", "synth", "--out", str(d / "c"), "--n", "30"]) == 0
    assert main(["build-triplets", "--corpus", str(d / "c"),
                 "--out", str(d / "t.tsv")]) == 0
    assert main(["train", "--triplets", str(d / "t.tsv"),
                 "--out", str(d / "m.bin"), "--kind", "count"]) == 0
    return d


def test_synth_outputs_and_determinism(tmp_path, capsys):
    code, out, _ = run(capsys, "--seed", "3", "synth", "--out",
                       str(tmp_path / "a"), "--n", "12")
    assert code == 0
    assert last_summary(out) == {"command": "synth", "n": 12,
                                 "out": str(tmp_path / "a")}
    for ext in (".src", ".tgt", ".trees", ".meta"):
        assert (tmp_path / f"a{ext}").exists()
    assert main(["--seed", "3", "synth", "--out", str(tmp_path / "b"),
                 "--n", "12"]) == 0
    for ext in (".src", ".tgt", ".trees", ".meta"):
        assert (tmp_path / f"a{ext}").read_text() == (
            tmp_path / f"b{ext}"
        ).read_text()
    capsys.readouterr()


def test_generate_and_eval(pipeline, tmp_path, capsys):
    code, out, _ = run(
        capsys, "generate", "--model", str(pipeline / "m.bin"),
        "--source", str(pipeline / "c.src"), "--out", str(tmp_path / "h.txt"),
        "--mode", "beam", "--k", "5", "--trace-out", str(tmp_path / "tr.jsonl"),
    )
    assert code == 0
    assert last_summary(out)["n_failed"] == 0
    hyps = (tmp_path / "h.txt").read_text().splitlines()
    assert len(hyps) == 30

    code, out, _ = run(
        capsys, "eval", "--hyps", str(tmp_path / "h.txt"),
        "--refs", str(pipeline / "c.tgt"), "--srcs", str(pipeline / "c.src"),
        "--metrics", "bleu,ibleu,dlex,beamdiv",
        "--traces", str(tmp_path / "tr.jsonl"),
        "--out", str(tmp_path / "report.json"),
    )
    assert code == 0
    scores = last_summary(out)
    assert 0 <= scores["bleu"] <= 100
    assert set(json.loads((tmp_path / "report.json").read_text())) >= {
        "bleu", "ibleu", "d_lex",
    }

    code, out, _ = run(
        capsys, "interp-eval", "--traces", str(tmp_path / "tr.jsonl"),
    )
    assert code == 0
    assert last_summary(out)["f1"] > 0


def test_generate_k1_beam_equals_greedy(pipeline, tmp_path, capsys):
    for mode, extra, name in (
        ("beam", ["--k", "1"], "b.txt"),
        ("greedy", [], "g.txt"),
    ):
        assert main(
            ["generate", "--model", str(pipeline / "m.bin"),
             "--source", str(pipeline / "c.src"),
             "--out", str(tmp_path / name), "--mode", mode] + extra
        ) == 0
    capsys.readouterr()
    assert (tmp_path / "b.txt").read_text() == (tmp_path / "g.txt").read_text()


def test_eval_dsyn(pipeline, tmp_path, capsys):
    code, out, _ = run(
        capsys, "eval", "--hyps", str(pipeline / "c.tgt"),
        "--refs", str(pipeline / "c.tgt"),
        "--hyp-trees", str(pipeline / "c.trees"),
        "--ref-trees", str(pipeline / "c.trees"),
        "--metrics", "dsyn",
    )
    assert code == 0
    assert last_summary(out)["d_syn"] == 0.0


def test_noise_command(pipeline, tmp_path, capsys):
    code, out, _ = run(
        capsys, "--seed", "1", "noise", "--trees", str(pipeline / "c.trees"),
        "--ratio", "0.3", "--out", str(tmp_path / "noisy.trees"),
    )
    assert code == 0
    noisy = (tmp_path / "noisy.trees").read_text()
    assert noisy != (pipeline / "c.trees").read_text()
    assert len(noisy.splitlines()) == 30


def test_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "frobnicate")
    assert code == 1
    code, _, err = run(capsys, "synth", "--out", str(tmp_path / "x"), "--n", "5")
    assert code == 1  # stochastic command without --seed
    h = tmp_path / "h.txt"
    h.write_text("a b\n")
    code, _, err = run(capsys, "eval", "--hyps", str(h), "--refs", str(h),
                       "--metrics", "nope")
    assert code == 1


def test_data_errors(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--triplets",
                       str(tmp_path / "missing.tsv"), "--out",
                       str(tmp_path / "m.bin"))
    assert code == 2
    bad = tmp_path / "bad.pcfg"
    bad.write_text("S -> a | 0.4\n")
    code, _, err = run(capsys, "--seed", "1", "synth", "--grammar", str(bad),
                       "--out", str(tmp_path / "x"), "--n", "2")
    assert code == 2


def test_runtime_error_exit_code(pipeline, tmp_path, capsys):
    code, _, err = run(
        capsys, "generate", "--model", str(pipeline / "m.bin"),
        "--source", str(pipeline / "c.src"), "--out", str(tmp_path / "h.txt"),
        "--mode", "beam", "--t-max", "1",
    )
    assert code == 3
