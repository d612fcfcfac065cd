import json
import math

import numpy as np
import pytest

from conftest import LABELS
from syngen.model import CountModel, train_count
from syngen.model.base import EncodedSource, ScoreModel
from syngen.search import (
    ExpansionError,
    SearchConfig,
    SearchError,
    expand,
    greedy_decode,
    induce_tree,
    inner_beam_search,
    is_terminated,
    read_trace_line,
    split_groups,
    structural_beam_search,
    template_reward,
    write_trace_line,
)
from syngen.tree import (
    SyntaxContext,
    parse_bracketed,
    parse_template,
    to_bracketed,
    yield_tokens,
)
from syngen.triplet import (
    InfillingSequence,
    Vocab,
    build_triplets,
    vocab_from_triplets,
)

APPLE = "(S (NP I) (VP (V ate) (NP (D an) (N apple))) (. .))"


def _apple_model(smoothing=1e-9):
    tree = parse_bracketed(APPLE)
    tgt = yield_tokens(tree)
    trips = build_triplets(tgt, tgt, tree, {"S", "NP", "VP"})
    return train_count(trips, smoothing=smoothing), trips


def test_split_groups():
    f = InfillingSequence(("<c>", "I", "<c>", "ate", "<NP>"))
    assert split_groups(f) == [["I"], ["ate", "<NP>"]]
    assert split_groups(InfillingSequence(("<c>", "a"))) == [["a"]]


def test_expand_fig_example():
    s = SyntaxContext.from_strings(["<NP>", "<VP>", "."])
    f = InfillingSequence(("<c>", "I", "<c>", "ate", "<NP>"))
    assert expand(s, f).render() == ("I", "ate", "<NP>", ".")


def test_expand_from_root():
    s = SyntaxContext.from_strings(["<T>"])
    f = InfillingSequence(("<c>", "a", "b"))
    assert expand(s, f).render() == ("a", "b")


def test_expand_count_mismatch():
    s = SyntaxContext.from_strings(["<NP>", "<VP>"])
    with pytest.raises(ExpansionError) as e:
        expand(s, InfillingSequence(("<c>", "a")))
    assert "1" in str(e.value) and "2" in str(e.value)


def test_is_terminated():
    assert is_terminated(SyntaxContext.from_strings(["I", "ate", "."]))
    assert not is_terminated(SyntaxContext.from_strings(["<NP>"]))
    assert not is_terminated(SyntaxContext.from_strings(["<T>"]))


def test_inner_beam_single_path():
    model, trips = _apple_model()
    h = model.encode_source(trips[0].source)
    out = inner_beam_search(model, h, trips[2].context, 1, 128)
    assert len(out) == 1
    score, f = out[0]
    assert f == trips[2].infilling
    assert score == pytest.approx(0.0, abs=1e-5)


def test_inner_beam_trie_counts_ordering():
    model, trips = _apple_model(smoothing=1e-12)
    vocab = Vocab(model.vocab.tokens + ["x", "p", "q"])
    m = CountModel(vocab, smoothing=1e-12)
    for _ in range(3):
        m.add(("x",), ("<T>",), ("<c>", "p"))
    m.add(("x",), ("<T>",), ("<c>", "q"))
    h = m.encode_source(("x",))
    out = inner_beam_search(m, h, SyntaxContext.from_strings(["<T>"]), 2, 8)
    assert [list(f.tokens) for _, f in out] == [["<c>", "p"], ["<c>", "q"]]
    assert out[0][0] == pytest.approx(math.log(3 / 4), abs=1e-6)
    assert out[1][0] == pytest.approx(math.log(1 / 4), abs=1e-6)


def test_inner_beam_length_cap_filters_all():
    model, trips = _apple_model()
    h = model.encode_source(trips[0].source)
    assert inner_beam_search(model, h, trips[0].context, 3, 1) == []


def test_greedy_memorization_roundtrip():
    model, trips = _apple_model()
    cand = greedy_decode(model, trips[0].source)
    assert cand.finished and not cand.failed
    assert cand.tokens() == ["I", "ate", "an", "apple", "."]
    assert len(cand.trace) == 4
    for step, tp in zip(cand.trace, trips):
        assert step.infilling == tp.infilling


def test_greedy_depth_cap_marks_failed():
    model, trips = _apple_model()
    cand = greedy_decode(model, trips[0].source, SearchConfig(k=1, d_max=1))
    assert cand.failed and not cand.finished


def test_beam_k1_equals_greedy(count_model, small_corpus):
    for alpha in (0.0, 0.5, 0.8, 1.0):
        for rec in small_corpus.records[:15]:
            cfg = SearchConfig(k=1, alpha=alpha)
            g = greedy_decode(count_model, rec.source, cfg)
            ranked = structural_beam_search(count_model, rec.source, cfg)
            assert ranked[0].tokens() == g.tokens()


def test_alpha_one_freezes_scores(count_model, small_corpus):
    for rec in small_corpus.records[:5]:
        ranked = structural_beam_search(
            count_model, rec.source, SearchConfig(k=3, alpha=1.0)
        )
        for c in ranked:
            assert c.score == pytest.approx(0.0)


def test_alpha_zero_keeps_latest_delta_f(count_model, small_corpus):
    rec = small_corpus.records[0]
    ranked = structural_beam_search(
        count_model, rec.source, SearchConfig(k=3, alpha=0.0)
    )
    for c in ranked:
        if c.trace:
            assert c.score == pytest.approx(c.trace[-1].delta_f + c.trace[-1].reward)


class _ScriptedModel(ScoreModel):
    """Deterministic stub: fixed per-(context, prefix) distributions."""

    kind = "count"

    def __init__(self, vocab, table):
        self._vocab = vocab
        self.table = table  # (context, prefix) -> {token: prob}

    @property
    def vocab(self):
        return self._vocab

    def encode_source(self, source):
        return EncodedSource(tuple(source))

    def next_logprobs(self, h_src, context, prefix):
        dist = self.table.get((tuple(context), tuple(prefix)), {})
        eps = 1e-12
        probs = np.full(len(self._vocab), eps)
        for tok, p in dist.items():
            probs[self._vocab.strict_id(tok)] = p
        return np.log(probs / probs.sum())


def test_score_accumulation_arithmetic():
    # depth 1 inner score log p1, depth 2 inner score log p2:
    # delta_2 = alpha * (1 - alpha) * log p1 + (1 - alpha) * log p2
    vocab = Vocab(["<S>", "<NP>", "a", "b"])
    p1, p2 = 0.6, 0.75
    table = {
        (("<T>",), ()): {"<c>": 1.0},
        (("<T>",), ("<c>",)): {"<S>": p1, "<NP>": 1 - p1},
        (("<T>",), ("<c>", "<S>")): {Vocab.EOS: 1.0},
        (("<S>",), ()): {"<c>": 1.0},
        (("<S>",), ("<c>",)): {"a": p2, "b": 1 - p2},
        (("<S>",), ("<c>", "a")): {Vocab.EOS: 1.0},
    }
    model = _ScriptedModel(vocab, table)
    alpha = 0.8
    ranked = structural_beam_search(model, ("x",), SearchConfig(k=1, alpha=alpha))
    best = ranked[0]
    d1 = (1 - alpha) * math.log(p1)
    d2 = alpha * d1 + (1 - alpha) * math.log(p2)
    assert best.trace[0].delta == pytest.approx(d1, abs=1e-6)
    assert best.trace[1].delta == pytest.approx(d2, abs=1e-6)
    assert best.score == pytest.approx(d2, abs=1e-6)


def test_template_reward_rules():
    tpl = parse_template("(S (NP) (VP))")
    ctx = SyntaxContext.from_strings(["<NP>", "<VP>"])
    assert template_reward(ctx, tpl, 2, 0.32) == 0.32
    assert template_reward(ctx, None, 2, 0.32) == 0.0
    tokens_ignored = SyntaxContext.from_strings(["did", "<NP>", "<VP>", "?"])
    assert template_reward(tokens_ignored, tpl, 2, 0.32) == 0.32
    wrong = SyntaxContext.from_strings(["<VP>", "<NP>"])
    assert template_reward(wrong, tpl, 2, 0.32) == 0.0
    # empty template frontier never rewards
    lexical = SyntaxContext.from_strings(["a", "b"])
    assert template_reward(lexical, tpl, 5, 0.32) == 0.0


def test_gamma_zero_matches_no_template(count_model, small_corpus):
    tpl = parse_template("(S (NP) (VP))")
    for rec in small_corpus.records[:10]:
        plain = structural_beam_search(count_model, rec.source, SearchConfig(k=4))
        zeroed = structural_beam_search(
            count_model, rec.source, SearchConfig(k=4, template=tpl, gamma=0.0)
        )
        assert [c.tokens() for c in plain] == [c.tokens() for c in zeroed]
        assert [c.score for c in plain] == [c.score for c in zeroed]


def test_beam_properties(count_model, small_corpus):
    for rec in small_corpus.records[:10]:
        cfg = SearchConfig(k=4)
        ranked = structural_beam_search(count_model, rec.source, cfg)
        assert len(ranked) <= cfg.k
        finite = [c.score for c in ranked if not c.failed and c.finished]
        assert finite == sorted(finite, reverse=True)
        for c in ranked:
            if c.failed or not c.finished:
                continue
            # trace consistency and induced-tree yield
            ctx = SyntaxContext.from_strings(["<T>"])
            for step in c.trace:
                assert step.context == ctx
                ctx = expand(ctx, step.infilling)
            assert list(ctx.render()) == c.tokens()
            assert yield_tokens(induce_tree(c.trace)) == c.tokens()


def test_beam_determinism(count_model, small_corpus):
    rec = small_corpus.records[3]
    a = structural_beam_search(count_model, rec.source, SearchConfig(k=5))
    b = structural_beam_search(count_model, rec.source, SearchConfig(k=5))
    assert [c.tokens() for c in a] == [c.tokens() for c in b]
    assert [c.score for c in a] == [c.score for c in b]


def test_search_error_when_all_fail():
    model, trips = _apple_model()
    with pytest.raises(SearchError):
        structural_beam_search(model, trips[0].source, SearchConfig(k=2, t_max=1))


def test_induce_tree_apple():
    model, trips = _apple_model()
    cand = greedy_decode(model, trips[0].source)
    tree = induce_tree(cand.trace)
    assert to_bracketed(tree) == "(<T> (S (NP I) (VP ate (NP an apple)) .))"


def test_induce_tree_rejects_inconsistent():
    f1 = InfillingSequence(("<c>", "<S>"))
    from syngen.search import TraceStep

    step = TraceStep(0, SyntaxContext.from_strings(["<T>"]), f1, 0.0, 0.0)
    with pytest.raises(ExpansionError):
        induce_tree([step])  # <S> never expanded


def test_trace_serialization_roundtrip(count_model, small_corpus):
    rec = small_corpus.records[1]
    cfg = SearchConfig(k=3)
    ranked = structural_beam_search(count_model, rec.source, cfg)
    line = write_trace_line(rec.source, cfg, ranked)
    obj = read_trace_line(line)
    assert obj["source"] == list(rec.source)
    assert obj["config"]["k"] == 3
    back = obj["candidates"]
    assert [c.tokens() for c in back] == [c.tokens() for c in ranked]
    assert [c.score for c in back] == [c.score for c in ranked]
    assert [len(c.trace) for c in back] == [len(c.trace) for c in ranked]
    json.loads(line)  # stays valid JSON


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(k=0)
    with pytest.raises(ValueError):
        SearchConfig(alpha=1.5)
    with pytest.raises(ValueError):
        SearchConfig(gamma=-0.1)
