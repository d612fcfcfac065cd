import pytest
from sklearn.exceptions import NotFittedError

from syngen.estimator import SyntaxGuidedParaphraser
from syngen.tree import to_bracketed


def _training_data(small_corpus, n=40):
    recs = small_corpus.records[:n]
    X = [" ".join(r.source) for r in recs]
    y = [to_bracketed(r.tree) for r in recs]
    return X, y, recs


def test_fit_predict_roundtrip(small_corpus):
    X, y, recs = _training_data(small_corpus)
    est = SyntaxGuidedParaphraser(kind="count", k=3)
    assert est.fit(X, y) is est
    assert est.n_triplets_ > 0
    preds = est.predict(X[:5])
    assert len(preds) == 5
    for toks in preds:
        assert toks and all(isinstance(t, str) for t in toks)


def test_generate_returns_ranked_beams(small_corpus):
    X, y, _ = _training_data(small_corpus)
    est = SyntaxGuidedParaphraser(kind="count", k=4).fit(X, y)
    beams = est.generate(X[:3])
    for ranked in beams:
        assert 1 <= len(ranked) <= 4
        scores = [c.score for c in ranked if c.finished]
        assert scores == sorted(scores, reverse=True)


def test_get_set_params():
    est = SyntaxGuidedParaphraser(k=7, alpha=0.5)
    params = est.get_params()
    assert params["k"] == 7
    assert params["alpha"] == 0.5
    est.set_params(k=2)
    assert est.k == 2


def test_unfitted_predict_raises():
    with pytest.raises(NotFittedError):
        SyntaxGuidedParaphraser().predict([["a"]])


def test_fit_validation(small_corpus):
    X, y, _ = _training_data(small_corpus)
    with pytest.raises(ValueError):
        SyntaxGuidedParaphraser().fit(X, y[:-1])
    with pytest.raises(ValueError):
        SyntaxGuidedParaphraser().fit([], [])
    with pytest.raises(ValueError):
        SyntaxGuidedParaphraser(kind="bogus").fit(X, y)
    with pytest.raises(ValueError):
        SyntaxGuidedParaphraser().fit([""], y[:1])


def test_neural_kind_smoke(small_corpus):
    X, y, _ = _training_data(small_corpus, n=10)
    est = SyntaxGuidedParaphraser(
        kind="neural", k=1,
        neural_params={"width": 32, "ff_width": 64, "heads": 2, "steps": 20,
                       "batch_size": 8, "eval_every": 10},
    )
    est.fit(X, y)
    assert est.model_.kind == "neural"
