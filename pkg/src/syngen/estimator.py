"""Estimator facade over triplet building, model training, and decoding.

Sources are token sequences (or whitespace-splittable strings); targets
are bracketed constituency trees whose yield is the paraphrase.  The
fitted attribute ``model_`` is a ScoreModel usable with the lower-level
search functions directly.
"""

from __future__ import annotations

from typing import Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .model import train_count, train_neural
from .model.neural import NeuralConfig
from .search import SearchConfig, structural_beam_search
from .tree import Template, parse_bracketed, parse_template, yield_tokens
from .triplet import build_triplets

DEFAULT_LABELS = ("NP", "VP", "PP", "S", "SBAR", "ADJP", "ADVP")


def as_tokens(x) -> list:
    if isinstance(x, str):
        toks = x.split()
    else:
        toks = list(x)
    if not toks or not all(isinstance(t, str) and t for t in toks):
        raise ValueError(f"not a token sequence: {x!r}")
    return toks


def as_tree(y):
    return parse_bracketed(y) if isinstance(y, str) else y


class SyntaxGuidedParaphraser(BaseEstimator):
    """Paraphrase generator trained on (source, target tree) pairs.

    kind selects the scorer: "count" for the trie count model, "neural"
    for the transformer; neural_params override NeuralConfig fields.
    """

    def __init__(
        self,
        kind: str = "count",
        labels: tuple = DEFAULT_LABELS,
        smoothing: float = 1e-6,
        k: int = 5,
        alpha: float = 0.8,
        gamma: float = 0.32,
        d_max: int = 32,
        t_max: int = 128,
        seed: int = 0,
        neural_params: Optional[dict] = None,
    ):
        self.kind = kind
        self.labels = labels
        self.smoothing = smoothing
        self.k = k
        self.alpha = alpha
        self.gamma = gamma
        self.d_max = d_max
        self.t_max = t_max
        self.seed = seed
        self.neural_params = neural_params

    def _search_config(self, template: Optional[Template] = None) -> SearchConfig:
        return SearchConfig(
            k=self.k,
            alpha=self.alpha,
            d_max=self.d_max,
            t_max=self.t_max,
            template=template,
            gamma=self.gamma,
            seed=self.seed,
        )

    def fit(self, X: Sequence, y: Sequence):
        if self.kind not in ("count", "neural"):
            raise ValueError(f"unknown model kind: {self.kind!r}")
        X = list(X)
        y = list(y)
        if len(X) != len(y):
            raise ValueError(f"{len(X)} sources vs {len(y)} targets")
        if not X:
            raise ValueError("empty training set")
        whitelist = set(self.labels)
        triplets = []
        for i, (src, tgt) in enumerate(zip(X, y)):
            tree = as_tree(tgt)
            triplets.extend(
                build_triplets(as_tokens(src), yield_tokens(tree), tree, whitelist, i)
            )
        if self.kind == "count":
            self.model_ = train_count(triplets, smoothing=self.smoothing)
        else:
            cfg = NeuralConfig(
                **{"seed": self.seed, **(self.neural_params or {})}
            )
            self.model_ = train_neural(triplets, cfg)
        self.n_triplets_ = len(triplets)
        return self

    def generate(self, X: Sequence, template=None) -> list:
        """Ranked beam candidates per source."""
        check_is_fitted(self, "model_")
        if isinstance(template, str):
            template = parse_template(template)
        cfg = self._search_config(template)
        return [
            structural_beam_search(self.model_, as_tokens(x), cfg) for x in X
        ]

    def predict(self, X: Sequence) -> list:
        """Best hypothesis per source, as a token list."""
        return [ranked[0].tokens() for ranked in self.generate(X)]
