"""Uniform interface for conditional infilling scorers.

A scorer exposes the factorized distribution over next infilling tokens
given the encoded source, the rendered syntax context, and the infilling
prefix.  Trained scorers are immutable and safe for concurrent use.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from ..triplet import Vocab


class ModelError(ValueError):
    """Scoring or (de)serialization failure."""


class EncodedSource:
    """Opaque, reusable representation of one source sequence."""

    __slots__ = ("source", "payload")

    def __init__(self, source: tuple, payload=None):
        self.source = source
        self.payload = payload


class ScoreModel(ABC):
    kind: str = "?"

    @property
    @abstractmethod
    def vocab(self) -> Vocab:
        ...

    @abstractmethod
    def encode_source(self, source: Sequence[str]) -> EncodedSource:
        ...

    @abstractmethod
    def next_logprobs(
        self, h_src: EncodedSource, context: tuple, prefix: tuple
    ) -> np.ndarray:
        """Full log-probability vector over the vocabulary for the token
        following ``prefix``; ``context`` is the rendered syntax context."""

    def score_sequence(
        self, h_src: EncodedSource, context: tuple, f_tokens: Sequence[str]
    ) -> float:
        """Sum of stepwise log-probabilities, terminal end-of-sequence
        token included."""
        v = self.vocab
        total = 0.0
        prefix: tuple = ()
        for tok in tuple(f_tokens) + (Vocab.EOS,):
            if tok not in v:
                raise ModelError(f"token not in vocabulary: {tok!r}")
            total += float(self.next_logprobs(h_src, context, prefix)[v.strict_id(tok)])
            prefix = prefix + (tok,)
        return total
