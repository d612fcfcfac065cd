"""Trie-backed count scorer: exact conditional counts with additive
smoothing, used as the desk-scale reference implementation.

Lookup backs off key-wise: (source, context) trie, then context-only trie,
then the uniform distribution.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..triplet import Triplet, Vocab, vocab_from_triplets
from .base import EncodedSource, ModelError, ScoreModel


class TrieNode:
    __slots__ = ("count", "children")

    def __init__(self):
        self.count = 0
        self.children: dict = {}

    def insert(self, path: Sequence[str]):
        node = self
        node.count += 1
        for tok in path:
            node = node.children.setdefault(tok, TrieNode())
            node.count += 1

    def walk(self, path: Sequence[str]):
        node = self
        for tok in path:
            node = node.children.get(tok)
            if node is None:
                return None
        return node

    def to_obj(self):
        return [self.count, {t: c.to_obj() for t, c in self.children.items()}]

    @classmethod
    def from_obj(cls, obj):
        node = cls()
        node.count = obj[0]
        node.children = {t: cls.from_obj(c) for t, c in obj[1].items()}
        return node


class CountModel(ScoreModel):
    kind = "count"

    def __init__(self, vocab: Vocab, smoothing: float):
        if not 0.0 < smoothing < 1.0:
            raise ModelError("smoothing must be in (0, 1)")
        self._vocab = vocab
        self.smoothing = smoothing
        self._by_key: dict = {}  # (source, context) -> TrieNode
        self._by_context: dict = {}  # context -> TrieNode

    @property
    def vocab(self) -> Vocab:
        return self._vocab

    def add(self, source: tuple, context: tuple, f_tokens: tuple):
        path = tuple(f_tokens) + (Vocab.EOS,)
        self._by_key.setdefault((source, context), TrieNode()).insert(path)
        self._by_context.setdefault(context, TrieNode()).insert(path)

    def encode_source(self, source: Sequence[str]) -> EncodedSource:
        return EncodedSource(tuple(source))

    def next_logprobs(
        self, h_src: EncodedSource, context: tuple, prefix: tuple
    ) -> np.ndarray:
        trie = self._by_key.get((h_src.source, tuple(context)))
        if trie is None:
            trie = self._by_context.get(tuple(context))
        node = trie.walk(prefix) if trie is not None else None
        n = len(self._vocab)
        counts = np.zeros(n)
        if node is not None:
            for tok, child in node.children.items():
                counts[self._vocab.id(tok)] += child.count
        probs = (counts + self.smoothing) / (counts.sum() + self.smoothing * n)
        return np.log(probs)


def train_count(
    triplets: Sequence[Triplet], smoothing: float = 1e-6, vocab: Vocab = None
) -> CountModel:
    if not triplets:
        raise ModelError("no training triplets")
    model = CountModel(vocab or vocab_from_triplets(triplets), smoothing)
    for tp in triplets:
        model.add(tuple(tp.source), tp.context.render(), tuple(tp.infilling.tokens))
    return model
