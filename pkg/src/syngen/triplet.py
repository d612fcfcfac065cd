"""Decomposition of (source, target tree) pairs into depth-indexed
(source, syntax-context, infilling) training records, plus the vocabulary.

Triplet files hold one record per line with three tab-separated fields:
source tokens, context items, infilling tokens (all space-separated,
placeholders angle-bracketed).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .grammar import ParallelCorpus
from .tree import (
    ROOT_LABEL,
    SEP_TOKEN,
    ConstTree,
    Internal,
    Leaf,
    SyntaxContext,
    TreeError,
    attach_root,
    display_label,
    frontier_at_depth,
    iter_internal,
    normalize,
    yield_tokens,
)


class TripletError(ValueError):
    """Malformed infilling sequence or triplet."""


@dataclass(frozen=True)
class InfillingSequence:
    """Separator-delimited infilling groups, e.g. ``<c> I <c> ate <NP>``."""

    tokens: tuple

    def __post_init__(self):
        toks = self.tokens
        if not toks or toks[0] != SEP_TOKEN:
            raise TripletError(f"infilling must start with {SEP_TOKEN!r}: {toks}")
        group_len = 0
        for t in toks[1:]:
            if t == SEP_TOKEN:
                if group_len == 0:
                    raise TripletError("empty infilling group")
                group_len = 0
            else:
                if t == ROOT_LABEL:
                    raise TripletError("root sentinel inside infilling")
                group_len += 1
        if group_len == 0:
            raise TripletError("empty infilling group")

    def groups(self) -> list:
        out: list = []
        for t in self.tokens:
            if t == SEP_TOKEN:
                out.append([])
            else:
                out[-1].append(t)
        return out

    def group_count(self) -> int:
        return sum(1 for t in self.tokens if t == SEP_TOKEN)


@dataclass(frozen=True)
class Triplet:
    source: tuple
    context: SyntaxContext
    infilling: InfillingSequence
    depth: int
    record: Optional[int] = None

    def __post_init__(self):
        if self.infilling.group_count() != self.context.placeholder_count():
            raise TripletError(
                f"group count {self.infilling.group_count()} != placeholder "
                f"count {self.context.placeholder_count()} at depth {self.depth}"
            )


def infilling_for_depth(tree: ConstTree, d: int) -> InfillingSequence:
    """For each internal node at depth d (left to right): the separator
    followed by its children rendered as depth-(d+1) frontier items."""
    if tree.label != ROOT_LABEL:
        raise TreeError("infilling requires a tree rooted at the root sentinel")
    nodes = [n for n, depth in iter_internal(tree) if depth == d]
    if not nodes:
        raise TripletError(f"no placeholder at depth {d}")
    toks: list = []
    for node in nodes:
        toks.append(SEP_TOKEN)
        for c in node.children:
            toks.append(c.token if isinstance(c, Leaf) else display_label(c.label))
    return InfillingSequence(tuple(toks))


def build_triplets(
    source: Sequence[str],
    target: Sequence[str],
    tree: ConstTree,
    whitelist: set,
    record: Optional[int] = None,
) -> list:
    """One triplet per depth, from the root until the frontier is fully
    lexical.  The tree is rooted and whitelist-normalized first."""
    if not whitelist:
        raise TripletError("empty whitelist")
    if list(yield_tokens(tree)) != list(target):
        raise TripletError("target tokens differ from tree yield")
    t = normalize(attach_root(tree), set(whitelist))
    out = []
    d = 0
    while True:
        ctx = frontier_at_depth(t, d)
        if not ctx.has_placeholder():
            break
        out.append(
            Triplet(tuple(source), ctx, infilling_for_depth(t, d), d, record)
        )
        d += 1
    return out


def corpus_triplets(corpus: ParallelCorpus, whitelist: set) -> list:
    out = []
    for i, rec in enumerate(corpus):
        out.extend(build_triplets(rec.source, rec.target, rec.tree, whitelist, i))
    return out


# ---------------------------------------------------------------------------
# vocabulary


class Vocab:
    """Dense bidirectional token/id map with reserved entries first."""

    PAD = "<pad>"
    BOS = "<bos>"
    EOS = "<eos>"
    UNK = "<unk>"
    RESERVED = (PAD, BOS, EOS, UNK, SEP_TOKEN, ROOT_LABEL)

    def __init__(self, tokens: Iterable[str]):
        self._tokens = list(self.RESERVED)
        seen = set(self._tokens)
        for t in tokens:
            if t not in seen:
                self._tokens.append(t)
                seen.add(t)
        self._ids = {t: i for i, t in enumerate(self._tokens)}

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, tok):
        return tok in self._ids

    def __eq__(self, other):
        return isinstance(other, Vocab) and self._tokens == other._tokens

    def id(self, tok: str) -> int:
        return self._ids.get(tok, self._ids[self.UNK])

    def strict_id(self, tok: str) -> int:
        if tok not in self._ids:
            raise TripletError(f"token not in vocabulary: {tok!r}")
        return self._ids[tok]

    def token(self, i: int) -> str:
        return self._tokens[i]

    @property
    def tokens(self) -> list:
        return list(self._tokens)

    @property
    def pad_id(self):
        return self._ids[self.PAD]

    @property
    def bos_id(self):
        return self._ids[self.BOS]

    @property
    def eos_id(self):
        return self._ids[self.EOS]

    def encode(self, toks: Iterable[str]) -> list:
        return [self.strict_id(t) for t in toks]

    def decode(self, ids: Iterable[int]) -> list:
        return [self._tokens[i] for i in ids]


def build_vocab(corpus: ParallelCorpus, whitelist: set) -> Vocab:
    """Reserved entries, then placeholder labels, then lexical tokens, the
    latter two in sorted order."""
    if not len(corpus):
        raise TripletError("empty corpus")
    lexical = set()
    for rec in corpus:
        lexical.update(rec.source)
        lexical.update(rec.target)
    labels = sorted(display_label(l) for l in whitelist)
    return Vocab(labels + sorted(lexical))


def vocab_from_triplets(triplets: Sequence[Triplet]) -> Vocab:
    if not triplets:
        raise TripletError("no triplets")
    lexical = set()
    labels = set()
    for tp in triplets:
        lexical.update(tp.source)
        for item in tp.context.render():
            (labels if item.startswith("<") else lexical).add(item)
        for tok in tp.infilling.tokens:
            if tok == SEP_TOKEN:
                continue
            (labels if tok.startswith("<") else lexical).add(tok)
    labels.discard(ROOT_LABEL)
    return Vocab(sorted(labels) + sorted(lexical))


# ---------------------------------------------------------------------------
# serialization


def write_triplets(triplets: Sequence[Triplet]) -> str:
    lines = []
    for tp in triplets:
        lines.append(
            "\t".join(
                (
                    " ".join(tp.source),
                    " ".join(tp.context.render()),
                    " ".join(tp.infilling.tokens),
                )
            )
        )
    return "".join(l + "\n" for l in lines)


def read_triplets(text: str) -> list:
    out = []
    depth = 0
    record = -1
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise TripletError(f"line {lineno}: expected 3 tab-separated fields")
        source = tuple(parts[0].split())
        ctx = SyntaxContext.from_strings(parts[1].split())
        inf = InfillingSequence(tuple(parts[2].split()))
        # depth is positional: a root-only context starts a new record
        if ctx.render() == (ROOT_LABEL,):
            depth = 0
            record += 1
        out.append(Triplet(source, ctx, inf, depth, record if record >= 0 else None))
        depth += 1
    return out
