"""Synthetic world: PCFG loading, sampling, Viterbi CKY parsing, paraphrase
corpus generation, and constituent-label noise injection.

Grammar files hold one rule per line, ``LHS -> sym sym ... | prob``, with
``#`` comments.  Symbols that never occur on a left-hand side are terminals;
the start symbol is the first rule's LHS.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional

from .tree import (
    ROOT_LABEL,
    ConstTree,
    Internal,
    Leaf,
    Node,
    parse_bracketed,
    to_bracketed,
    yield_tokens,
)

_PROB_TOL = 1e-6

# markers for symbols introduced by internal binarization; never visible in
# output trees
_TERM_MARK = "@t@"
_BIN_MARK = "@b@"


class PcfgError(ValueError):
    """Invalid grammar definition."""


class ParseFailure(ValueError):
    """CKY could not parse the token sequence."""


class SampleError(RuntimeError):
    """No terminating derivation found within the retry budget."""


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple
    prob: float


@dataclass(frozen=True)
class Pcfg:
    start: str
    rules: tuple

    @property
    def nonterminals(self) -> frozenset:
        return frozenset(r.lhs for r in self.rules)

    @property
    def terminals(self) -> frozenset:
        nts = self.nonterminals
        return frozenset(s for r in self.rules for s in r.rhs if s not in nts)

    def rules_for(self, lhs: str) -> list:
        return [r for r in self.rules if r.lhs == lhs]


def load_pcfg(text: str) -> Pcfg:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line or "|" not in line:
            raise PcfgError(f"line {lineno}: expected 'LHS -> rhs | prob'")
        head, rest = line.split("->", 1)
        body, prob_s = rest.rsplit("|", 1)
        lhs = head.strip()
        rhs = tuple(body.split())
        if not lhs or not rhs:
            raise PcfgError(f"line {lineno}: empty lhs or rhs")
        try:
            prob = float(prob_s)
        except ValueError as e:
            raise PcfgError(f"line {lineno}: bad probability {prob_s!r}") from e
        if not 0.0 < prob <= 1.0:
            raise PcfgError(f"line {lineno}: probability {prob} outside (0, 1]")
        rules.append(Rule(lhs, rhs, prob))
    if not rules:
        raise PcfgError("no rules")
    pcfg = Pcfg(rules[0].lhs, tuple(rules))
    _validate(pcfg)
    return pcfg


def _validate(pcfg: Pcfg):
    sums = {}
    for r in pcfg.rules:
        sums[r.lhs] = sums.get(r.lhs, 0.0) + r.prob
    for lhs, s in sums.items():
        if abs(s - 1.0) > _PROB_TOL:
            raise PcfgError(f"probabilities for {lhs!r} sum to {s}, not 1")
    nts = pcfg.nonterminals
    # every nonterminal must admit a terminating derivation
    generating = set()
    changed = True
    while changed:
        changed = False
        for r in pcfg.rules:
            if r.lhs in generating:
                continue
            if all(s not in nts or s in generating for s in r.rhs):
                generating.add(r.lhs)
                changed = True
    missing = nts - generating
    if missing:
        raise PcfgError(f"non-terminating nonterminals: {sorted(missing)}")
    # every nonterminal must be reachable from the start symbol
    reachable = {pcfg.start}
    changed = True
    while changed:
        changed = False
        for r in pcfg.rules:
            if r.lhs in reachable:
                for s in r.rhs:
                    if s in nts and s not in reachable:
                        reachable.add(s)
                        changed = True
    unreachable = nts - reachable
    if unreachable:
        raise PcfgError(f"unreachable nonterminals: {sorted(unreachable)}")


def builtin_grammar_text(name: str = "toy") -> str:
    return resources.files("syngen.data").joinpath(f"{name}.pcfg").read_text()


def load_builtin_grammar(name: str = "toy") -> Pcfg:
    return load_pcfg(builtin_grammar_text(name))


# ---------------------------------------------------------------------------
# sampling


def _sample_tree(pcfg: Pcfg, rng: random.Random, max_depth: int, retries: int) -> ConstTree:
    nts = pcfg.nonterminals
    by_lhs = {lhs: pcfg.rules_for(lhs) for lhs in nts}

    class _TooDeep(Exception):
        pass

    def derive(sym: str, depth: int) -> Node:
        if sym not in nts:
            return Leaf(sym)
        if depth >= max_depth:
            raise _TooDeep
        options = by_lhs[sym]
        rule = rng.choices(options, weights=[r.prob for r in options])[0]
        return Internal(sym, tuple(derive(s, depth + 1) for s in rule.rhs))

    for _ in range(retries):
        try:
            return derive(pcfg.start, 0)
        except _TooDeep:
            continue
    raise SampleError(f"no derivation within depth {max_depth} after {retries} tries")


def sample(pcfg: Pcfg, seed: int, max_depth: int = 12, retries: int = 1000) -> ConstTree:
    return _sample_tree(pcfg, random.Random(seed), max_depth, retries)


def score_tree(pcfg: Pcfg, tree: ConstTree) -> float:
    """Log-probability of a derivation tree under the grammar."""
    by_key = {(r.lhs, r.rhs): r.prob for r in pcfg.rules}

    def walk(node: Node) -> float:
        if isinstance(node, Leaf):
            return 0.0
        rhs = tuple(
            c.token if isinstance(c, Leaf) else c.label for c in node.children
        )
        prob = by_key.get((node.label, rhs))
        if prob is None:
            raise PcfgError(f"no rule {node.label} -> {' '.join(rhs)}")
        return math.log(prob) + sum(walk(c) for c in node.children)

    return walk(tree)


# ---------------------------------------------------------------------------
# CKY Viterbi parsing


@dataclass(frozen=True)
class _BinarizedGrammar:
    lex: Mapping  # token -> [(sym, logp)]
    unary: tuple  # (lhs, rhs_sym, logp)
    binary: Mapping  # (left, right) -> [(lhs, logp)]


_BIN_CACHE: dict = {}


def _binarize(pcfg: Pcfg) -> _BinarizedGrammar:
    cached = _BIN_CACHE.get(id(pcfg))
    if cached is not None:
        return cached
    nts = pcfg.nonterminals
    lex: dict = {}
    unary = []
    binary: dict = {}
    wrappers = set()

    def add_binary(lhs, left, right, logp):
        binary.setdefault((left, right), []).append((lhs, logp))

    counter = 0
    for r in pcfg.rules:
        logp = math.log(r.prob)
        syms = []
        for s in r.rhs:
            if s in nts:
                syms.append(s)
            else:
                w = _TERM_MARK + s
                wrappers.add(s)
                syms.append(w)
        if len(syms) == 1:
            if r.rhs[0] in nts:
                unary.append((r.lhs, syms[0], logp))
            else:
                lex.setdefault(r.rhs[0], []).append((r.lhs, logp))
        elif len(syms) == 2:
            add_binary(r.lhs, syms[0], syms[1], logp)
        else:
            prev = r.lhs
            plogp = logp
            for i in range(len(syms) - 2):
                counter += 1
                mid = f"{_BIN_MARK}{r.lhs}.{counter}"
                add_binary(prev, syms[i], mid, plogp)
                prev, plogp = mid, 0.0
            add_binary(prev, syms[-2], syms[-1], 0.0)
    for t in wrappers:
        lex.setdefault(t, []).append((_TERM_MARK + t, 0.0))
    bg = _BinarizedGrammar(lex, tuple(unary), binary)
    _BIN_CACHE[id(pcfg)] = bg
    return bg


def _debinarize(sym: str, back, i: int, j: int, chart) -> list:
    """Returns a list of nodes to splice into the parent."""
    if sym.startswith(_TERM_MARK):
        return [Leaf(sym[len(_TERM_MARK):])]
    entry = back[(i, j)][sym]
    kind = entry[0]
    if kind == "lex":
        children = [Leaf(entry[1])]
    elif kind == "unary":
        children = _debinarize(entry[1], back, i, j, chart)
    else:
        _, left, right, split = entry
        children = _debinarize(left, back, i, split, chart) + _debinarize(
            right, back, split, j, chart
        )
    if sym.startswith(_BIN_MARK):
        return children
    return [Internal(sym, tuple(children))]


def cky_parse(pcfg: Pcfg, tokens: list) -> tuple:
    """Maximum-probability parse via CKY; returns (tree, log-probability)."""
    if not tokens:
        raise ParseFailure("empty token sequence")
    bg = _binarize(pcfg)
    n = len(tokens)
    for t in tokens:
        if t not in bg.lex:
            raise ParseFailure(f"token outside alphabet: {t!r}")

    best: dict = {}
    back: dict = {}

    def close_unary(i, j):
        cell = best[(i, j)]
        bcell = back[(i, j)]
        changed = True
        while changed:
            changed = False
            for lhs, rhs, logp in bg.unary:
                if rhs in cell:
                    cand = cell[rhs] + logp
                    if cand > cell.get(lhs, -math.inf):
                        cell[lhs] = cand
                        bcell[lhs] = ("unary", rhs)
                        changed = True

    for i, tok in enumerate(tokens):
        cell: dict = {}
        bcell: dict = {}
        for sym, logp in bg.lex[tok]:
            if logp > cell.get(sym, -math.inf):
                cell[sym] = logp
                bcell[sym] = ("lex", tok)
        best[(i, i + 1)], back[(i, i + 1)] = cell, bcell
        close_unary(i, i + 1)

    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            cell, bcell = {}, {}
            best[(i, j)], back[(i, j)] = cell, bcell
            for split in range(i + 1, j):
                lcell, rcell = best[(i, split)], best[(split, j)]
                for (ls, rs), prods in bg.binary.items():
                    lp = lcell.get(ls)
                    if lp is None:
                        continue
                    rp = rcell.get(rs)
                    if rp is None:
                        continue
                    base = lp + rp
                    for lhs, logp in prods:
                        cand = base + logp
                        if cand > cell.get(lhs, -math.inf):
                            cell[lhs] = cand
                            bcell[lhs] = ("binary", ls, rs, split)
            close_unary(i, j)

    top = best[(0, n)]
    if pcfg.start not in top:
        raise ParseFailure(f"no parse for: {' '.join(tokens)}")
    nodes = _debinarize(pcfg.start, back, 0, n, best)
    assert len(nodes) == 1
    return nodes[0], top[pcfg.start]


# ---------------------------------------------------------------------------
# paraphrase corpus


@dataclass(frozen=True)
class CorpusRecord:
    source: tuple
    target: tuple
    tree: ConstTree
    transform: str

    def __post_init__(self):
        if tuple(yield_tokens(self.tree)) != self.target:
            raise PcfgError("corpus record: tree yield differs from target")


@dataclass(frozen=True)
class ParallelCorpus:
    records: tuple

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


Transform = Callable[[ConstTree], Optional[ConstTree]]


def gen_paraphrase_corpus(
    pcfg: Pcfg,
    transforms: Mapping[str, Transform],
    n: int,
    seed: int,
    max_depth: int = 12,
    mode: str = "choice",
    distinct_sources: bool = False,
) -> ParallelCorpus:
    """Sample source trees and rewrite them into targets.

    ``mode="choice"`` picks one applicable transform uniformly per record;
    ``mode="all"`` emits one record per applicable transform of each source.
    """
    if mode not in ("choice", "all"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    names = sorted(transforms)
    records = []
    seen = set()
    budget = 0
    while len(records) < n:
        budget += 1
        if budget > 100 * n + 1000:
            raise SampleError("could not build corpus: transforms never apply")
        src_tree = _sample_tree(pcfg, rng, max_depth, 1000)
        source = tuple(yield_tokens(src_tree))
        if distinct_sources:
            if source in seen:
                continue
            seen.add(source)
        applicable = []
        for name in names:
            out = transforms[name](src_tree)
            if out is not None:
                applicable.append((name, out))
        if not applicable:
            continue
        if mode == "choice":
            applicable = [applicable[rng.randrange(len(applicable))]]
        for name, tgt_tree in applicable:
            if len(records) >= n:
                break
            records.append(
                CorpusRecord(source, tuple(yield_tokens(tgt_tree)), tgt_tree, name)
            )
    return ParallelCorpus(tuple(records))


def write_corpus(corpus: ParallelCorpus, prefix) -> None:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{prefix}.src", "w") as f:
        f.writelines(" ".join(r.source) + "\n" for r in corpus)
    with open(f"{prefix}.tgt", "w") as f:
        f.writelines(" ".join(r.target) + "\n" for r in corpus)
    with open(f"{prefix}.trees", "w") as f:
        f.writelines(to_bracketed(r.tree) + "\n" for r in corpus)
    with open(f"{prefix}.meta", "w") as f:
        f.writelines(r.transform + "\n" for r in corpus)


def read_corpus(prefix) -> ParallelCorpus:
    prefix = Path(prefix)
    srcs = Path(f"{prefix}.src").read_text().splitlines()
    tgts = Path(f"{prefix}.tgt").read_text().splitlines()
    trees = Path(f"{prefix}.trees").read_text().splitlines()
    meta_path = Path(f"{prefix}.meta")
    metas = (
        meta_path.read_text().splitlines()
        if meta_path.exists()
        else ["?"] * len(srcs)
    )
    if not len(srcs) == len(tgts) == len(trees) == len(metas):
        raise PcfgError("corpus files are not line-aligned")
    records = tuple(
        CorpusRecord(
            tuple(s.split()), tuple(t.split()), parse_bracketed(b), m
        )
        for s, t, b, m in zip(srcs, tgts, trees, metas)
    )
    return ParallelCorpus(records)


# ---------------------------------------------------------------------------
# toy-world transforms (all outputs are valid derivations of the toy grammar)


def _root_np_vp(tree: ConstTree) -> bool:
    return (
        tree.label == "S"
        and len(tree.children) == 2
        and all(isinstance(c, Internal) for c in tree.children)
        and tree.children[0].label == "NP"
        and tree.children[1].label == "VP"
    )


def tf_identity(tree: ConstTree) -> ConstTree:
    return tree


def tf_embed_report(tree: ConstTree):
    """(S x) -> (S (NP alice) (VP (V says) (SBAR that (S x))))."""
    if tree.label != "S":
        return None
    return Internal(
        "S",
        (
            Internal("NP", (Leaf("alice"),)),
            Internal(
                "VP",
                (
                    Internal("V", (Leaf("says"),)),
                    Internal("SBAR", (Leaf("that"), tree)),
                ),
            ),
        ),
    )


def tf_adverbify(tree: ConstTree):
    """(S (NP x) (VP y)) -> (S (ADVP often) (NP x) (VP y))."""
    if not _root_np_vp(tree):
        return None
    return Internal("S", (Internal("ADVP", (Leaf("often"),)),) + tree.children)


def tf_question(tree: ConstTree):
    """(S (NP x) (VP y)) -> (S does (NP x) (VP y) ?)."""
    if not _root_np_vp(tree):
        return None
    return Internal("S", (Leaf("does"),) + tree.children + (Leaf("?"),))


TOY_TRANSFORMS: dict = {
    "identity": tf_identity,
    "embed_report": tf_embed_report,
    "adverbify": tf_adverbify,
    "question": tf_question,
}


def resolve_transforms(names: Iterable[str]) -> dict:
    out = {}
    for name in names:
        if name not in TOY_TRANSFORMS:
            raise ValueError(f"unknown transform {name!r}")
        out[name] = TOY_TRANSFORMS[name]
    return out


# ---------------------------------------------------------------------------
# label noise


def inject_label_noise(
    trees: Iterable[ConstTree], ratio: float, pool: set, seed: int
) -> list:
    """Relabel round(ratio * total) internal nodes (root sentinel excluded),
    chosen uniformly without replacement, to a different pool label."""
    if not pool:
        raise ValueError("empty label pool")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    trees = list(trees)
    pool = sorted(pool)
    rng = random.Random(seed)

    sites = []  # (tree_idx, path) for every eligible internal node
    def collect(node: Node, ti: int, path: tuple, is_root: bool):
        if isinstance(node, Leaf):
            return
        if not (is_root and node.label == ROOT_LABEL):
            sites.append((ti, path))
        for ci, c in enumerate(node.children):
            collect(c, ti, path + (ci,), False)

    for ti, t in enumerate(trees):
        collect(t, ti, (), True)

    count = int(math.floor(ratio * len(sites) + 0.5))
    chosen = rng.sample(range(len(sites)), count)
    per_tree: dict = {}
    for idx in chosen:
        ti, path = sites[idx]
        node = trees[ti]
        for ci in path:
            node = node.children[ci]
        others = [l for l in pool if l != node.label]
        if not others:
            raise ValueError(f"no alternative label for {node.label!r} in pool")
        per_tree.setdefault(ti, {})[path] = others[rng.randrange(len(others))]

    def rebuild(node: Node, relabels: dict, path: tuple) -> Node:
        if isinstance(node, Leaf):
            return node
        label = relabels.get(path, node.label)
        return Internal(
            label,
            tuple(
                rebuild(c, relabels, path + (ci,))
                for ci, c in enumerate(node.children)
            ),
        )

    return [
        rebuild(t, per_tree.get(ti, {}), ()) if ti in per_tree else t
        for ti, t in enumerate(trees)
    ]
