"""Evaluation suite: corpus and sentence BLEU, the reference/source
mixing score, lexical and syntactic diversity, beam diversity aggregates,
and span-based interpretability reports.

All diversity scores live on a 0..100 scale; normalizers (longest string,
largest tree) are conventions of this package.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .grammar import ParseFailure, Pcfg, cky_parse
from .search import TraceStep, induce_tree
from .tree import (
    ROOT_LABEL,
    ConstTree,
    attach_root,
    delexicalize,
    labeled_spans,
    node_count,
    normalize,
    span_match_counts,
    prf_from_counts,
    tree_edit_distance,
    yield_tokens,
)


class MetricError(ValueError):
    """Empty or misaligned evaluation inputs."""


@dataclass(frozen=True)
class MetricConfig:
    r: float = 0.7
    max_order: int = 4
    smooth_sentence: bool = True
    scale: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise MetricError("mixing weight must be in [0, 1]")
        if self.max_order < 1:
            raise MetricError("max n-gram order must be >= 1")


# ---------------------------------------------------------------------------
# BLEU


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_len(hyp_len: int, refs: Sequence[Sequence[str]]) -> int:
    # ties go to the shorter reference
    return min((abs(len(r) - hyp_len), len(r)) for r in refs)[1]


def _match_counts(hyp, refs, n):
    hyp_ngrams = _ngrams(hyp, n)
    if not hyp_ngrams:
        return 0, 0
    best = Counter()
    for ref in refs:
        for g, c in _ngrams(ref, n).items():
            if c > best[g]:
                best[g] = c
    matched = sum(min(c, best[g]) for g, c in hyp_ngrams.items())
    return matched, sum(hyp_ngrams.values())


def bleu(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[Sequence[str]]],
    config: MetricConfig = MetricConfig(),
) -> float:
    """Corpus-level BLEU in percent: geometric mean of modified n-gram
    precisions with an exponential brevity penalty; multiple references
    are pooled by maximum match count."""
    if not hyps:
        raise MetricError("empty corpus")
    if len(hyps) != len(refs):
        raise MetricError(f"{len(hyps)} hypotheses vs {len(refs)} reference sets")
    matched = [0] * config.max_order
    total = [0] * config.max_order
    hyp_len = 0
    ref_len = 0
    for hyp, rs in zip(hyps, refs):
        if not rs:
            raise MetricError("hypothesis without references")
        hyp_len += len(hyp)
        ref_len += _closest_ref_len(len(hyp), rs)
        for n in range(1, config.max_order + 1):
            m, t = _match_counts(hyp, rs, n)
            matched[n - 1] += m
            total[n - 1] += t
    if any(t == 0 or m == 0 for m, t in zip(matched, total)):
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matched, total)) / config.max_order
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / max(hyp_len, 1))
    return 100.0 * bp * math.exp(log_p)


def sentence_bleu(
    hyp: Sequence[str],
    refs: Sequence[Sequence[str]],
    config: MetricConfig = MetricConfig(),
) -> float:
    """Single-sentence BLEU; orders above 1 get add-one smoothing, orders
    with no candidate n-grams are skipped."""
    if not refs:
        raise MetricError("hypothesis without references")
    log_ps = []
    for n in range(1, config.max_order + 1):
        m, t = _match_counts(hyp, refs, n)
        if t == 0:
            continue
        if n > 1 and config.smooth_sentence:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        log_ps.append(math.log(m / t))
    if not log_ps:
        return 0.0
    hyp_len = len(hyp)
    ref_len = _closest_ref_len(hyp_len, refs)
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / max(hyp_len, 1))
    return 100.0 * bp * math.exp(sum(log_ps) / len(log_ps))


def self_bleu(
    hyps: Sequence[Sequence[str]],
    srcs: Sequence[Sequence[str]],
    config: MetricConfig = MetricConfig(),
) -> float:
    return bleu(hyps, [[s] for s in srcs], config)


def ibleu_from_scores(
    ref_bleu: float, src_bleu: float, config: MetricConfig = MetricConfig()
) -> float:
    """The mixing rule on precomputed scores: r * reference BLEU minus
    (1 - r) * source BLEU."""
    return config.r * ref_bleu - (1 - config.r) * src_bleu


def ibleu(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[Sequence[str]]],
    srcs: Sequence[Sequence[str]],
    config: MetricConfig = MetricConfig(),
) -> float:
    """r-weighted reference BLEU minus (1-r)-weighted source BLEU."""
    return ibleu_from_scores(
        bleu(hyps, refs, config), self_bleu(hyps, srcs, config), config
    )


# ---------------------------------------------------------------------------
# edit distance and diversity


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance over arbitrary sequences, iterative DP."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(
                min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (x != y))
            )
        prev = cur
    return prev[-1]


def d_lex(a: Sequence[str], b: Sequence[str], scale: float = 100.0) -> float:
    """Character edit distance between the sorted bag-of-words strings,
    normalized by the longer string."""
    sa = " ".join(sorted(a))
    sb = " ".join(sorted(b))
    longest = max(len(sa), len(sb))
    if longest == 0:
        return 0.0
    return scale * edit_distance(sa, sb) / longest


def d_syn(a: ConstTree, b: ConstTree, scale: float = 100.0) -> float:
    """Tree edit distance between the delexicalized trees, normalized by
    the larger tree and clamped."""
    ta, tb = delexicalize(a), delexicalize(b)
    dist = tree_edit_distance(ta, tb)
    norm = max(node_count(ta), node_count(tb))
    return scale * min(1.0, dist / norm)


@dataclass(frozen=True)
class BeamDiversity:
    pairwise_d_lex: Optional[float]
    pairwise_d_syn: Optional[float]
    avg_bleu: float


def beam_diversity(
    beams: Sequence[Sequence[tuple]],
    refs: Sequence[Sequence[str]],
    config: MetricConfig = MetricConfig(),
) -> BeamDiversity:
    """Mean pairwise diversity within each beam and mean candidate quality.

    Each beam is a list of (tokens, tree) candidates.  Pairwise parts need
    at least two candidates somewhere; otherwise they are reported absent.
    """
    if not beams:
        raise MetricError("empty corpus")
    if len(beams) != len(refs):
        raise MetricError(f"{len(beams)} beams vs {len(refs)} references")
    lex_means, syn_means, bleus = [], [], []
    for beam, ref in zip(beams, refs):
        if not beam:
            raise MetricError("empty beam")
        for toks, _ in beam:
            bleus.append(sentence_bleu(toks, [ref], config))
        if len(beam) < 2:
            continue
        lp, sp = [], []
        for i in range(len(beam)):
            for j in range(i + 1, len(beam)):
                lp.append(d_lex(beam[i][0], beam[j][0], config.scale))
                sp.append(d_syn(beam[i][1], beam[j][1], config.scale))
        lex_means.append(sum(lp) / len(lp))
        syn_means.append(sum(sp) / len(sp))
    return BeamDiversity(
        sum(lex_means) / len(lex_means) if lex_means else None,
        sum(syn_means) / len(syn_means) if syn_means else None,
        sum(bleus) / len(bleus),
    )


# ---------------------------------------------------------------------------
# interpretability


@dataclass(frozen=True)
class InterpReport:
    precision: float
    recall: float
    f1: float
    n_traces: int
    n_rejected: int


def interp_report(
    traces: Sequence[Sequence[TraceStep]], parser: Pcfg, whitelist: set
) -> InterpReport:
    """Micro-averaged labeled-span agreement between the trees induced
    from decode traces and an independent re-parse of each hypothesis.

    Both sides are normalized to the label whitelist.  Hypotheses the
    parser rejects contribute their induced spans as unmatched."""
    if not traces:
        raise MetricError("no traces")
    matched = n_pred = n_gold = rejected = 0
    for trace in traces:
        induced = normalize(induce_tree(trace), set(whitelist))
        toks = yield_tokens(induced)
        try:
            parsed, _ = cky_parse(parser, toks)
        except ParseFailure:
            rejected += 1
            n_pred += sum(
                1 for s in labeled_spans(induced) if s.label != ROOT_LABEL
            )
            continue
        gold = normalize(attach_root(parsed), set(whitelist))
        m, p, g = span_match_counts(induced, gold)
        matched += m
        n_pred += p
        n_gold += g
    precision, recall, f1 = prf_from_counts(matched, n_pred, n_gold)
    return InterpReport(precision, recall, f1, len(traces), rejected)


# ---------------------------------------------------------------------------
# report plumbing


@dataclass
class EvalReport:
    scores: dict = field(default_factory=dict)
    per_sentence: list = field(default_factory=list)

    def validate(self):
        for key, val in self.scores.items():
            if key.startswith("d_") and val is not None and not 0 <= val <= 100:
                raise MetricError(f"diversity score out of range: {key}={val}")

    def to_json(self) -> str:
        return json.dumps({"scores": self.scores, "per_sentence": self.per_sentence})

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        obj = json.loads(text)
        return cls(obj["scores"], obj.get("per_sentence", []))

    def render(self) -> str:
        lines = ["metric            value", "-" * 24]
        for key in sorted(self.scores):
            val = self.scores[key]
            shown = "absent" if val is None else f"{val:.4f}"
            lines.append(f"{key:<17} {shown}")
        return "\n".join(lines)
