"""Top-down generation: constituent expansion, the inner token-level beam,
and structural beam search with moving-average score accumulation and
optional template rewards.

Scores accumulate as ``delta = alpha * delta_parent + (1 - alpha) *
delta_infilling (+ reward)``; candidates whose syntax context has no
placeholder left are finished and pass through pruning unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .model.base import EncodedSource, ScoreModel
from .tree import (
    ROOT_LABEL,
    SEP_TOKEN,
    ConstTree,
    Internal,
    Leaf,
    Placeholder,
    SyntaxContext,
    Template,
    Token,
    display_label,
    parse_context_item,
    template_frontier,
)
from .triplet import InfillingSequence, TripletError, Vocab


class SearchError(RuntimeError):
    """Decoding failed with no usable hypothesis."""


class ExpansionError(ValueError):
    """Infilling groups do not line up with the context placeholders."""


@dataclass(frozen=True)
class SearchConfig:
    k: int = 5
    alpha: float = 0.8
    d_max: int = 32
    t_max: int = 128
    template: Optional[Template] = None
    gamma: float = 0.32
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("beam width must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("accumulation weight must be in [0, 1]")
        if self.gamma < 0.0:
            raise ValueError("template reward must be >= 0")


@dataclass(frozen=True)
class TraceStep:
    depth: int
    context: SyntaxContext
    infilling: InfillingSequence
    delta_f: float
    delta: float
    reward: float = 0.0
    parent_index: int = 0
    edited: bool = False


@dataclass(frozen=True)
class BeamCandidate:
    context: SyntaxContext
    score: float
    finished: bool = False
    failed: bool = False
    trace: tuple = ()

    def tokens(self) -> list:
        return self.context.tokens()


def root_candidate() -> BeamCandidate:
    return BeamCandidate(SyntaxContext((Placeholder(ROOT_LABEL),)), 0.0)


# ---------------------------------------------------------------------------
# expansion primitives


def split_groups(f: InfillingSequence) -> list:
    """One token group per separator, in order."""
    return f.groups()


def expand(s: SyntaxContext, f: InfillingSequence) -> SyntaxContext:
    """Replace each placeholder, left to right, by its infilling group."""
    groups = split_groups(f)
    n_ph = s.placeholder_count()
    if len(groups) != n_ph:
        raise ExpansionError(
            f"infilling has {len(groups)} groups for {n_ph} placeholders"
        )
    items: list = []
    gi = 0
    for it in s.items:
        if isinstance(it, Token):
            items.append(it)
        else:
            items.extend(parse_context_item(tok) for tok in groups[gi])
            gi += 1
    return SyntaxContext(tuple(items))


def is_terminated(s: SyntaxContext) -> bool:
    return not s.has_placeholder()


def template_reward(
    child_context: SyntaxContext, template: Template, child_depth: int, gamma: float
) -> float:
    """gamma iff the context's placeholder labels equal the template's
    nonempty frontier at the child depth, else 0."""
    if template is None:
        return 0.0
    frontier = template_frontier(template, child_depth)
    if frontier and child_context.placeholder_labels() == frontier:
        return gamma
    return 0.0


# ---------------------------------------------------------------------------
# inner token-level beam


def _valid_infilling(tokens: tuple, context: SyntaxContext):
    try:
        f = InfillingSequence(tokens)
    except TripletError:
        return None
    if f.group_count() != context.placeholder_count():
        return None
    return f


def inner_beam_search(
    model: ScoreModel,
    h_src: EncodedSource,
    context: SyntaxContext,
    k: int,
    t_max: int,
) -> list:
    """Length-capped token beam search for the infilling of one context.

    Finished hypotheses stay in-beam; malformed sequences (group-count
    mismatch, empty group, stray reserved tokens) are filtered after the
    search.  Returns up to k (score, InfillingSequence), best first.
    """
    vocab = model.vocab
    ctx_items = context.render()
    banned = {
        vocab.strict_id(t)
        for t in (Vocab.PAD, Vocab.BOS, Vocab.UNK, ROOT_LABEL)
        if t in vocab
    }
    beam = [(0.0, (), False)]  # (score, tokens, finished)
    for _ in range(t_max + 1):  # +1 so a t_max-token body can take its eos
        if all(fin for _, _, fin in beam):
            break
        cands = []
        for score, toks, fin in beam:
            if fin:
                cands.append((score, toks, True))
                continue
            if len(toks) >= t_max:
                continue  # over-length, cannot finish: drop
            lp = model.next_logprobs(h_src, ctx_items, toks)
            order = lp.argsort()[::-1]
            taken = 0
            for tid in order:
                tid = int(tid)
                if tid in banned:
                    continue
                tok = vocab.token(tid)
                if tid == vocab.eos_id:
                    cands.append((score + float(lp[tid]), toks, True))
                else:
                    cands.append((score + float(lp[tid]), toks + (tok,), False))
                taken += 1
                if taken >= k:
                    break
        if not cands:
            break
        cands.sort(key=lambda c: (-c[0], c[1]))
        beam = cands[:k]

    out = []
    for score, toks, fin in beam:
        if not fin:
            continue
        f = _valid_infilling(toks, context)
        if f is not None:
            out.append((score, f))
    out.sort(key=lambda p: (-p[0], p[1].tokens))
    return out


# ---------------------------------------------------------------------------
# structural beam search


def advance_beam(
    model: ScoreModel,
    h_src: EncodedSource,
    beam: Sequence[BeamCandidate],
    config: SearchConfig,
    depth: int,
) -> list:
    """One depth of structural beam search: expand every unfinished
    candidate through the inner beam, accumulate scores, prune to k."""
    children: list = []
    carried: list = []
    for idx, cand in enumerate(beam):
        if cand.finished or cand.failed:
            carried.append(cand)
            continue
        results = inner_beam_search(model, h_src, cand.context, config.k, config.t_max)
        if not results:
            carried.append(replace(cand, failed=True))
            continue
        for delta_f, f in results:
            ctx = expand(cand.context, f)
            delta = config.alpha * cand.score + (1 - config.alpha) * delta_f
            reward = template_reward(ctx, config.template, depth + 1, config.gamma)
            delta += reward
            step = TraceStep(depth, cand.context, f, delta_f, delta, reward, idx)
            children.append(
                BeamCandidate(
                    ctx,
                    delta,
                    finished=is_terminated(ctx),
                    trace=cand.trace + (step,),
                )
            )
    pool = children + [c for c in carried if not c.failed]
    pool.sort(key=lambda c: (-c.score, c.context.render()))
    failed = [c for c in carried if c.failed]
    return (pool + failed)[: config.k]


def rank_candidates(beam: Sequence[BeamCandidate]) -> list:
    return sorted(
        beam,
        key=lambda c: (c.failed, not c.finished, -c.score, c.context.render()),
    )


def structural_beam_search(
    model: ScoreModel, source: Sequence[str], config: SearchConfig
) -> list:
    """Full decode; returns candidates ranked best-first, finished and
    failed ones flagged.  Raises SearchError when every path failed."""
    h_src = model.encode_source(source)
    beam = [root_candidate()]
    depth = 0
    while depth < config.d_max and any(
        not (c.finished or c.failed) for c in beam
    ):
        beam = advance_beam(model, h_src, beam, config, depth)
        depth += 1
    if all(c.failed for c in beam):
        raise SearchError(
            f"beam emptied at depth {depth}: all {len(beam)} candidates failed"
        )
    return rank_candidates(beam)


def greedy_decode(
    model: ScoreModel, source: Sequence[str], config: SearchConfig = None
) -> BeamCandidate:
    """Depth-wise greedy generation (inner beam of width 1), written as its
    own loop rather than delegating to the structural beam."""
    cfg = config or SearchConfig(k=1)
    h_src = model.encode_source(source)
    context = SyntaxContext((Placeholder(ROOT_LABEL),))
    score = 0.0
    trace: tuple = ()
    for depth in range(cfg.d_max):
        if is_terminated(context):
            break
        results = inner_beam_search(model, h_src, context, 1, cfg.t_max)
        if not results:
            return BeamCandidate(context, score, failed=True, trace=trace)
        delta_f, f = results[0]
        context = expand(context, f)
        score = cfg.alpha * score + (1 - cfg.alpha) * delta_f
        reward = template_reward(context, cfg.template, depth + 1, cfg.gamma)
        score += reward
        trace = trace + (TraceStep(depth, None, f, delta_f, score, reward),)
    finished = is_terminated(context)
    return BeamCandidate(context, score, finished=finished, failed=not finished, trace=trace)


# ---------------------------------------------------------------------------
# induced trees and trace serialization


def induce_tree(trace: Sequence[TraceStep]) -> ConstTree:
    """Rebuild the parse tree implied by a complete decode trace: each
    expanded placeholder becomes an internal node over its infilling group."""
    root = {"label": ROOT_LABEL, "ch": []}
    frontier = [root]
    for step in trace:
        groups = step.infilling.groups()
        if len(groups) != len(frontier):
            raise ExpansionError(
                f"depth {step.depth}: {len(groups)} groups for "
                f"{len(frontier)} open constituents"
            )
        nxt = []
        for node, group in zip(frontier, groups):
            for tok in group:
                item = parse_context_item(tok)
                if isinstance(item, Placeholder):
                    child = {"label": item.label, "ch": []}
                    node["ch"].append(child)
                    nxt.append(child)
                else:
                    node["ch"].append(tok)
        frontier = nxt
    if frontier:
        raise ExpansionError("trace ends with unexpanded constituents")

    def freeze(node) -> Internal:
        return Internal(
            node["label"],
            tuple(
                freeze(c) if isinstance(c, dict) else Leaf(c) for c in node["ch"]
            ),
        )

    return freeze(root)


def step_to_obj(step: TraceStep) -> dict:
    return {
        "depth": step.depth,
        "context": list(step.context.render()) if step.context else None,
        "infilling": list(step.infilling.tokens),
        "delta_f": step.delta_f,
        "delta": step.delta,
        "reward": step.reward,
        "parent_index": step.parent_index,
        "edited": step.edited,
    }


def step_from_obj(obj: dict) -> TraceStep:
    return TraceStep(
        obj["depth"],
        SyntaxContext.from_strings(obj["context"]) if obj.get("context") else None,
        InfillingSequence(tuple(obj["infilling"])),
        obj["delta_f"],
        obj["delta"],
        obj.get("reward", 0.0),
        obj.get("parent_index", 0),
        obj.get("edited", False),
    )


def candidate_to_obj(c: BeamCandidate) -> dict:
    return {
        "context": list(c.context.render()),
        "score": c.score,
        "finished": c.finished,
        "failed": c.failed,
        "trace": [step_to_obj(s) for s in c.trace],
    }


def candidate_from_obj(obj: dict) -> BeamCandidate:
    return BeamCandidate(
        SyntaxContext.from_strings(obj["context"]),
        obj["score"],
        obj["finished"],
        obj["failed"],
        tuple(step_from_obj(s) for s in obj["trace"]),
    )


def write_trace_line(source: Sequence[str], config: SearchConfig, ranked) -> str:
    obj = {
        "source": list(source),
        "config": {
            "k": config.k,
            "alpha": config.alpha,
            "gamma": config.gamma,
            "d_max": config.d_max,
            "t_max": config.t_max,
            "seed": config.seed,
        },
        "candidates": [candidate_to_obj(c) for c in ranked],
    }
    return json.dumps(obj)


def read_trace_line(line: str) -> dict:
    obj = json.loads(line)
    obj["candidates"] = [candidate_from_obj(c) for c in obj["candidates"]]
    return obj
