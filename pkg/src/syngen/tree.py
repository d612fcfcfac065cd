"""Constituency-tree data model and tree-level operations.

Trees are immutable: internal nodes carry a constituent label and an ordered
tuple of children, leaves carry a single token.  The artificial root label
``<T>`` and the infilling separator ``<c>`` are reserved and may not appear
as ordinary labels or tokens.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

ROOT_LABEL = "<T>"
SEP_TOKEN = "<c>"

# "T" is also reserved: its placeholder rendering "<T>" would collide with
# the root sentinel.
_RESERVED_LABELS = {ROOT_LABEL, SEP_TOKEN, "T", "c"}

_PLACEHOLDER_RE = re.compile(r"^<([^<>\s()]+)>$")


class TreeError(ValueError):
    """Malformed tree, span, or context."""


@dataclass(frozen=True)
class Leaf:
    token: str

    def __post_init__(self):
        t = self.token
        if not t or any(ch.isspace() for ch in t) or "(" in t or ")" in t:
            raise TreeError(f"invalid leaf token: {t!r}")
        if _PLACEHOLDER_RE.match(t) or t == SEP_TOKEN:
            raise TreeError(f"leaf token collides with a reserved form: {t!r}")


@dataclass(frozen=True)
class Internal:
    label: str
    children: tuple

    def __post_init__(self):
        lab = self.label
        if not lab or any(ch.isspace() for ch in lab) or "(" in lab or ")" in lab:
            raise TreeError(f"invalid label: {lab!r}")
        if lab in _RESERVED_LABELS and lab != ROOT_LABEL:
            raise TreeError(f"reserved label: {lab!r}")
        if not self.children:
            raise TreeError(f"internal node {lab!r} has no children")
        for c in self.children:
            if not isinstance(c, (Leaf, Internal)):
                raise TreeError(f"bad child under {lab!r}: {c!r}")


ConstTree = Internal
Node = Union[Leaf, Internal]


@dataclass(frozen=True)
class LabeledSpan:
    start: int
    end: int
    depth: int
    label: str

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise TreeError(f"invalid span extent ({self.start}, {self.end})")


@dataclass(frozen=True)
class Token:
    text: str


@dataclass(frozen=True)
class Placeholder:
    label: str


ContextItem = Union[Token, Placeholder]


def display_label(label: str) -> str:
    """Angle-bracketed surface form of a constituent label."""
    return label if label == ROOT_LABEL else f"<{label}>"


def parse_context_item(item: str) -> ContextItem:
    if item == ROOT_LABEL:
        return Placeholder(ROOT_LABEL)
    m = _PLACEHOLDER_RE.match(item)
    if m:
        return Placeholder(m.group(1))
    return Token(item)


@dataclass(frozen=True)
class SyntaxContext:
    items: tuple

    def __post_init__(self):
        if not self.items:
            raise TreeError("empty syntax context")
        for it in self.items:
            if not isinstance(it, (Token, Placeholder)):
                raise TreeError(f"bad context item: {it!r}")

    @classmethod
    def from_strings(cls, items: Iterable[str]) -> "SyntaxContext":
        return cls(tuple(parse_context_item(s) for s in items))

    def render(self) -> tuple:
        out = []
        for it in self.items:
            out.append(it.text if isinstance(it, Token) else display_label(it.label))
        return tuple(out)

    def placeholder_labels(self) -> list:
        return [it.label for it in self.items if isinstance(it, Placeholder)]

    def placeholder_count(self) -> int:
        return sum(1 for it in self.items if isinstance(it, Placeholder))

    def has_placeholder(self) -> bool:
        return any(isinstance(it, Placeholder) for it in self.items)

    def tokens(self) -> list:
        return [it.text for it in self.items if isinstance(it, Token)]


@dataclass(frozen=True)
class Template:
    """A label-only tree; nodes whose children were all leaves are childless."""

    label: str
    children: tuple = ()

    def __post_init__(self):
        for c in self.children:
            if not isinstance(c, Template):
                raise TreeError(f"bad template child: {c!r}")


# ---------------------------------------------------------------------------
# bracketed (de)serialization


def _tokenize_bracketed(text: str) -> list:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse_bracketed(text: str) -> ConstTree:
    """Parse a single-line bracketed tree like ``(S (NP I) (VP ate) .)``."""
    toks = _tokenize_bracketed(text)
    if not toks:
        raise TreeError("empty input")
    pos = 0

    def parse_node() -> Node:
        nonlocal pos
        if toks[pos] != "(":
            tok = toks[pos]
            pos += 1
            return Leaf(tok)
        pos += 1
        if pos >= len(toks) or toks[pos] in "()":
            raise TreeError("missing label after '('")
        label = toks[pos]
        pos += 1
        children = []
        while pos < len(toks) and toks[pos] != ")":
            children.append(parse_node())
        if pos >= len(toks):
            raise TreeError("unbalanced parentheses: missing ')'")
        pos += 1
        if not children:
            raise TreeError(f"internal node {label!r} has no children")
        return Internal(label, tuple(children))

    if toks[0] != "(":
        raise TreeError("tree must start with '('")
    tree = parse_node()
    if pos != len(toks):
        raise TreeError("unbalanced parentheses: trailing input")
    return tree


def to_bracketed(node: Node) -> str:
    if isinstance(node, Leaf):
        return node.token
    inner = " ".join(to_bracketed(c) for c in node.children)
    return f"({node.label} {inner})"


def read_trees(text: str) -> list:
    """One bracketed tree per non-empty line."""
    return [parse_bracketed(line) for line in text.splitlines() if line.strip()]


def write_trees(trees: Iterable[ConstTree]) -> str:
    return "".join(to_bracketed(t) + "\n" for t in trees)


# ---------------------------------------------------------------------------
# structural queries


def yield_tokens(node: Node) -> list:
    if isinstance(node, Leaf):
        return [node.token]
    out = []
    for c in node.children:
        out.extend(yield_tokens(c))
    return out


def iter_internal(tree: ConstTree, depth: int = 0) -> Iterator:
    """Yields (node, depth) for every internal node, preorder left-to-right."""
    yield tree, depth
    for c in tree.children:
        if isinstance(c, Internal):
            yield from iter_internal(c, depth + 1)


def internal_count(tree: ConstTree) -> int:
    return sum(1 for _ in iter_internal(tree))


def tree_depth(tree: ConstTree) -> int:
    """Maximum depth of an internal node, root at 0."""
    return max(d for _, d in iter_internal(tree))


def node_count(node: Union[Node, Template]) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + sum(node_count(c) for c in node.children)


def labeled_spans(tree: ConstTree) -> set:
    """One span per internal node; unary chains are kept apart by depth."""
    spans = set()

    def walk(node: Node, start: int, depth: int) -> int:
        if isinstance(node, Leaf):
            return start + 1
        pos = start
        for c in node.children:
            pos = walk(c, pos, depth + 1)
        spans.add(LabeledSpan(start, pos, depth, node.label))
        return pos

    walk(tree, 0, 0)
    return spans


def attach_root(tree: ConstTree) -> ConstTree:
    if tree.label == ROOT_LABEL:
        return tree
    return Internal(ROOT_LABEL, (tree,))


def normalize(tree: ConstTree, whitelist: set) -> ConstTree:
    """Dissolve non-whitelisted internal nodes, splicing children into the
    parent bottom-up.  The yield is unchanged; the root is kept as-is."""
    if not whitelist:
        raise TreeError("empty whitelist")
    if tree.label != ROOT_LABEL and tree.label not in whitelist:
        raise TreeError(f"root label {tree.label!r} not whitelisted")

    def rebuild(node: Node) -> list:
        if isinstance(node, Leaf):
            return [node]
        kids = [k for c in node.children for k in rebuild(c)]
        if node.label in whitelist:
            return [Internal(node.label, tuple(kids))]
        return kids

    kids = [k for c in tree.children for k in rebuild(c)]
    return Internal(tree.label, tuple(kids))


def frontier_at_depth(tree: ConstTree, d: int) -> SyntaxContext:
    """Depth-d frontier: tokens above d stay lexical, internal nodes at
    exactly depth d become placeholders."""
    if tree.label != ROOT_LABEL:
        raise TreeError("frontier requires a tree rooted at the root sentinel")
    if d < 0:
        raise TreeError("negative depth")
    items = []

    def walk(node: Node, depth: int):
        if isinstance(node, Leaf):
            items.append(Token(node.token))
            return
        if depth == d:
            items.append(Placeholder(node.label))
            return
        for c in node.children:
            walk(c, depth + 1)

    walk(tree, 0)
    return SyntaxContext(tuple(items))


def delexicalize(node: ConstTree) -> Template:
    kids = tuple(delexicalize(c) for c in node.children if isinstance(c, Internal))
    return Template(node.label, kids)


def template_attach_root(template: Template) -> Template:
    if template.label == ROOT_LABEL:
        return template
    return Template(ROOT_LABEL, (template,))


def parse_template(text: str) -> Template:
    """Parse a bracketed label-only tree, e.g. ``(S (NP) (VP (NP)))``."""
    toks = _tokenize_bracketed(text)
    if not toks:
        raise TreeError("empty template")
    pos = 0

    def parse_node() -> Template:
        nonlocal pos
        if toks[pos] != "(":
            raise TreeError(f"unexpected token in template: {toks[pos]!r}")
        pos += 1
        if pos >= len(toks) or toks[pos] in "()":
            raise TreeError("missing label after '('")
        label = toks[pos]
        pos += 1
        children = []
        while pos < len(toks) and toks[pos] != ")":
            children.append(parse_node())
        if pos >= len(toks):
            raise TreeError("unbalanced parentheses in template")
        pos += 1
        return Template(label, tuple(children))

    node = parse_node()
    if pos != len(toks):
        raise TreeError("trailing input after template")
    return node


def template_to_bracketed(t: Template) -> str:
    if not t.children:
        return f"({t.label})"
    return f"({t.label} " + " ".join(template_to_bracketed(c) for c in t.children) + ")"


def template_frontier(template: Template, d: int) -> list:
    """Labels of template nodes at exactly depth d (root sentinel at 0)."""
    rooted = template_attach_root(template)
    out = []

    def walk(node: Template, depth: int):
        if depth == d:
            out.append(node.label)
            return
        for c in node.children:
            walk(c, depth + 1)

    walk(rooted, 0)
    return out


# ---------------------------------------------------------------------------
# tree edit distance (Zhang-Shasha over ordered trees, unit costs)


def _ted_label(node) -> str:
    return node.token if isinstance(node, Leaf) else node.label


def _ted_children(node) -> tuple:
    return () if isinstance(node, Leaf) else node.children


def _annotate(root):
    """Postorder labels and leftmost-leaf indices."""
    labels, lml = [], []

    def walk(node) -> int:
        child_ids = [walk(c) for c in _ted_children(node)]
        idx = len(labels)
        labels.append(_ted_label(node))
        lml.append(lml[child_ids[0]] if child_ids else idx)
        return idx

    walk(root)
    return labels, lml


def tree_edit_distance(a, b) -> int:
    """Minimum number of unit-cost node relabels/inserts/deletes turning
    ordered tree ``a`` into ``b``."""
    la, lmla = _annotate(a)
    lb, lmlb = _annotate(b)
    na, nb = len(la), len(lb)

    def keyroots(lml):
        seen = {}
        for i, l in enumerate(lml):
            seen[l] = i  # last (deepest-right) node per leftmost leaf
        return sorted(seen.values())

    kra, krb = keyroots(lmla), keyroots(lmlb)
    td = [[0] * nb for _ in range(na)]

    for i in kra:
        for j in krb:
            li, lj = lmla[i], lmlb[j]
            m, n = i - li + 2, j - lj + 2
            fd = [[0] * n for _ in range(m)]
            for x in range(1, m):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, n):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, m):
                for y in range(1, n):
                    ai, bj = li + x - 1, lj + y - 1
                    if lmla[ai] == li and lmlb[bj] == lj:
                        cost = 0 if la[ai] == lb[bj] else 1
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[x - 1][y - 1] + cost,
                        )
                        td[ai][bj] = fd[x][y]
                    else:
                        xa, yb = lmla[ai] - li, lmlb[bj] - lj
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[xa][yb] + td[ai][bj],
                        )
    return td[na - 1][nb - 1]


# ---------------------------------------------------------------------------
# span scoring


def _span_multiset(tree: ConstTree) -> Counter:
    return Counter(
        (s.start, s.end, s.label)
        for s in labeled_spans(tree)
        if s.label != ROOT_LABEL
    )


def span_match_counts(pred: ConstTree, gold: ConstTree) -> tuple:
    """(matched, n_predicted, n_gold) over labeled spans, depth ignored."""
    if yield_tokens(pred) != yield_tokens(gold):
        raise TreeError("span scoring requires identical yields")
    p, g = _span_multiset(pred), _span_multiset(gold)
    matched = sum((p & g).values())
    return matched, sum(p.values()), sum(g.values())


def prf_from_counts(matched: int, n_pred: int, n_gold: int) -> tuple:
    precision = 100.0 * matched / n_pred if n_pred else (100.0 if not n_gold else 0.0)
    recall = 100.0 * matched / n_gold if n_gold else (100.0 if not n_pred else 0.0)
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return precision, recall, f1


def span_prf(pred: ConstTree, gold: ConstTree) -> tuple:
    """Labeled-span precision/recall/F1 in percent; the root sentinel span
    is excluded and depth is ignored in matching."""
    return prf_from_counts(*span_match_counts(pred, gold))
