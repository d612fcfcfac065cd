"""Syntax-guided paraphrase generation with structural beam search."""

from .estimator import SyntaxGuidedParaphraser
from .grammar import (
    ParseFailure,
    Pcfg,
    PcfgError,
    cky_parse,
    gen_paraphrase_corpus,
    load_builtin_grammar,
    load_pcfg,
    sample,
)
from .metrics import MetricConfig, bleu, d_lex, d_syn, ibleu, interp_report
from .model import (
    CountModel,
    ModelError,
    NeuralConfig,
    NeuralScoreModel,
    ScoreModel,
    load_model,
    save_model,
    train_count,
    train_neural,
)
from .search import (
    BeamCandidate,
    SearchConfig,
    SearchError,
    greedy_decode,
    induce_tree,
    structural_beam_search,
)
from .tree import (
    Internal,
    Leaf,
    SyntaxContext,
    Template,
    TreeError,
    parse_bracketed,
    to_bracketed,
    tree_edit_distance,
)
from .triplet import InfillingSequence, Triplet, Vocab, build_triplets

__version__ = "0.1.0"

__all__ = [
    "BeamCandidate",
    "CountModel",
    "InfillingSequence",
    "Internal",
    "Leaf",
    "MetricConfig",
    "ModelError",
    "NeuralConfig",
    "NeuralScoreModel",
    "ParseFailure",
    "Pcfg",
    "PcfgError",
    "ScoreModel",
    "SearchConfig",
    "SearchError",
    "SyntaxContext",
    "SyntaxGuidedParaphraser",
    "Template",
    "TreeError",
    "Triplet",
    "Vocab",
    "bleu",
    "build_triplets",
    "cky_parse",
    "d_lex",
    "d_syn",
    "gen_paraphrase_corpus",
    "greedy_decode",
    "ibleu",
    "induce_tree",
    "interp_report",
    "load_builtin_grammar",
    "load_model",
    "load_pcfg",
    "parse_bracketed",
    "sample",
    "save_model",
    "structural_beam_search",
    "to_bracketed",
    "train_count",
    "train_neural",
    "tree_edit_distance",
]
