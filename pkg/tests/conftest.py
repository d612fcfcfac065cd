import pytest

from syngen.grammar import (
    TOY_TRANSFORMS,
    gen_paraphrase_corpus,
    load_builtin_grammar,
)
from syngen.model import train_count
from syngen.triplet import corpus_triplets

LABELS = {"NP", "VP", "PP", "S", "SBAR", "ADJP", "ADVP"}


@pytest.fixture(scope="session")
def labels():
    return set(LABELS)


@pytest.fixture(scope="session")
def pcfg():
    return load_builtin_grammar()


@pytest.fixture(scope="session")
def small_corpus(pcfg):
    return gen_paraphrase_corpus(pcfg, TOY_TRANSFORMS, 60, seed=11)


@pytest.fixture(scope="session")
def small_triplets(small_corpus):
    return corpus_triplets(small_corpus, LABELS)


@pytest.fixture(scope="session")
def count_model(small_triplets):
    return train_count(small_triplets)
