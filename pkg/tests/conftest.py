import random

import pytest

from deltacommit.cpg import SourceUnit, build_cpg
from deltacommit.delta import build_delta
from deltacommit.synthetic import gen_edited_pair


def unit(text: str, path: str = "T.java") -> SourceUnit:
    return SourceUnit(path, text)


def cpg(text: str, path: str = "T.java"):
    return build_cpg(SourceUnit(path, text))


def delta_pair(seed: int, n_statements=None):
    pair = gen_edited_pair(seed, n_statements)
    return cpg(pair.old_text), cpg(pair.new_text)


def delta_for(seed: int, n_statements=None):
    g1, g2 = delta_pair(seed, n_statements)
    return build_delta(g1, g2)


@pytest.fixture
def rng():
    return random.Random(0)
