import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from ptrational.classlat import GeometryModel, KClass  # noqa: E402
from ptrational.coeffring import CoeffRing  # noqa: E402
from ptrational.scenario import load_scenario, shipped_scenario_path  # noqa: E402
from ptrational.vertexmodel import VertexConfig, WeightTable  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SIMPLE_WEIGHTS = {
    1: {(1, 0, 0): 1, (0, 1, 0): -1},
    2: {(1, 1, 0): Fraction(1, 2), (0, 0, 0): 1},
}


def make_config(truncation=None, parity="split", weights=None, rank=1):
    geo = GeometryModel(rank, (1,) * rank, (Fraction(1),) * rank, (1,) * rank)
    table = WeightTable(default=weights or SIMPLE_WEIGHTS)
    return VertexConfig(geo, table, {"p": 0, "q": 2}, CoeffRing(truncation), parity)


@pytest.fixture(scope="session")
def config():
    return make_config()


@pytest.fixture(scope="session")
def rank1():
    return GeometryModel(1, (1,), (Fraction(1),), (2,))


@pytest.fixture(scope="session")
def rank2():
    return GeometryModel(2, (1, 1), (Fraction(1), Fraction(2)), (1, 1))


@pytest.fixture(scope="session")
def fano():
    return load_scenario(shipped_scenario_path("fano_rank1"))


@pytest.fixture(scope="session")
def split():
    return load_scenario(shipped_scenario_path("split_rank1"))


@pytest.fixture(scope="session")
def walls():
    return load_scenario(shipped_scenario_path("rank2_walls"))


def kc(d, beta, n):
    return KClass(d, tuple(beta), n)
