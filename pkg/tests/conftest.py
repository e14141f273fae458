import pytest

from renorm import automorphism_from_word
from surface import staircase, torus, windtree_plus


@pytest.fixture(scope="module")
def stair2():
    return staircase(2)


@pytest.fixture(scope="module")
def stair4():
    return staircase(4)


@pytest.fixture(scope="module")
def windtree():
    return windtree_plus()


@pytest.fixture(scope="module")
def flat_torus():
    return torus()


@pytest.fixture(scope="module")
def stair2_hv(stair2):
    return automorphism_from_word(stair2, "hv")


@pytest.fixture(scope="module")
def windtree_hv(windtree):
    return automorphism_from_word(windtree, "hv")
