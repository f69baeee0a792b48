from fractions import Fraction

import pytest

from randlab import (
    FinProbSpace,
    Randomization,
    directed_cycle,
    linear_order,
    pure_set,
)


@pytest.fixture(scope="session")
def m2():
    return pure_set(2)


@pytest.fixture(scope="session")
def m4():
    return pure_set(4)


@pytest.fixture(scope="session")
def c3():
    return directed_cycle(3)


@pytest.fixture(scope="session")
def c5():
    return directed_cycle(5)


@pytest.fixture(scope="session")
def l3():
    return linear_order(3)


@pytest.fixture(scope="session")
def skewed_base():
    return FinProbSpace(
        [(0, Fraction(1, 2)), (1, Fraction(1, 3)), (2, Fraction(1, 6))]
    )


@pytest.fixture
def coin_rand(m2):
    return Randomization.constant(m2, FinProbSpace.dyadic(1))
