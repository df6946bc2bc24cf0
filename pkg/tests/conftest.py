import numpy as np
import pytest

from softswarm import objectives


@pytest.fixture(scope="session")
def dw():
    return objectives.double_well(1.0)


@pytest.fixture(scope="session")
def qw():
    return objectives.quadruple_well(2.0)


@pytest.fixture(scope="session")
def ackley_spec():
    return objectives.ackley()


@pytest.fixture(scope="session")
def quad2():
    return objectives.quadratic(2.0, dim=2)


@pytest.fixture(scope="session")
def catalog(dw, qw, ackley_spec, quad2):
    return (dw, qw, ackley_spec, quad2)


def box_sample(spec, count, rng):
    lo, hi = spec.domain_box[:, 0], spec.domain_box[:, 1]
    return rng.uniform(lo, hi, size=(count, spec.dimension))
