import numpy as np
import pytest

from qswlab import fixture


@pytest.fixture(params=["A", "B", "C", "D"])
def any_fixture(request):
    return fixture(request.param)


@pytest.fixture
def model_A():
    return fixture("A")


@pytest.fixture
def model_B():
    return fixture("B")


@pytest.fixture
def model_C():
    return fixture("C")


@pytest.fixture
def model_D():
    return fixture("D")


def close(a, b, tol=1e-12):
    np.testing.assert_allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=0, atol=tol)
