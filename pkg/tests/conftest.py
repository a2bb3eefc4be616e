import numpy as np
import pytest

from entroflow import as_shape, make_point, params_from_state, product_basis, regularized_origin


@pytest.fixture(scope="session")
def qutrit_pair():
    shape = as_shape([3, 3])
    return shape, product_basis(shape)


@pytest.fixture(scope="session")
def qubit_basis():
    return product_basis(as_shape([2]))


def origin_point(shape, basis, eps):
    """Exponential-family point at the regularised entangled origin."""
    theta = params_from_state(regularized_origin(shape, eps), basis)
    return make_point(theta, basis)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260819)
