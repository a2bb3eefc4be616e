"""Density matrices, entropies, and the entangled origin."""

import numpy as np
import pytest

from entroflow import (
    BoundaryStateError,
    UnsupportedShapeError,
    as_shape,
    check_density_matrix,
    gibbs_state,
    lme_origin,
    marginal_entropies,
    multi_information,
    purity,
    random_density_matrix,
    regularized_origin,
    tensor_product,
    von_neumann_entropy,
)

LOG3 = np.log(3.0)


def test_entropy_reference_values():
    shape = as_shape([3, 3])
    origin = lme_origin(shape)
    assert abs(von_neumann_entropy(origin)) < 1e-12
    assert abs(von_neumann_entropy(np.eye(3) / 3) - LOG3) < 1e-12
    assert abs(von_neumann_entropy(np.eye(9) / 9) - 2 * LOG3) < 1e-12


def test_lme_origin_q3_vector_form():
    shape = as_shape([3, 3])
    rho = lme_origin(shape)
    phi = np.zeros(9)
    phi[[0, 4, 8]] = 1.0 / np.sqrt(3.0)  # (|00> + |11> + |22>)/sqrt(3)
    np.testing.assert_allclose(rho, np.outer(phi, phi), atol=1e-14)
    h = marginal_entropies(rho, shape)
    np.testing.assert_allclose(h, [LOG3, LOG3], atol=1e-12)


def test_lme_origin_q2():
    shape = as_shape([2, 2])
    rho = lme_origin(shape)
    assert abs(von_neumann_entropy(rho)) < 1e-12
    from entroflow import partial_trace

    np.testing.assert_allclose(partial_trace(rho, shape, 0), np.eye(2) / 2, atol=1e-14)


def test_lme_origin_rejects_unsupported_shapes():
    with pytest.raises(UnsupportedShapeError):
        lme_origin(as_shape([2, 3]))
    with pytest.raises(UnsupportedShapeError):
        lme_origin(as_shape([3, 3, 3]))


def test_regularized_origin_spectrum_and_marginals():
    shape = as_shape([3, 3])
    for eps in (0.01, 0.05, 0.3):
        rho = regularized_origin(shape, eps)
        w = np.sort(np.linalg.eigvalsh(rho))
        np.testing.assert_allclose(w[:8], np.full(8, eps / 9), atol=1e-14)
        assert abs(w[-1] - (1 - eps + eps / 9)) < 1e-14
        h = marginal_entropies(rho, shape)
        np.testing.assert_allclose(h, [LOG3, LOG3], atol=1e-12)
    with pytest.raises(ValueError):
        regularized_origin(shape, 0.0)
    with pytest.raises(ValueError):
        regularized_origin(shape, 1.0)


def test_regularized_origin_purity_decreasing():
    shape = as_shape([3, 3])
    values = [purity(regularized_origin(shape, e)) for e in np.linspace(0.05, 0.95, 10)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_multi_information_reference_values(rng):
    shape = as_shape([3, 3])
    assert abs(multi_information(lme_origin(shape), shape) - 2 * LOG3) < 1e-12
    assert abs(multi_information(np.eye(9) / 9, shape)) < 1e-12
    prod = tensor_product(random_density_matrix(3, rng), random_density_matrix(3, rng))
    assert abs(multi_information(prod, shape)) < 1e-10


def test_multi_information_nonnegative(rng):
    shape = as_shape([2, 3])
    for _ in range(50):
        rho = random_density_matrix(6, rng)
        assert multi_information(rho, shape) >= -1e-10


def test_marginal_entropy_bounded_by_log_dim(rng):
    shape = as_shape([3, 2])
    for _ in range(50):
        rho = random_density_matrix(6, rng)
        h1, h2 = marginal_entropies(rho, shape)
        assert h1 <= LOG3 + 1e-10
        assert h2 <= np.log(2.0) + 1e-10


def test_negative_conditional_entropy_at_origin():
    # H_{A|B} = H_{AB} - h_B = -log q < 0 for the entangled origin
    shape = as_shape([3, 3])
    rho = lme_origin(shape)
    h_cond = von_neumann_entropy(rho) - marginal_entropies(rho, shape)[1]
    assert h_cond < 0
    assert abs(h_cond + LOG3) < 1e-12


def test_gibbs_state_closed_form():
    H = np.diag([1.0, -1.0]).astype(complex)
    beta = 0.7
    rho = gibbs_state(H, beta)
    z = np.exp(-beta) + np.exp(beta)
    np.testing.assert_allclose(np.diag(rho).real, [np.exp(-beta) / z, np.exp(beta) / z], atol=1e-14)


def test_check_density_matrix_validation(rng):
    with pytest.raises(Exception):
        check_density_matrix(np.eye(3))  # trace 3
    rho = random_density_matrix(4, rng)
    spectrum = check_density_matrix(rho)
    assert spectrum.shape == (4,)
    assert abs(spectrum.sum() - 1.0) < 1e-10


def test_state_log_rejects_boundary():
    from entroflow.states import state_log

    rho = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(BoundaryStateError):
        state_log(rho)
