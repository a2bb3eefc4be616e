"""Matrix exponential family and its BKM (Kubo-Mori) geometry.

States are parametrised as rho(theta) = exp(K(theta) - psi(theta) I) with
K(theta) = sum_a theta_a F_a over a traceless orthonormal Hermitian basis
and psi = log tr exp(K).  Mean parameters are mu_a = tr(rho F_a), the BKM
metric is the Hessian of psi, and the entropy gradient is -G theta.

The sign convention matters: K(theta) is the *family* generator.  The
modular generator of a state is -log rho = psi I - K(theta); see the
``modular`` module.  Keep the two distinct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import BoundaryStateError
from .operators import (
    OperatorBasis,
    exp_divided_difference,
    hermitian_eig,
    require_hermitian,
)

# Relative eigenvalue gap below which the BKM kernel uses its diagonal limit.
BKM_EQUAL_TOL = 1e-12
# Spectrum floor used when inverting the chart (log of the state).
CHART_EIG_FLOOR = 1e-12
# Underflow guard: below this the state is numerically rank deficient.
STATE_UNDERFLOW_FLOOR = 1e-250


@dataclass(frozen=True)
class ExpFamilyPoint:
    """Immutable snapshot of one family member and its local geometry.

    All fields are computed eagerly at construction: the family generator
    K(theta), log partition psi, state rho with its eigendecomposition,
    mean parameters mu and BKM metric G.
    """

    theta: np.ndarray
    basis: OperatorBasis
    generator: np.ndarray
    psi: float
    rho: np.ndarray
    mu: np.ndarray
    metric: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def entropy(self) -> float:
        return float(self.psi - self.theta @ self.mu)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def family_generator(theta, basis: OperatorBasis) -> np.ndarray:
    """K(theta) = sum_a theta_a F_a."""
    theta = _check_theta(theta, basis)
    return np.einsum("a,aij->ij", theta, basis.stack)


def _check_theta(theta, basis: OperatorBasis) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (basis.size,):
        raise ValueError(f"theta shape {theta.shape} does not match basis size {basis.size}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return theta


def log_partition(theta, basis: OperatorBasis) -> float:
    """psi(theta) = log tr exp(K(theta)), overflow-safe via the spectrum."""
    w, _ = hermitian_eig(family_generator(theta, basis))
    return float(logsumexp(w))


def bkm_kernel_matrix(p) -> np.ndarray:
    """BKM kernel k(p_j, p_k) = (p_j - p_k) / (log p_j - log p_k) on a spectrum.

    Diagonal and nearly equal pairs (|p - q| < 1e-12 max(p, q)) take the
    limit value p.
    """
    p = np.asarray(p, dtype=float)
    if p.min() <= STATE_UNDERFLOW_FLOOR:
        raise BoundaryStateError(
            f"spectrum entry {p.min():.3e} underflowed; state is numerically rank deficient"
        )
    logp = np.log(p)
    dp = p[:, None] - p[None, :]
    dl = logp[:, None] - logp[None, :]
    near = np.abs(dp) < BKM_EQUAL_TOL * np.maximum(p[:, None], p[None, :])
    out = np.zeros_like(dp)
    np.divide(dp, dl, out=out, where=~near)
    return np.where(near, p[:, None], out)


def make_point(theta, basis: OperatorBasis) -> ExpFamilyPoint:
    """Construct a family point with all derived quantities cached.

    Parameters
    ----------
    theta : array_like
        Natural parameters, length ``basis.size``.
    basis : OperatorBasis
        Traceless orthonormal Hermitian basis fixing the chart.

    Returns
    -------
    ExpFamilyPoint
        Frozen snapshot carrying K, psi, rho, mu, the BKM metric and the
        eigendecomposition of rho.
    """
    theta = _check_theta(theta, basis)
    K = family_generator(theta, basis)
    w, U = hermitian_eig(K)
    psi = float(logsumexp(w))
    p = np.exp(w - psi)
    if p.min() <= STATE_UNDERFLOW_FLOOR:
        raise BoundaryStateError(
            f"state eigenvalue underflowed at |theta| = {np.linalg.norm(theta):.3e}"
        )
    rho = (U * p) @ U.conj().T
    rho = 0.5 * (rho + rho.conj().T)

    d = K.shape[0]
    idx = np.arange(d)
    Ft = np.einsum("ji,ajk,kl->ail", U.conj(), basis.stack, U)
    mu = np.real(Ft[:, idx, idx] @ p)

    Fc = Ft.copy()
    Fc[:, idx, idx] -= mu[:, None]
    Y = Fc * np.sqrt(bkm_kernel_matrix(p))
    m = basis.size
    G = np.real(Y.reshape(m, -1) @ Y.reshape(m, -1).conj().T)
    G = 0.5 * (G + G.T)

    return ExpFamilyPoint(
        theta=_readonly(theta.copy()),
        basis=basis,
        generator=_readonly(K),
        psi=psi,
        rho=_readonly(rho),
        mu=_readonly(mu),
        metric=_readonly(G),
        eigvals=_readonly(p),
        eigvecs=_readonly(U),
    )


def state_from_params(theta, basis: OperatorBasis) -> np.ndarray:
    """rho(theta) = exp(K(theta) - psi I)."""
    return make_point(theta, basis).rho


def params_from_state(rho, basis: OperatorBasis) -> np.ndarray:
    """Invert the chart: theta_a = tr(F_a log rho).

    The state must be comfortably full rank (smallest eigenvalue above
    1e-12); rank-deficient input is rejected rather than clipped.
    """
    rho = require_hermitian(rho, name="density matrix")
    w, U = hermitian_eig(rho)
    if w[0] <= CHART_EIG_FLOOR:
        raise BoundaryStateError(
            f"state eigenvalue {w[0]:.3e} at or below {CHART_EIG_FLOOR}; chart inversion rejected"
        )
    L = (U * np.log(w)) @ U.conj().T
    return np.real(np.einsum("aij,ji->a", basis.stack, L))


def mean_params(point: ExpFamilyPoint) -> np.ndarray:
    """mu_a = tr(rho F_a) = d psi / d theta_a."""
    return point.mu


def bkm_metric(point: ExpFamilyPoint) -> np.ndarray:
    """BKM metric G_ab = Hessian of psi at theta; symmetric positive definite."""
    return point.metric


def entropy_and_gradient(point: ExpFamilyPoint) -> tuple[float, np.ndarray]:
    """Entropy H(theta) = psi - theta . mu and its exact gradient -G theta."""
    return point.entropy, -point.metric @ point.theta


def state_derivatives(point: ExpFamilyPoint) -> np.ndarray:
    """Stack of partial derivatives d rho / d theta_b, shape (m, d, d).

    Each derivative is the directional derivative of exp at K - psi I along
    F_b - mu_b I, evaluated in the eigenbasis of rho via the divided
    difference kernel of exp (equal to the BKM kernel on the spectrum).
    """
    U = point.eigvecs
    p = point.eigvals
    d = point.dim
    idx = np.arange(d)
    Ft = np.einsum("ji,ajk,kl->ail", U.conj(), point.basis.stack, U)
    Fc = Ft.copy()
    Fc[:, idx, idx] -= point.mu[:, None]
    phi = exp_divided_difference(np.log(p))
    D = U[None, :, :] @ (Fc * phi) @ U.conj().T[None, :, :]
    return 0.5 * (D + D.conj().transpose(0, 2, 1))
