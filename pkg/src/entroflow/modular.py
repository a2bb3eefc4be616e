"""Modular generators of marginals and Gibbs-family diagnostics.

The modular generator of a full-rank marginal is K_i = -log rho_i, so the
marginal entropy is its own expectation value, h(rho_i) = tr(rho_i K_i),
and the constraint functional equals the total modular energy.  Note the
sign relative to the family chart: the family generator K(theta) satisfies
-log rho = psi I - K(theta).

A marginal is "Gibbs-locked" to a local Hamiltonian when K_i matches
beta H + const; the residual after fitting beta measures how far the actual
marginal is from that thermal form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import BoundaryStateError
from .operators import as_shape, hermitian_eig, partial_trace, require_hermitian
from .states import marginal_entropies, state_log

FULL_RANK_FLOOR = 1e-12
GENERATOR_TRIVIAL_TOL = 1e-12
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def modular_hamiltonian(rho_i) -> np.ndarray:
    """K_i = -log rho_i for a full-rank marginal."""
    rho_i = require_hermitian(rho_i, name="marginal")
    w = np.linalg.eigvalsh(rho_i)
    if w[0] <= FULL_RANK_FLOOR:
        raise BoundaryStateError(
            f"marginal eigenvalue {w[0]:.3e} at or below {FULL_RANK_FLOOR}; "
            "modular generator undefined"
        )
    return -state_log(rho_i)


def modular_energy_sum(rho, shape) -> float:
    """sum_i tr(rho_i K_i); equal to the marginal entropy sum."""
    shape = as_shape(shape)
    total = 0.0
    for i in range(shape.n_subsystems):
        rho_i = partial_trace(rho, shape, i)
        total += float(np.real(np.trace(rho_i @ modular_hamiltonian(rho_i))))
    return total


@dataclass(frozen=True)
class GibbsFamily:
    """One-parameter thermal family exp(-beta H) / Z along a fixed generator."""

    generator: np.ndarray
    beta: float
    partition: float

    @property
    def state(self) -> np.ndarray:
        w, U = hermitian_eig(self.generator)
        p = np.exp(-self.beta * w - np.log(self.partition))
        rho = (U * p) @ U.conj().T
        return 0.5 * (rho + rho.conj().T)


def gibbs_family(generator, beta: float) -> GibbsFamily:
    generator = require_hermitian(generator, name="generator")
    w = np.linalg.eigvalsh(generator)
    Z = float(np.exp(logsumexp(-beta * w)))
    return GibbsFamily(generator=generator, beta=float(beta), partition=Z)


def gibbs_entropy_derivative(family: GibbsFamily) -> float:
    """d h / d beta = -beta var(H) along the thermal family.

    Zero exactly at beta = 0 (any generator leaves h stationary at the
    maximally mixed state) and nonpositive for beta >= 0.
    """
    rho = family.state
    H = family.generator
    mean = float(np.real(np.trace(rho @ H)))
    second = float(np.real(np.trace(rho @ H @ H)))
    return -family.beta * (second - mean * mean)


def _traceless(X: np.ndarray) -> np.ndarray:
    d = X.shape[0]
    return X - (np.trace(X) / d) * np.eye(d, dtype=X.dtype)


def gibbs_lock_residual(rho_i, H_local) -> tuple[float, float]:
    """Best thermal match of a marginal to a local generator.

    Minimises |K_i - beta H - c(beta) I|_F over beta (the identity component
    is projected out, which fixes c).  Returns (beta_star, residual); the
    residual is zero iff the marginal is exactly Gibbs with respect to
    H_local.  The search brackets the minimum by doubling and refines it by
    golden-section.
    """
    H_local = require_hermitian(H_local, name="local generator")
    T = _traceless(H_local)
    t_norm = float(np.linalg.norm(T))
    if t_norm < GENERATOR_TRIVIAL_TOL:
        raise ValueError("local generator is a multiple of the identity; beta is unidentifiable")
    K = _traceless(modular_hamiltonian(rho_i))

    def objective(beta: float) -> float:
        diff = K - beta * T
        return float(np.real(np.vdot(diff, diff)))

    lo, hi = -1.0, 1.0
    f_lo, f_hi = objective(lo), objective(hi)
    f_mid = objective(0.0)
    for _ in range(200):
        if f_mid <= f_lo and f_mid <= f_hi:
            break
        if f_lo < f_hi:
            lo, hi = 2.0 * lo, hi
            f_lo = objective(lo)
        else:
            lo, hi = lo, 2.0 * hi
            f_hi = objective(hi)
        f_mid = objective(0.5 * (lo + hi))

    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = objective(x1), objective(x2)
    while b - a > 1e-10 * max(1.0, abs(a), abs(b)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = objective(x2)
    beta_star = 0.5 * (a + b)
    return beta_star, float(np.sqrt(objective(beta_star)))


def confined_regime_check(rho, shape, tol: float = 1e-8) -> bool:
    """True when every modular generator is within tol of (log d_i) I."""
    shape = as_shape(shape)
    for i in range(shape.n_subsystems):
        K_i = modular_hamiltonian(partial_trace(rho, shape, i))
        target = np.log(shape.dims[i]) * np.eye(shape.dims[i])
        if np.max(np.abs(K_i - target)) > tol:
            return False
    return True


def total_modular_consistency(rho, shape) -> float:
    """|modular energy sum - marginal entropy sum|, an exact-identity gauge."""
    shape = as_shape(shape)
    return abs(modular_energy_sum(rho, shape) - float(marginal_entropies(rho, shape).sum()))
