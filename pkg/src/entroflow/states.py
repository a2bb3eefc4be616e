"""Density matrices, von Neumann entropy, and reference states.

The reference family here is the bipartite maximally entangled pure state
with maximally mixed marginals, together with its full-rank regularisation
by mixing with the maximally mixed state (which leaves every marginal
exactly maximally mixed).
"""

from __future__ import annotations

import numpy as np

from .errors import BoundaryStateError, UnsupportedShapeError
from .operators import as_shape, hermitian_eig, matrix_log, partial_trace, require_hermitian

TRACE_TOL = 1e-12
# Spectrum floor: eigenvalues in [EIG_CLIP_FLOOR, 0) are treated as exact
# zeros; anything below is an invariant violation, not round-off.
EIG_CLIP_FLOOR = -1e-10
FULL_RANK_FLOOR = 1e-12


def check_density_matrix(rho, shape=None) -> np.ndarray:
    """Validate hermiticity, unit trace and positivity; return the spectrum."""
    rho = require_hermitian(rho, name="density matrix")
    if shape is not None:
        d = as_shape(shape).total_dim
        if rho.shape != (d, d):
            raise ValueError(f"state dimension {rho.shape[0]} does not match shape total {d}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"density matrix trace {tr!r} is not 1")
    w = np.linalg.eigvalsh(rho)
    if w[0] < EIG_CLIP_FLOOR:
        raise ValueError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    return w


def entropy_of_spectrum(w) -> float:
    """Shannon entropy of an eigenvalue vector in nats, with 0 log 0 = 0."""
    w = np.asarray(w, dtype=float)
    if w.min() < EIG_CLIP_FLOOR:
        raise ValueError(f"eigenvalue {w.min():.3e} below the round-off floor {EIG_CLIP_FLOOR}")
    w = np.clip(w, 0.0, None)
    nz = w > 0.0
    return float(-(w[nz] * np.log(w[nz])).sum())


def von_neumann_entropy(rho) -> float:
    """Entropy -tr(rho log rho) in nats of a density matrix."""
    rho = require_hermitian(rho, name="density matrix")
    return entropy_of_spectrum(np.linalg.eigvalsh(rho))


def purity(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


def lme_origin(shape) -> np.ndarray:
    """Pure state |Phi><Phi| with Phi = sum_j |jj> / sqrt(q).

    Defined for bipartite shapes with equal local dimensions q; both
    marginals are exactly I/q.  Other layouts raise UnsupportedShapeError.
    """
    shape = as_shape(shape)
    if shape.n_subsystems != 2 or shape.dims[0] != shape.dims[1]:
        raise UnsupportedShapeError(
            f"maximally entangled origin needs a bipartite equal-dimension shape, got {shape.dims}"
        )
    q = shape.dims[0]
    psi = np.zeros(q * q, dtype=complex)
    psi[np.arange(q) * q + np.arange(q)] = 1.0 / np.sqrt(q)
    return np.outer(psi, psi.conj())


def regularized_origin(shape, eps: float) -> np.ndarray:
    """(1 - eps) * origin + eps * I/d: full rank, marginals still I/q exactly."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    rho = lme_origin(shape)
    d = rho.shape[0]
    return (1.0 - eps) * rho + eps * np.eye(d, dtype=complex) / d


def marginal_entropies(rho, shape) -> np.ndarray:
    """Vector of subsystem entropies h(rho_i) in nats."""
    shape = as_shape(shape)
    return np.array(
        [von_neumann_entropy(partial_trace(rho, shape, i)) for i in range(shape.n_subsystems)]
    )


def multi_information(rho, shape) -> float:
    """Total correlation sum_i h(rho_i) - H(rho); zero iff a product state."""
    shape = as_shape(shape)
    return float(marginal_entropies(rho, shape).sum() - von_neumann_entropy(rho))


def gibbs_state(H, beta: float) -> np.ndarray:
    """exp(-beta H) / Z for Hermitian H, computed through the spectrum."""
    w, U = hermitian_eig(require_hermitian(H, name="generator"))
    x = -beta * w
    x -= x.max()
    p = np.exp(x)
    p /= p.sum()
    rho = (U * p) @ U.conj().T
    return 0.5 * (rho + rho.conj().T)


def state_log(rho) -> np.ndarray:
    """Matrix log of a full-rank density matrix; near-singular input is rejected."""
    rho = require_hermitian(rho, name="density matrix")
    w = np.linalg.eigvalsh(rho)
    if w[0] <= FULL_RANK_FLOOR:
        raise BoundaryStateError(
            f"state eigenvalue {w[0]:.3e} at or below the full-rank floor {FULL_RANK_FLOOR}"
        )
    return matrix_log(rho)


def random_hermitian(d: int, rng, scale: float = 1.0) -> np.ndarray:
    """GUE-like random Hermitian matrix with entry scale ``scale``."""
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2.0


def random_density_matrix(d: int, rng, mix: float = 0.0) -> np.ndarray:
    """Ginibre-induced random state, optionally mixed toward I/d for conditioning."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    w = g @ g.conj().T
    w /= np.trace(w).real
    if mix:
        w = (1.0 - mix) * w + mix * np.eye(d) / d
    return 0.5 * (w + w.conj().T)
