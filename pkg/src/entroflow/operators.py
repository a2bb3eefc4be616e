"""Hermitian operator algebra on multipartite systems.

Tensor products, partial traces, spectral matrix functions, directional
derivatives of the matrix exponential, and orthonormal traceless operator
bases.  Operators are plain complex numpy arrays; subsystem 0 is always the
slowest-varying Kronecker factor.
"""

from __future__ import annotations

import functools
import itertools
import string
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedShapeError

HERMITICITY_TOL = 1e-12
TRACELESS_TOL = 1e-12
ORTHONORMALITY_TOL = 1e-10
# Relative eigenvalue spacing below which divided differences switch to the
# series-stable form.
DEGENERACY_REL_TOL = 1e-12

_LETTERS = string.ascii_lowercase


@dataclass(frozen=True)
class SubsystemShape:
    """Local dimensions of a multipartite system; their product is the total."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0:
            raise UnsupportedShapeError("shape needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise UnsupportedShapeError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)


def as_shape(shape) -> SubsystemShape:
    """Coerce a dims sequence (or SubsystemShape) to a SubsystemShape."""
    if isinstance(shape, SubsystemShape):
        return shape
    return SubsystemShape(tuple(shape))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def hermiticity_defect(A) -> float:
    A = np.asarray(A)
    return float(np.max(np.abs(A - A.conj().T)))


def is_hermitian(A, tol: float = HERMITICITY_TOL) -> bool:
    return hermiticity_defect(A) <= tol


def require_hermitian(A, tol: float = HERMITICITY_TOL, name: str = "operator") -> np.ndarray:
    """Validate hermiticity entrywise and return the symmetrised copy."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    defect = hermiticity_defect(A)
    if defect > tol:
        raise ValueError(f"{name} is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return 0.5 * (A + A.conj().T)


def tensor_product(A, B) -> np.ndarray:
    """Kronecker product with the first factor slowest-varying."""
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def embed_local(op, index: int, shape) -> np.ndarray:
    """Embed a single-subsystem operator as I x .. x op x .. x I."""
    shape = as_shape(shape)
    op = np.asarray(op, dtype=complex)
    if not 0 <= index < shape.n_subsystems:
        raise ValueError(f"subsystem index {index} out of range for {shape.dims}")
    if op.shape != (shape.dims[index], shape.dims[index]):
        raise ValueError(
            f"operator shape {op.shape} does not match subsystem {index} "
            f"dimension {shape.dims[index]}"
        )
    out = np.eye(1, dtype=complex)
    for i, d in enumerate(shape.dims):
        out = np.kron(out, op if i == index else np.eye(d, dtype=complex))
    return out


def _ptrace_subscripts(n: int, keep: int, batched: bool) -> str:
    row = list(_LETTERS[:n])
    col = list(row)
    kept_col = _LETTERS[n]
    col[keep] = kept_col
    prefix = "z" if batched else ""
    lhs = prefix + "".join(row) + "".join(col)
    rhs = prefix + row[keep] + kept_col
    return f"{lhs}->{rhs}"


def partial_trace(rho, shape, keep: int) -> np.ndarray:
    """Reduced operator on subsystem ``keep``, tracing out all others.

    Works for any square operator and any number of subsystems; ``keep`` is
    an index into ``shape.dims``.
    """
    shape = as_shape(shape)
    n = shape.n_subsystems
    if not 0 <= keep < n:
        raise ValueError(f"keep={keep} out of range for {shape.dims}")
    rho = np.asarray(rho, dtype=complex)
    d = shape.total_dim
    if rho.shape != (d, d):
        raise ValueError(f"operator shape {rho.shape} does not match total dim {d}")
    if n == 1:
        return rho.copy()
    resh = rho.reshape(shape.dims + shape.dims)
    return np.einsum(_ptrace_subscripts(n, keep, batched=False), resh)


def partial_trace_stack(ops, shape, keep: int) -> np.ndarray:
    """Partial trace applied along the first axis of a stack of operators."""
    shape = as_shape(shape)
    n = shape.n_subsystems
    ops = np.asarray(ops, dtype=complex)
    m = ops.shape[0]
    if n == 1:
        return ops.copy()
    resh = ops.reshape((m,) + shape.dims + shape.dims)
    return np.einsum(_ptrace_subscripts(n, keep, batched=True), resh)


def hermitian_eig(A):
    """Eigendecomposition of (A + A^dag)/2, eigenvalues ascending."""
    A = np.asarray(A, dtype=complex)
    return np.linalg.eigh(0.5 * (A + A.conj().T))


def matrix_function(A, f, *, positive: bool = False) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    A : array_like
        Hermitian matrix.
    f : callable
        Vectorised scalar function applied to the eigenvalues.
    positive : bool
        When True the spectrum must be strictly positive; violations raise
        :class:`DomainError`.
    """
    w, U = hermitian_eig(A)
    if positive and w[0] <= 0.0:
        raise DomainError(f"matrix function needs a positive spectrum, min eigenvalue {w[0]:.3e}")
    fw = np.asarray(f(w), dtype=float)
    out = (U * fw) @ U.conj().T
    return 0.5 * (out + out.conj().T)


def matrix_exp(A) -> np.ndarray:
    return matrix_function(A, np.exp)


def matrix_log(A) -> np.ndarray:
    return matrix_function(A, np.log, positive=True)


def matrix_power(A, exponent: float) -> np.ndarray:
    needs_pd = not float(exponent).is_integer()
    return matrix_function(A, lambda w: w ** exponent, positive=needs_pd)


def exp_divided_difference(w) -> np.ndarray:
    """First divided differences of exp over a real spectrum.

    Entry (j, k) is (e^{w_j} - e^{w_k}) / (w_j - w_k); nearly coincident
    pairs use e^{(w_j+w_k)/2} * sinh(delta/2) / (delta/2) with limit value 1
    for the ratio at delta = 0.
    """
    w = np.asarray(w, dtype=float)
    delta = w[:, None] - w[None, :]
    scale = np.maximum(1.0, np.maximum(np.abs(w)[:, None], np.abs(w)[None, :]))
    near = np.abs(delta) < DEGENERACY_REL_TOL * scale

    half = 0.5 * delta
    ratio = np.ones_like(delta)
    nz = half != 0.0
    ratio[nz] = np.sinh(half[nz]) / half[nz]
    stable = np.exp(0.5 * (w[:, None] + w[None, :])) * ratio

    ew = np.exp(w)
    direct = np.zeros_like(delta)
    np.divide(ew[:, None] - ew[None, :], delta, out=direct, where=~near)
    return np.where(near, stable, direct)


def frechet_exp(A, E) -> np.ndarray:
    """Directional derivative of the matrix exponential at Hermitian A.

    Returns d/ds exp(A + s E) at s = 0.  A must be Hermitian; E may be any
    complex matrix (the derivative is linear in E).
    """
    w, U = hermitian_eig(A)
    Et = U.conj().T @ np.asarray(E, dtype=complex) @ U
    return U @ (Et * exp_divided_difference(w)) @ U.conj().T


def commutator(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    return A @ B - B @ A


def hermitian_vec(X) -> np.ndarray:
    """Real coordinates of a Hermitian matrix preserving the Frobenius norm.

    Layout: the d real diagonal entries, then sqrt(2) * Re of the strict
    upper triangle, then sqrt(2) * Im of the strict upper triangle.  Applies
    along the last two axes, so stacks of matrices are handled batchwise.
    """
    X = np.asarray(X, dtype=complex)
    d = X.shape[-1]
    iu, ju = np.triu_indices(d, k=1)
    idx = np.arange(d)
    diag = np.real(X[..., idx, idx])
    upper = X[..., iu, ju]
    root2 = np.sqrt(2.0)
    return np.concatenate(
        [diag, root2 * np.real(upper), root2 * np.imag(upper)], axis=-1
    )


def gell_mann_basis(d: int) -> list[np.ndarray]:
    """Generalised Gell-Mann matrices for one factor, tr(F_a F_b) = delta_ab.

    Ordering: symmetric off-diagonal pairs (j<k), antisymmetric pairs (j<k),
    then the d-1 diagonal elements.
    """
    if d < 2:
        raise UnsupportedShapeError(f"need local dimension >= 2, got {d}")
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0 / np.sqrt(2.0)
            out.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j / np.sqrt(2.0)
            m[k, j] = 1j / np.sqrt(2.0)
            out.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -float(l)
        out.append(m / np.sqrt(l * (l + 1)))
    return out


@dataclass(frozen=True)
class OperatorBasis:
    """Orthonormal set of traceless Hermitian operators with sector tags.

    ``stack`` has shape (m, d, d).  ``sector_labels[a]`` is "local:i" when
    element a acts nontrivially on subsystem i alone, otherwise "corr:..."
    listing the supporting subsystems.
    """

    shape: SubsystemShape
    stack: np.ndarray
    sector_labels: tuple[str, ...]

    def __post_init__(self):
        stack = np.asarray(self.stack, dtype=complex)
        d = self.shape.total_dim
        if stack.ndim != 3 or stack.shape[1:] != (d, d):
            raise ValueError(f"basis stack shape {stack.shape} does not match dim {d}")
        if len(self.sector_labels) != stack.shape[0]:
            raise ValueError("sector_labels length must match the number of elements")
        herm = np.max(np.abs(stack - stack.conj().transpose(0, 2, 1)))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"basis elements must be Hermitian (defect {herm:.3e})")
        traces = np.abs(np.trace(stack, axis1=1, axis2=2))
        if traces.max() > TRACELESS_TOL:
            raise ValueError(f"basis elements must be traceless (max |tr| {traces.max():.3e})")
        m = stack.shape[0]
        flat = stack.reshape(m, -1)
        gram = np.real(flat @ flat.conj().T)
        defect = np.max(np.abs(gram - np.eye(m)))
        if defect > ORTHONORMALITY_TOL:
            raise ValueError(f"basis is not orthonormal (Gram defect {defect:.3e})")
        object.__setattr__(self, "stack", _readonly(stack))
        object.__setattr__(self, "sector_labels", tuple(self.sector_labels))

    @property
    def size(self) -> int:
        return self.stack.shape[0]

    @property
    def elements(self) -> tuple[np.ndarray, ...]:
        return tuple(self.stack[a] for a in range(self.size))

    def local_indices(self, subsystem: int | None = None) -> np.ndarray:
        if subsystem is None:
            mask = [lbl.startswith("local:") for lbl in self.sector_labels]
        else:
            mask = [lbl == f"local:{subsystem}" for lbl in self.sector_labels]
        return np.flatnonzero(mask)

    def correlation_indices(self) -> np.ndarray:
        return np.flatnonzero([lbl.startswith("corr") for lbl in self.sector_labels])


@functools.lru_cache(maxsize=None)
def product_basis(shape) -> OperatorBasis:
    """Full traceless orthonormal product basis for a multipartite shape.

    Elements are tensor products of local Gell-Mann matrices on a support
    set S and normalised identities I/sqrt(d_i) elsewhere.  Singleton
    supports give the local sectors; larger supports the correlation
    sector.  For a single subsystem this is just the Gell-Mann basis.
    """
    shape = as_shape(shape)
    n = shape.n_subsystems
    local = [gell_mann_basis(d) for d in shape.dims]
    idents = [np.eye(d, dtype=complex) / np.sqrt(d) for d in shape.dims]

    supports: list[tuple[int, ...]] = [(i,) for i in range(n)]
    for size in range(2, n + 1):
        supports.extend(itertools.combinations(range(n), size))

    elements = []
    labels = []
    for support in supports:
        label = (
            f"local:{support[0]}"
            if len(support) == 1
            else "corr:" + ",".join(str(i) for i in support)
        )
        choices = [range(len(local[i])) for i in support]
        for combo in itertools.product(*choices):
            picks = dict(zip(support, combo))
            op = np.eye(1, dtype=complex)
            for i in range(n):
                factor = local[i][picks[i]] if i in picks else idents[i]
                op = np.kron(op, factor)
            elements.append(op)
            labels.append(label)
    stack = np.stack(elements)
    return OperatorBasis(shape=shape, stack=stack, sector_labels=tuple(labels))
