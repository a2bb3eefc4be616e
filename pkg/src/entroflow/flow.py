"""Constrained entropy-ascent flows in natural parameters.

The dissipative field is the metric projection of the entropy gradient onto
the marginal-preserving tangent space: theta' = -P theta, whose entropy
production rate is theta^T G P theta >= 0.  Reparametrising so entropy grows
at a constant rate c ("entropy time") divides the field by the production
rate.  A reversible sector generated by a local Hermitian xi adds the
pushforward of -i[xi, rho], which changes neither the entropy nor any
marginal spectrum.

Integration uses an embedded Dormand-Prince 4(5) pair with per-stage
recomputation of the point and its constraint geometry.  Conserved-quantity
drift is monitored, never corrected: exceeding the budget aborts the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraint import ConstraintGeometry, constraint_geometry
from .errors import (
    BoundaryStateError,
    ConservationError,
    NonLocalGeneratorError,
    StationaryPointError,
    StiffRegionError,
)
from .expfamily import ExpFamilyPoint, make_point
from .operators import OperatorBasis, as_shape, commutator, embed_local, require_hermitian
from .states import marginal_entropies

LOCALITY_TOL = 1e-10
DEFAULT_RATE_MIN = 1e-10

# Dormand-Prince 4(5) tableau; the last row doubles as the 5th-order weights
# (FSAL: stage 7 is the derivative at the accepted point).
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_ERR = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@dataclass(frozen=True)
class FlowConfig:
    """Run parameters for the flows.

    ``xi_parts`` lists (subsystem index, Hermitian block) pairs defining the
    local reversible generator xi = sum_i xi_i (x) I.  ``reversible_rate``
    multiplies the reversible sector relative to the dissipative one; values
    other than 1.0 are experimental.
    """

    c: float = 1.0
    rate_min: float = DEFAULT_RATE_MIN
    initial_step: float = 0.01
    atol: float = 1e-8
    rtol: float = 1e-8
    max_steps: int = 100_000
    conservation_tol: float = 1e-6
    stop_at_stationary: bool = True
    reversible_rate: float = 1.0
    xi_parts: tuple = ()

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.rate_min <= 0:
            raise ValueError(f"rate_min must be positive, got {self.rate_min}")


def assemble_local_generator(shape, parts) -> np.ndarray:
    """Build xi = sum_i xi_i (x) I_rest from (subsystem, block) pairs."""
    shape = as_shape(shape)
    d = shape.total_dim
    xi = np.zeros((d, d), dtype=complex)
    for index, block in parts:
        block = require_hermitian(block, name=f"xi block for subsystem {index}")
        xi += embed_local(block, index, shape)
    return xi


def dissipative_velocity(point: ExpFamilyPoint, geometry: ConstraintGeometry) -> np.ndarray:
    """Projected steepest-entropy-ascent field v = -P theta (game time)."""
    return -(geometry.projector @ point.theta)


def entropy_production_rate(point: ExpFamilyPoint, geometry: ConstraintGeometry) -> float:
    """dH/dtau along the projected field: theta^T G P theta >= 0."""
    theta = point.theta
    return float(theta @ point.metric @ (geometry.projector @ theta))


def entropy_time_velocity(
    point: ExpFamilyPoint,
    geometry: ConstraintGeometry,
    c: float = 1.0,
    rate_min: float = DEFAULT_RATE_MIN,
) -> np.ndarray:
    """Field rescaled so that dH/dt = c exactly.

    Raises StationaryPointError when the production rate is at or below
    ``rate_min``: entropy time is not a valid clock at a stationary point.
    """
    rate = entropy_production_rate(point, geometry)
    if rate <= rate_min:
        raise StationaryPointError(
            f"entropy production rate {rate:.3e} at or below rate_min {rate_min:.1e}"
        )
    return (c / rate) * dissipative_velocity(point, geometry)


def _locality_defect(point: ExpFamilyPoint, xi: np.ndarray) -> float:
    basis = point.basis
    d = point.dim
    local = basis.local_indices()
    coeffs = np.real(np.einsum("aij,ji->a", basis.stack[local], xi))
    xi_local = np.einsum("a,aij->ij", coeffs, basis.stack[local])
    xi_local += (np.trace(xi) / d) * np.eye(d)
    return float(np.linalg.norm(xi - xi_local))


def reversible_velocity(point: ExpFamilyPoint, xi) -> np.ndarray:
    """Pushforward of the unitary flow d rho = -i [xi, rho] to natural params.

    xi must be local (a sum of single-subsystem terms, identity shifts
    allowed); anything else is rejected with NonLocalGeneratorError.  The
    returned velocity solves G dtheta = w with w_a = tr(-i [xi, rho] F_a),
    conserves the entropy exactly, and conserves every marginal spectrum.
    """
    xi = require_hermitian(xi, name="reversible generator")
    if xi.shape != point.rho.shape:
        raise ValueError(f"generator shape {xi.shape} does not match state {point.rho.shape}")
    defect = _locality_defect(point, xi)
    if defect > LOCALITY_TOL * max(1.0, float(np.linalg.norm(xi))):
        raise NonLocalGeneratorError(
            f"generator has a correlation-sector component of norm {defect:.3e}"
        )
    drho = -1j * commutator(xi, point.rho)
    w = np.real(np.einsum("aij,ji->a", point.basis.stack, drho))
    return np.linalg.solve(point.metric, w)


def combined_velocity(
    point: ExpFamilyPoint, geometry: ConstraintGeometry, config: FlowConfig
) -> np.ndarray:
    """Combined reversible + dissipative field in entropy time.

    dtheta/dt = (c / rate) (-P theta + ad_xi theta); the reversible term
    contributes nothing to dH/dt, which stays exactly c.
    """
    rate = entropy_production_rate(point, geometry)
    if rate <= config.rate_min:
        raise StationaryPointError(
            f"entropy production rate {rate:.3e} at or below rate_min {config.rate_min:.1e}"
        )
    v = dissipative_velocity(point, geometry)
    if config.xi_parts:
        xi = assemble_local_generator(point.basis.shape, config.xi_parts)
        v = v + config.reversible_rate * reversible_velocity(point, xi)
    return (config.c / rate) * v


@dataclass
class Trajectory:
    """Diagnostics sampled at the accepted steps of one integration run."""

    clock: str
    kind: str
    dims: tuple
    status: str
    step: np.ndarray
    tau: np.ndarray
    t: np.ndarray
    H: np.ndarray
    C: np.ndarray
    marginals: np.ndarray
    rate: np.ndarray
    theta_norm: np.ndarray
    theta: np.ndarray

    @property
    def n_samples(self) -> int:
        return len(self.step)

    def summary(self) -> dict:
        slope = None
        if self.n_samples >= 2 and float(np.ptp(self.t)) > 0.0:
            slope = float(np.polyfit(self.t, self.H, 1)[0])
        return {
            "H_initial": float(self.H[0]),
            "H_final": float(self.H[-1]),
            "C_drift_max": float(np.max(np.abs(self.C - self.C[0]))),
            "slope_of_H_vs_t": slope,
            "termination_status": self.status,
        }

    def write_csv(self, path, *, bits: bool = False) -> None:
        """Write the per-sample table; --bits rescales entropic columns only."""
        conv = 1.0 / math.log(2.0) if bits else 1.0
        nsub = self.marginals.shape[1]
        header = ["step", "tau", "t", "H", "C"]
        header += [f"h_{i}" for i in range(nsub)]
        header += ["rate", "theta_norm", "status"]
        lines = [",".join(header)]
        last = self.n_samples - 1
        for k in range(self.n_samples):
            vals = [str(int(self.step[k]))]
            floats = [self.tau[k], self.t[k], conv * self.H[k], conv * self.C[k]]
            floats += [conv * self.marginals[k, i] for i in range(nsub)]
            floats += [conv * self.rate[k], self.theta_norm[k]]
            vals += [f"{x:.17g}" for x in floats]
            vals.append(self.status if k == last else "ok")
            lines.append(",".join(vals))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def theta_records(self) -> dict:
        return {
            "clock": self.clock,
            "kind": self.kind,
            "dims": list(self.dims),
            "status": self.status,
            "samples": [
                {
                    "step": int(self.step[k]),
                    "tau": float(self.tau[k]),
                    "t": float(self.t[k]),
                    "theta": [float(x) for x in self.theta[k]],
                }
                for k in range(self.n_samples)
            ],
        }


def entropy_time_fit(traj: Trajectory) -> tuple[float, float, float]:
    """Least-squares line H = slope * t + intercept and its R^2."""
    t = traj.t
    H = traj.H
    slope, intercept = np.polyfit(t, H, 1)
    resid = H - (slope * t + intercept)
    ss_res = float(resid @ resid)
    centred = H - H.mean()
    ss_tot = float(centred @ centred)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return float(slope), float(intercept), r2


class _Recorder:
    def __init__(self):
        self.rows = {
            "step": [], "tau": [], "t": [], "H": [], "C": [],
            "marg": [], "rate": [], "norm": [], "theta": [],
        }

    def add(self, step, tau, t, H, C, marg, rate, theta):
        r = self.rows
        r["step"].append(step)
        r["tau"].append(tau)
        r["t"].append(t)
        r["H"].append(H)
        r["C"].append(C)
        r["marg"].append(marg)
        r["rate"].append(rate)
        r["norm"].append(float(np.linalg.norm(theta)))
        r["theta"].append(np.array(theta))

    def build(self, clock, kind, dims, status) -> Trajectory:
        r = self.rows
        return Trajectory(
            clock=clock,
            kind=kind,
            dims=tuple(dims),
            status=status,
            step=np.array(r["step"], dtype=int),
            tau=np.array(r["tau"]),
            t=np.array(r["t"]),
            H=np.array(r["H"]),
            C=np.array(r["C"]),
            marginals=np.array(r["marg"]),
            rate=np.array(r["rate"]),
            theta_norm=np.array(r["norm"]),
            theta=np.array(r["theta"]),
        )


def integrate(
    theta0,
    basis: OperatorBasis,
    config: FlowConfig,
    *,
    clock: str = "entropy",
    duration: float,
    kind: str = "dissipative",
) -> Trajectory:
    """Integrate one flow with adaptive Dormand-Prince 4(5) stepping.

    Parameters
    ----------
    theta0 : array_like
        Initial natural parameters.
    basis : OperatorBasis
        Chart basis; its shape fixes the marginal constraint set.
    config : FlowConfig
        Tolerances, entropy speed c, stationarity threshold, generator.
    clock : {"entropy", "game"}
        Independent variable: entropy time t (dH/dt = c) or game time tau.
    duration : float
        Upper limit of the chosen clock.
    kind : {"dissipative", "combined", "reversible"}
        Sector content.  "combined" and "reversible" need ``config.xi_parts``;
        "reversible" runs only under the game clock (it produces no entropy).

    Returns
    -------
    Trajectory
        Samples at every accepted step, both clocks tracked (the inactive
        clock is reconstructed from the entropy production so that
        t = (H - H_0)/c along any run).

    Notes
    -----
    Entropy-clock runs stop with status "stationary" once the production
    rate falls below ``config.rate_min`` (so do game-clock runs containing
    the dissipative sector, when ``config.stop_at_stationary`` is set).
    Conserved-marginal drift beyond ``config.conservation_tol`` raises
    ConservationError; step-size underflow away from a stationary point
    raises StiffRegionError.  Both carry the partial trajectory.
    """
    if clock not in ("entropy", "game"):
        raise ValueError(f"unknown clock {clock!r}")
    if kind not in ("dissipative", "combined", "reversible"):
        raise ValueError(f"unknown kind {kind!r}")
    if kind in ("combined", "reversible") and not config.xi_parts:
        raise ValueError(f"kind {kind!r} needs config.xi_parts")
    if kind == "reversible" and clock == "entropy":
        raise ValueError("a reversible-only run produces no entropy; use the game clock")
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")

    shape = basis.shape
    xi = assemble_local_generator(shape, config.xi_parts) if config.xi_parts else None
    dissipative = kind in ("dissipative", "combined")
    reversible = kind in ("combined", "reversible") and xi is not None
    check_rate = dissipative and (clock == "entropy" or config.stop_at_stationary)

    def rhs(theta):
        point = make_point(theta, basis)
        geom = constraint_geometry(point)
        proj_theta = geom.projector @ theta
        rate = float(theta @ point.metric @ proj_theta)
        v = np.zeros_like(theta)
        if dissipative:
            v = -proj_theta
        if reversible:
            v = v + config.reversible_rate * reversible_velocity(point, xi)
        if clock == "game":
            dH = float(-(point.metric @ theta) @ v)
            f = np.concatenate([v, [dH / config.c]])
        else:
            if rate <= 0.0:
                raise StationaryPointError(f"entropy production rate {rate:.3e} is not positive")
            scale = config.c / rate
            f = np.concatenate([scale * v, [scale]])
        return f, point, geom, rate

    theta0 = np.asarray(theta0, dtype=float)
    m = basis.size
    y = np.concatenate([theta0, [0.0]])
    rec = _Recorder()

    def clocks(pos, aux):
        return (pos, aux) if clock == "game" else (aux, pos)

    def record(step_index, pos, aux, point, rate):
        tau, t = clocks(pos, aux)
        marg = marginal_entropies(point.rho, shape)
        rec.add(step_index, tau, t, point.entropy, float(marg.sum()), marg, rate, point.theta)
        return float(marg.sum())

    f1, point, geom, rate = rhs(theta0)
    C0 = record(0, 0.0, 0.0, point, rate)

    if check_rate and rate < config.rate_min:
        return rec.build(clock, kind, shape.dims, "stationary")

    pos = 0.0
    h = min(config.initial_step, duration)
    h_min = 1e-14 * max(1.0, abs(duration))
    status = "max_steps"
    steps = 0
    k = [None] * 7
    k[0] = f1

    while steps < config.max_steps:
        remaining = duration - pos
        if remaining <= h_min:
            status = "completed"
            break
        h = min(h, remaining)

        try:
            for s in range(1, 6):
                ys = y + h * sum(a * k[j] for j, a in enumerate(_DP_A[s]) if a != 0.0)
                k[s], _, _, _ = rhs(ys[:m])
            y_new = y + h * sum(a * k[j] for j, a in enumerate(_DP_A[6]) if a != 0.0)
            k6_new, new_point, new_geom, new_rate = rhs(y_new[:m])
            failed = False
        except (StationaryPointError, BoundaryStateError):
            failed = True

        if not failed:
            k[6] = k6_new
            err = h * sum(e * k[j] for j, e in enumerate(_DP_ERR) if e != 0.0)
            scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
            if not np.isfinite(err_norm):
                failed = True

        if failed or err_norm > 1.0:
            factor = 0.5 if failed else max(0.2, 0.9 * err_norm ** -0.2)
            h *= factor
            if h < h_min:
                if check_rate and rate < 10.0 * config.rate_min:
                    status = "stationary"
                    break
                raise StiffRegionError(
                    f"step size underflowed below {h_min:.1e}",
                    rec.build(clock, kind, shape.dims, "stiff"),
                )
            continue

        # Accepted step.
        steps += 1
        pos += h
        y = y_new
        point, geom, rate = new_point, new_geom, new_rate
        k[0] = k[6]
        C = record(steps, pos, float(y[m]), point, rate)
        if abs(C - C0) > config.conservation_tol:
            raise ConservationError(
                f"marginal-entropy drift {abs(C - C0):.3e} exceeds "
                f"{config.conservation_tol:.1e}",
                rec.build(clock, kind, shape.dims, "conservation"),
            )
        if check_rate and rate < config.rate_min:
            status = "stationary"
            break
        h *= min(5.0, max(0.2, 0.9 * max(err_norm, 1e-16) ** -0.2))

    return rec.build(clock, kind, shape.dims, status)
