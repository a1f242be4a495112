"""Fubini-Study geometry of normalized ITE trajectories.

The angle ``Theta(t) = arccos |<psi0|phi(t)>|`` is bounded by the path length
``L = int_0^T dH(t) dt``, which gives the runtime bound
``T >= Theta(T) / mean(dH)``. This module evaluates both sides, the slack
between them, and pointwise diagnostics for when the bound is tight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import simpson

from .errors import DegenerateTrajectory, DimensionMismatch, GridTooCoarse
from .qstate import StateVector, _require_unit

if TYPE_CHECKING:
    from .ite_engine import HamiltonianSchedule, Trajectory

SATURATION_RTOL = 1e-6
RESIDUAL_TOL = 1e-8
ANGLE_FLOOR = 1e-6
NORM_FLOOR = 1e-12
# Theta(T) below this counts as zero when the path length vanishes
ZERO_ANGLE = 1e-10


def angles(psi0: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Row-wise angle between ``psi0`` and each row of ``phis``.

    Evaluated as ``atan2(||phi - <psi0|phi> psi0||, |<psi0|phi>|)``. For unit
    vectors this equals ``arccos |<psi0|phi>|`` clamped to [0, 1], but keeps
    full relative precision near zero, where arccos loses half the digits.
    """
    phis = np.atleast_2d(phis)
    ov = phis @ psi0.conj()
    perp = np.linalg.norm(phis - ov[:, None] * psi0[None, :], axis=1)
    return np.arctan2(perp, np.abs(ov))


def angle(psi0: StateVector, phi: StateVector) -> float:
    """Angular distance ``Theta`` in [0, pi/2], blind to global phases."""
    if psi0.dimension != phi.dimension:
        raise DimensionMismatch(f"dimension mismatch: {psi0.dimension} vs {phi.dimension}")
    _require_unit(psi0)
    _require_unit(phi)
    return float(angles(psi0.amplitudes, phi.amplitudes)[0])


def _check_grid(traj: "Trajectory") -> None:
    m = len(traj.times)
    if m < 3:
        raise GridTooCoarse(f"need at least 3 samples, got {m}")
    if (m - 1) % 2:
        raise GridTooCoarse(f"Simpson quadrature needs an even number of intervals, got {m - 1}")


def path_length(traj: "Trajectory") -> float:
    """Length of the normalized path, composite Simpson over ``dH(t_k)``."""
    _check_grid(traj)
    return max(0.0, float(simpson(traj.delta_hs, x=traj.times)))


@dataclass(frozen=True)
class QslReport:
    theta_T: float
    path_length: float
    avg_speed: float
    bound_time: float
    actual_time: float
    slack: float
    saturated: bool

    def as_dict(self) -> dict:
        return {
            "theta_T": self.theta_T,
            "path_length": self.path_length,
            "avg_speed": self.avg_speed,
            "bound_time": self.bound_time,
            "actual_time": self.actual_time,
            "slack": self.slack,
            "saturated": self.saturated,
        }


def qsl_report(traj: "Trajectory", saturation_rtol: float = SATURATION_RTOL) -> QslReport:
    """Evaluate the speed-limit bound on a trajectory.

    ``saturated`` is true when ``L - Theta(T) <= saturation_rtol * (1 + L)``.

    Raises:
        DegenerateTrajectory: zero path length but a nonzero final angle.
    """
    length = path_length(traj)
    theta_T = float(traj.thetas[-1])
    T = float(traj.horizon)
    avg = length / T
    if length > 0:
        bound = theta_T * T / length
    elif theta_T <= ZERO_ANGLE:
        bound = 0.0
    else:
        raise DegenerateTrajectory(f"path length is zero but Theta(T) = {theta_T:.3e}")
    slack = length - theta_T
    return QslReport(
        theta_T=theta_T,
        path_length=length,
        avg_speed=avg,
        bound_time=bound,
        actual_time=T,
        slack=slack,
        saturated=bool(slack <= saturation_rtol * (1.0 + length)),
    )


CHECKED = "checked"
SKIPPED = "skipped_near_zero_angle"


@dataclass(frozen=True, eq=False)
class SaturationCertificate:
    """Per-sample test of the tightness condition.

    At each checked sample the projected generator
    ``u = P(<H> - H) phi`` is compared with the unit geodesic direction
    ``w = P psi0 / ||P psi0||``, where ``P = I - |phi><phi|`` and ``phi`` is
    phase-fixed so that ``<psi0|phi> >= 0``. ``lambdas`` holds
    ``-Re<w|u>`` (NaN where skipped) and ``residuals`` holds
    ``||u + lambda w|| / max(||u||, floor)``.
    """

    times: np.ndarray
    residuals: np.ndarray
    lambdas: np.ndarray
    sin_thetas: np.ndarray
    checked: np.ndarray

    @property
    def records(self) -> list[tuple[float, float, float, float, str]]:
        return [
            (float(t), float(r), float(lam), float(s), CHECKED if c else SKIPPED)
            for t, r, lam, s, c in zip(self.times, self.residuals, self.lambdas,
                                       self.sin_thetas, self.checked)
        ]

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals[self.checked])) if self.checked.any() else 0.0

    @property
    def min_lambda(self) -> float:
        return float(np.min(self.lambdas[self.checked])) if self.checked.any() else math.nan

    @property
    def fraction_skipped(self) -> float:
        return float(1.0 - np.mean(self.checked))

    @property
    def negative_lambda(self) -> bool:
        """True if any checked sample has ``lambda < 0``."""
        return bool(np.any(self.lambdas[self.checked] < 0))

    def holds(self, tol: float = RESIDUAL_TOL) -> bool:
        return self.max_residual <= tol and not self.negative_lambda


def saturation_certificate(traj: "Trajectory", sched, angle_floor: float = ANGLE_FLOOR,
                           norm_floor: float = NORM_FLOOR) -> SaturationCertificate:
    """Check ``P(-H + <H>) phi = -lambda P psi0 / ||P psi0||`` sample by sample.

    ``sched`` is a :class:`HamiltonianSchedule` or a constant Hamiltonian.
    Samples with ``sin Theta < angle_floor`` (where the geodesic direction is
    undefined, notably ``t = 0``) are skipped rather than treated as errors.
    """
    from .ite_engine import as_schedule

    sched = as_schedule(sched)
    psi0 = traj.psi0.amplitudes
    if sched.dimension != psi0.size:
        raise DimensionMismatch(f"schedule dimension {sched.dimension} != state dimension {psi0.size}")
    n = len(traj.times)
    residuals = np.zeros(n)
    lambdas = np.full(n, np.nan)
    sins = np.zeros(n)
    checked = np.zeros(n, dtype=bool)
    for k, t in enumerate(traj.times):
        phi = traj.phis[k]
        ov = np.vdot(psi0, phi)
        if abs(ov) > 0:
            phi = phi * (ov.conjugate() / abs(ov))
        p_psi0 = psi0 - phi * np.vdot(phi, psi0)
        s = float(np.linalg.norm(p_psi0))
        sins[k] = s
        if s < angle_floor:
            continue
        h = sched.evaluate(float(t)).matrix
        hp = h @ phi
        gen = np.vdot(phi, hp).real * phi - hp
        u = gen - phi * np.vdot(phi, gen)
        w = p_psi0 / s
        lam = -np.vdot(w, u).real
        nu = float(np.linalg.norm(u))
        residuals[k] = float(np.linalg.norm(u + lam * w)) / max(nu, norm_floor)
        lambdas[k] = lam
        checked[k] = True
    return SaturationCertificate(np.array(traj.times), residuals, lambdas, sins, checked)


@dataclass(frozen=True, eq=False)
class RateCheck:
    """Finite-difference check of ``|dTheta/dt| <= dH(t)``.

    ``margin = dH - |dTheta/dt|`` must stay above ``-tolerance``.
    """

    times: np.ndarray
    dtheta_dt: np.ndarray
    delta_h: np.ndarray
    margin: np.ndarray
    tolerance: float

    @property
    def rows(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.times.tolist(), self.dtheta_dt.tolist(),
                        self.delta_h.tolist(), self.margin.tolist()))

    @property
    def ok(self) -> bool:
        return bool(np.all(self.margin >= -self.tolerance))

    @property
    def ok_interior(self) -> bool:
        return bool(np.all(self.margin[1:-1] >= -self.tolerance))


def rate_check(traj: "Trajectory", safety: float = 2.0) -> RateCheck:
    """Compare a numerical ``dTheta/dt`` with the instantaneous dispersion.

    Derivatives are second-order finite differences of the sampled angles
    (centered inside, one-sided at the ends), so this check never uses the
    analytic rate formula it is meant to verify. The tolerance is
    ``C h^2 + 1e-8`` with ``C`` taken from the largest sampled third
    difference of Theta.
    """
    _check_grid(traj)
    t = np.asarray(traj.times)
    theta = np.asarray(traj.thetas)
    h = float(t[1] - t[0])
    d = np.gradient(theta, t, edge_order=2)
    d3 = np.max(np.abs(np.diff(theta, 3))) / h**3 if theta.size >= 4 else 0.0
    # one-sided 2nd-order stencils have error h^2 |Theta'''| / 3, centered ones h^2/6
    tol = safety * d3 / 3.0 * h**2 + 1e-8
    margin = np.asarray(traj.delta_hs) - np.abs(d)
    return RateCheck(t, d, np.asarray(traj.delta_hs), margin, float(tol))
