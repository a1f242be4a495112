"""Imaginary-time propagation, d|psi>/dt = -H(t)|psi>.

Trajectories store the normalized state together with ``ln ||psi(t)||``;
the raw norm itself is never formed because it under- or overflows long
before the runs of interest end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy.optimize import bisect

from .errors import (
    DimensionMismatch,
    GridTooCoarse,
    InputError,
    StepSizeTooLarge,
    VanishingState,
)
from .qsl_geometry import angles
from .qstate import (
    HermitianOperator,
    SpectralDecomposition,
    StateVector,
    _require_unit,
    dispersions,
    eig,
    expectations,
    validate_hermitian,
)

# max |norm - 1| tolerated after a single RK4 step before renormalizing
RENORM_SENTINEL = 1e-2


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k T / n`` for ``k = 0..n``; ``n`` must be even."""

    t_end: float
    num_steps: int = 1000

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise InputError(f"horizon must be finite and > 0, got {self.t_end}")
        if int(self.num_steps) != self.num_steps or self.num_steps < 2:
            raise GridTooCoarse(f"num_steps must be an integer >= 2, got {self.num_steps}")
        if self.num_steps % 2:
            raise GridTooCoarse(f"num_steps must be even for Simpson quadrature, got {self.num_steps}")
        object.__setattr__(self, "num_steps", int(self.num_steps))

    @property
    def t_start(self) -> float:
        return 0.0

    @property
    def step(self) -> float:
        return self.t_end / self.num_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.num_steps + 1) * self.t_end / self.num_steps


class HamiltonianSchedule:
    """Time-dependent Hamiltonian ``t -> H(t)`` of fixed dimension.

    ``func`` may return a :class:`HermitianOperator` or anything accepted by
    :func:`validate_hermitian`. Use :meth:`constant` for time-independent
    Hamiltonians; those are propagated with the exact spectral propagator.
    """

    def __init__(self, func: Callable[[float], object], dimension: int):
        self._func = func
        self.dimension = int(dimension)
        self._constant: HermitianOperator | None = None

    @classmethod
    def constant(cls, h: HermitianOperator) -> "HamiltonianSchedule":
        sched = cls(lambda t: h, h.dimension)
        sched._constant = h
        return sched

    @property
    def is_constant(self) -> bool:
        return self._constant is not None

    def evaluate(self, t: float) -> HermitianOperator:
        if self._constant is not None:
            return self._constant
        h = self._func(t)
        if not isinstance(h, HermitianOperator):
            h = validate_hermitian(h)
        if h.dimension != self.dimension:
            raise DimensionMismatch(
                f"schedule changed dimension at t={t}: {h.dimension} != {self.dimension}"
            )
        return h


def as_schedule(h) -> HamiltonianSchedule:
    if isinstance(h, HamiltonianSchedule):
        return h
    if not isinstance(h, HermitianOperator):
        h = validate_hermitian(h)
    return HamiltonianSchedule.constant(h)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    phi: StateVector
    log_norm: float
    theta: float
    delta_h: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled normalized ITE trajectory.

    Per-sample data are kept as parallel arrays aligned with ``grid.times``;
    ``trajectory[k]`` or iteration yields :class:`TrajectorySample` records.
    ``energies`` holds ``<H>_t`` at each sample.
    """

    grid: TimeGrid
    psi0: StateVector
    phis: np.ndarray
    log_norms: np.ndarray
    thetas: np.ndarray
    delta_hs: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        for arr in (self.phis, self.log_norms, self.thetas, self.delta_hs, self.energies):
            arr.setflags(write=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def horizon(self) -> float:
        return self.grid.t_end

    def __len__(self) -> int:
        return self.phis.shape[0]

    def __getitem__(self, k: int) -> TrajectorySample:
        return TrajectorySample(
            t=float(self.times[k]),
            phi=StateVector(self.phis[k]),
            log_norm=float(self.log_norms[k]),
            theta=float(self.thetas[k]),
            delta_h=float(self.delta_hs[k]),
        )

    def __iter__(self) -> Iterator[TrajectorySample]:
        return (self[k] for k in range(len(self)))

    @property
    def samples(self) -> list[TrajectorySample]:
        return list(self)


def _check_inputs(dimension: int, psi0: StateVector) -> None:
    if psi0.dimension != dimension:
        raise DimensionMismatch(f"state dimension {psi0.dimension} != operator dimension {dimension}")
    _require_unit(psi0)


def _exact_states(spec: SpectralDecomposition, psi0: np.ndarray, times: np.ndarray):
    """Normalized ``e^{-Ht} psi0`` and its log-norm for every time.

    Each time is shifted by its dominant populated mode, i.e. the largest
    ``ln|c_m| - lambda_m t``; this is the ground-energy shift applied to the
    lowest eigenvalue ``psi0`` actually overlaps with.
    """
    c = spec.vectors.conj().T @ psi0
    mag = np.abs(c)
    with np.errstate(divide="ignore"):
        logc = np.log(mag)
    phase = np.divide(c, mag, out=np.zeros_like(c), where=mag > 0)
    expo = logc[None, :] - np.outer(times, spec.eigenvalues)
    shift = np.max(expo, axis=1)
    if not np.all(np.isfinite(shift)):
        raise VanishingState("initial state has no finite overlap with the spectrum")
    weights = phase[None, :] * np.exp(expo - shift[:, None])
    psi = weights @ spec.vectors.T
    norms = np.linalg.norm(psi, axis=1)
    if not np.all(norms > 0):
        raise VanishingState("propagated state vanished numerically")
    return psi / norms[:, None], shift + np.log(norms)


def _assemble(grid, psi0, phis, log_norms, h_at) -> Trajectory:
    phis[0] = psi0.amplitudes
    log_norms[0] = 0.0
    if isinstance(h_at, HermitianOperator):
        delta = dispersions(h_at, phis)
        energy = expectations(h_at, phis)
    else:
        delta = np.array([dispersions(h, phis[k][None, :])[0] for k, h in enumerate(h_at)])
        energy = np.array([expectations(h, phis[k][None, :])[0] for k, h in enumerate(h_at)])
    thetas = angles(psi0.amplitudes, phis)
    return Trajectory(grid, psi0, phis, log_norms, thetas, delta, energy)


def propagate_exact(h: HermitianOperator, psi0: StateVector, grid: TimeGrid,
                    spectrum: SpectralDecomposition | None = None) -> Trajectory:
    """Propagate a time-independent Hamiltonian through its eigenbasis.

    Args:
        h: the Hamiltonian.
        psi0: normalized initial state.
        grid: sample times.
        spectrum: optional precomputed ``eig(h)``.
    """
    _check_inputs(h.dimension, psi0)
    spec = spectrum if spectrum is not None else eig(h)
    phis, log_norms = _exact_states(spec, psi0.amplitudes, grid.times)
    return _assemble(grid, psi0, phis, log_norms, h)


def evolve(h: HermitianOperator, psi0: StateVector, t: float,
           spectrum: SpectralDecomposition | None = None) -> tuple[StateVector, float]:
    """Exact normalized state and log-norm at a single time ``t >= 0``."""
    _check_inputs(h.dimension, psi0)
    spec = spectrum if spectrum is not None else eig(h)
    phis, log_norms = _exact_states(spec, psi0.amplitudes, np.array([float(t)]))
    return StateVector(phis[0]), float(log_norms[0])


def _rhs(h: np.ndarray, phi: np.ndarray):
    hp = h @ phi
    e = np.vdot(phi, hp).real / np.vdot(phi, phi).real
    return e * phi - hp, e


def propagate_rk4(sched: HamiltonianSchedule, psi0: StateVector, grid: TimeGrid) -> Trajectory:
    """Classical RK4 on the normalized equation ``dphi/dt = (<H>_t - H) phi``.

    The state is renormalized after each step. The log-norm obeys
    ``d ln||psi|| / dt = -<H>_t`` and is advanced with the same stage
    weights, which is Simpson's rule over each step with the midpoint energy
    averaged over the two middle stages.

    Constant schedules are routed to :func:`propagate_exact`.

    Raises:
        StepSizeTooLarge: a step moved the norm by more than 1e-2.
    """
    sched = as_schedule(sched)
    if sched.is_constant:
        return propagate_exact(sched.evaluate(0.0), psi0, grid)
    _check_inputs(sched.dimension, psi0)

    times = grid.times
    dt = grid.step
    n = grid.num_steps
    phis = np.empty((n + 1, psi0.dimension), dtype=np.complex128)
    log_norms = np.empty(n + 1)
    ops = [sched.evaluate(times[0])]
    phi = psi0.amplitudes.copy()
    phis[0] = phi
    log_norms[0] = 0.0
    ell = 0.0
    for k in range(n):
        h0 = ops[k].matrix
        hm = sched.evaluate(times[k] + 0.5 * dt).matrix
        op1 = sched.evaluate(times[k + 1])
        h1 = op1.matrix
        k1, e1 = _rhs(h0, phi)
        k2, e2 = _rhs(hm, phi + 0.5 * dt * k1)
        k3, e3 = _rhs(hm, phi + 0.5 * dt * k2)
        k4, e4 = _rhs(h1, phi + dt * k3)
        nxt = phi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(nxt)
        if not np.isfinite(nrm) or abs(nrm - 1.0) > RENORM_SENTINEL:
            raise StepSizeTooLarge(
                f"step {k} (t={times[k]:.6g}) changed the norm by {abs(nrm - 1.0):.3e}; "
                f"refine the grid"
            )
        phi = nxt / nrm
        ell -= (dt / 6.0) * (e1 + 2 * e2 + 2 * e3 + e4)
        phis[k + 1] = phi
        log_norms[k + 1] = ell
        ops.append(op1)
    return _assemble(grid, psi0, phis, log_norms, ops)


def fidelities(trajectory: Trajectory, target: StateVector) -> np.ndarray:
    """``|<target|phi(t_k)>|^2`` for every sample."""
    if target.dimension != trajectory.phis.shape[1]:
        raise DimensionMismatch(f"target dimension {target.dimension} != {trajectory.phis.shape[1]}")
    _require_unit(target)
    ov = trajectory.phis @ target.amplitudes.conj()
    return np.clip(np.abs(ov) ** 2, 0.0, 1.0)


def fidelity_to(trajectory: Trajectory, target: StateVector) -> list[tuple[float, float]]:
    return list(zip(trajectory.times.tolist(), fidelities(trajectory, target).tolist()))


def tangent_ratio(phi: np.ndarray, target: np.ndarray) -> float:
    """``tan`` of the angle between ``phi`` and ``target``.

    For the two-level search model this is ``r(t) = tan theta(t)``.
    """
    ov = np.vdot(target, phi)
    perp = np.linalg.norm(phi - ov * target)
    return math.inf if ov == 0 else float(perp / abs(ov))


def crossing_time(trajectory: Trajectory, h: HermitianOperator, target: StateVector,
                  threshold: float, xtol: float = 1e-13) -> float | None:
    """First time the tangent ratio to ``target`` drops to ``threshold``.

    The sampled trajectory brackets the crossing; the bracket is then refined
    by bisection on the exact propagator. Returns ``None`` if no sample
    reaches the threshold.
    """
    tgt = target.amplitudes
    r = np.array([tangent_ratio(p, tgt) for p in trajectory.phis])
    hit = np.nonzero(r <= threshold)[0]
    if hit.size == 0:
        return None
    k = int(hit[0])
    times = trajectory.times
    if k == 0:
        return 0.0
    spec = eig(h)

    def f(t):
        phi, _ = _exact_states(spec, trajectory.psi0.amplitudes, np.array([t]))
        return tangent_ratio(phi[0], tgt) - threshold

    return float(bisect(f, times[k - 1], times[k], xtol=xtol, rtol=4 * np.finfo(float).eps))
