"""Closed-form results for the two solvable ITE models.

Two-level model: ``H = E |0><0|`` with ``psi0 = cos(theta)|0> + sin(theta)|1>``.
The excited amplitude decays as ``e^{-Et}``, so the normalized state stays on
the real great circle through ``|0>`` and ``|1>`` and its polar angle obeys
``tan a(t) = e^{Et} tan(theta)``.

Search model: ``H = E_w |w><w| + E_perp (I - |w><w|)`` with ``psi0`` the
uniform superposition over ``N`` items, reduced to the 2-d span of ``|w>``
and ``|w_perp>``. The angle to ``|w>`` follows
``tan theta(t) = sqrt(N - 1) e^{-g t}`` with gap ``g = E_perp - E_w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NonPositiveGap, ZeroOverlap
from .qstate import HermitianOperator, StateVector, basis_state, make_state, validate_hermitian

# above this size the search model is built in its reduced 2x2 form by default
EMBED_LIMIT = 256


def _finite(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise InputError(f"{name} must be finite, got {x}")
    return x


@dataclass(frozen=True)
class TwoLevelParams:
    theta0: float
    energy: float
    horizon: float = 1.0

    def __post_init__(self):
        th = _finite("theta0", self.theta0)
        if not 0.0 < th < math.pi / 2:
            raise InputError(f"theta0 must lie in (0, pi/2), got {th}")
        if _finite("energy", self.energy) <= 0:
            raise InputError(f"energy must be > 0, got {self.energy}")
        if _finite("horizon", self.horizon) <= 0:
            raise InputError(f"horizon must be > 0, got {self.horizon}")


@dataclass(frozen=True)
class GroverParams:
    dimension: int
    e_w: float = 0.0
    e_perp: float = 1.0
    horizon: float = 1.0
    epsilon: float | None = None

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise InputError(f"dimension must be an integer >= 2, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))
        _finite("e_w", self.e_w)
        _finite("e_perp", self.e_perp)
        if _finite("horizon", self.horizon) <= 0:
            raise InputError(f"horizon must be > 0, got {self.horizon}")
        if self.epsilon is not None and not 0.0 < _finite("epsilon", self.epsilon) < 1.0:
            raise InputError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def gap(self) -> float:
        return self.e_perp - self.e_w


# -- two-level model ---------------------------------------------------------

def two_level_hamiltonian(p: TwoLevelParams) -> tuple[HermitianOperator, StateVector]:
    """``diag(E, 0)`` and ``cos(theta)|0> + sin(theta)|1>``."""
    h = validate_hermitian(np.diag([p.energy, 0.0]))
    psi0 = make_state([math.cos(p.theta0), math.sin(p.theta0)])
    return h, psi0


def two_level_state(p: TwoLevelParams, t: float) -> StateVector:
    """Normalized state at time ``t``."""
    c, s = math.cos(p.theta0), math.sin(p.theta0)
    x = math.exp(-p.energy * t)
    d = math.sqrt(c * c * x * x + s * s)
    return make_state([c * x / d, s / d])


def two_level_theta(p: TwoLevelParams, t: float) -> float:
    """``Theta(t) = arccos[(c^2 e^{-Et} + s^2) / sqrt(c^2 e^{-2Et} + s^2)]``.

    Evaluated through atan2 with ``sin Theta = c s (1 - e^{-Et}) / sqrt(...)``,
    so small angles keep full precision.
    """
    if t < 0:
        raise InputError(f"t must be >= 0, got {t}")
    c, s = math.cos(p.theta0), math.sin(p.theta0)
    x = math.exp(-p.energy * t)
    return math.atan2(-c * s * math.expm1(-p.energy * t), c * c * x + s * s)


def two_level_delta_h(p: TwoLevelParams, t: float) -> float:
    """``E s c e^{-Et} / (c^2 e^{-2Et} + s^2)``."""
    c, s = math.cos(p.theta0), math.sin(p.theta0)
    x = math.exp(-p.energy * t)
    return p.energy * s * c * x / (c * c * x * x + s * s)


def two_level_dispersion_integral(p: TwoLevelParams) -> float:
    """Exact ``int_0^T dH(t) dt``.

    Substituting ``x = e^{-Et}`` gives
    ``(1 / (E c^2)) int_{e^{-ET}}^1 dx / (x^2 + tan^2 theta)`` times ``E s c``,
    whose antiderivative is ``arctan(x / tan theta) / tan theta``. Hence
    ``pi/2 - theta - arctan(e^{-ET} cot theta)``, equivalently
    ``arctan(e^{ET} tan theta) - theta``. At ``theta = pi/4`` this coincides
    with ``theta - arctan(e^{-ET} cot theta)``; at other angles that
    expression is not the integral.
    """
    th = p.theta0
    cot = math.cos(th) / math.sin(th)
    return (math.pi / 2 - th) - math.atan(math.exp(-p.energy * p.horizon) * cot)


def two_level_saturation_gap(p: TwoLevelParams) -> float:
    """``int_0^T dH dt - Theta(T)`` from the closed forms.

    The path is a great-circle arc for every ``theta0``, so this is zero up
    to rounding at all angles, not just ``pi/4``.
    """
    return two_level_dispersion_integral(p) - two_level_theta(p, p.horizon)


# -- search model ------------------------------------------------------------

def grover_model(p: GroverParams, embed: bool | None = None) -> tuple[HermitianOperator, StateVector]:
    """Search Hamiltonian and uniform initial state.

    The marked state ``|w>`` is basis index 0 in both forms. With
    ``embed=False`` the model lives in the ``{|w>, |w_perp>}`` plane; with
    ``embed=True`` it is the full ``N``-dimensional projector Hamiltonian
    with an ``(N-1)``-fold degenerate excited level. ``None`` embeds up to
    ``N = 256``.
    """
    n = p.dimension
    if embed is None:
        embed = n <= EMBED_LIMIT
    if embed:
        m = np.full(n, p.e_perp, dtype=float)
        m[0] = p.e_w
        h = validate_hermitian(np.diag(m))
        psi0 = make_state(np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128))
    else:
        h = validate_hermitian(np.diag([p.e_w, p.e_perp]))
        psi0 = make_state([1.0 / math.sqrt(n), math.sqrt((n - 1) / n)])
    return h, psi0


def grover_marked_state(h: HermitianOperator) -> StateVector:
    """``|w>`` in the basis used by :func:`grover_model`."""
    return basis_state(h.dimension, 0)


def grover_theta(p: GroverParams, t: float) -> float:
    """``theta(t) = arctan(sqrt(N - 1) e^{-g t})``."""
    if t < 0:
        raise InputError(f"t must be >= 0, got {t}")
    return math.atan(math.sqrt(p.dimension - 1) * math.exp(-p.gap * t))


def grover_delta_h(p: GroverParams, t: float) -> float:
    th = grover_theta(p, t)
    return abs(p.gap) * math.sin(th) * math.cos(th)


def grover_angle_travelled(p: GroverParams, t: float) -> float:
    """``Theta(t) = theta(0) - theta(t)``."""
    return grover_theta(p, 0.0) - grover_theta(p, t)


def grover_fidelity(p: GroverParams, t: float) -> float:
    """Exact ``|<w|phi(t)>|^2`` for the uniform initial state."""
    ratio = (p.dimension - 1) * math.exp(-2.0 * p.gap * t)
    return 1.0 / (1.0 + ratio)


def _require_gap(p: GroverParams) -> float:
    if p.gap <= 0:
        raise NonPositiveGap(f"need e_perp > e_w, got gap {p.gap}")
    if p.epsilon is None:
        raise InputError("epsilon is required for runtime estimates")
    return p.gap


def grover_runtime(p: GroverParams) -> float:
    """Time at which ``tan theta(t)`` first reaches ``epsilon``.

    ``(1/g) [ln(N - 1) / 2 + ln(1/epsilon)]``. The threshold is on the
    tangent ``r(T) <= epsilon``; the matching infidelity is
    ``r^2 / (1 + r^2)``.
    """
    g = _require_gap(p)
    return (0.5 * math.log(p.dimension - 1) + math.log(1.0 / p.epsilon)) / g


def grover_runtime_large_n(p: GroverParams) -> float:
    """Large-``N`` form ``(1/g) [ln(N) / 2 + ln(1/epsilon)]``."""
    g = _require_gap(p)
    return (0.5 * math.log(p.dimension) + math.log(1.0 / p.epsilon)) / g


def fidelity_convergence_bound(alpha_sq: float, chi_sq: float, gap: float, t: float) -> float:
    """Upper bound ``(chi_sq / alpha_sq) e^{-2 gap t}`` on ``1 - F(t)``.

    ``alpha_sq`` is the initial weight on the ground state and ``chi_sq`` the
    weight orthogonal to it.

    Raises:
        ZeroOverlap: if ``alpha_sq == 0``; the state then never reaches the target.
    """
    if alpha_sq == 0:
        raise ZeroOverlap("initial state has no overlap with the target")
    if not 0 < alpha_sq <= 1:
        raise InputError(f"alpha_sq must lie in (0, 1], got {alpha_sq}")
    if chi_sq < 0:
        raise InputError(f"chi_sq must be >= 0, got {chi_sq}")
    if gap <= 0:
        raise NonPositiveGap(f"gap must be > 0, got {gap}")
    if t < 0:
        raise InputError(f"t must be >= 0, got {t}")
    return chi_sq / alpha_sq * math.exp(-2.0 * gap * t)
