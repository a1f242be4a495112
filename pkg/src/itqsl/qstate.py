"""Dense state vectors and Hermitian operators.

Everything here is immutable once constructed: the wrapped numpy arrays are
copied and flagged read-only, so instances can be shared freely between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionTooSmall,
    EigFailure,
    NonFiniteEntry,
    NotHermitian,
    NotNormalized,
    NumericalInconsistency,
    ZeroVector,
)

HERMITIAN_TOL = 1e-10
NORMALIZED_TOL = 1e-12
# looser check used on inputs to expectation values and propagators
UNIT_NORM_INPUT_TOL = 1e-10
IMAG_TOL = 1e-10


def _as_complex_array(values) -> np.ndarray:
    """Accept complex numbers, ``(re, im)`` pairs or a complex ndarray."""
    if isinstance(values, np.ndarray):
        return np.array(values, dtype=np.complex128)
    arr = np.asarray(values)
    if arr.ndim == 2 and arr.shape[1] == 2 and arr.dtype.kind in "biuf":
        arr = arr[:, 0] + 1j * arr[:, 1]
    return np.array(arr, dtype=np.complex128)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


def _scaled_norm(a: np.ndarray) -> float:
    # plain sum of squares underflows for amplitudes around 1e-160 and below
    m = float(np.max(np.abs(a))) if a.size else 0.0
    if m == 0.0:
        return 0.0
    s = a / m
    return m * float(np.sqrt(np.sum(s.real**2 + s.imag**2)))


@dataclass(frozen=True, eq=False)
class StateVector:
    """A finite-dimensional pure state, not necessarily normalized."""

    amplitudes: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1:
            raise DimensionMismatch(f"state must be one-dimensional, got shape {amps.shape}")
        if amps.size < 2:
            raise DimensionTooSmall(f"state dimension must be >= 2, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise NonFiniteEntry("state has NaN or infinite amplitudes")
        norm = _scaled_norm(amps)
        if norm == 0.0:
            raise ZeroVector("the zero vector is not a valid state")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "norm", norm)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) <= NORMALIZED_TOL

    def __len__(self) -> int:
        return self.amplitudes.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self) -> str:
        return f"StateVector({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A validated, exactly symmetrized Hermitian matrix.

    Build instances through :func:`validate_hermitian`; the constructor only
    re-checks the invariant.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"operator must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise DimensionTooSmall(f"operator dimension must be >= 2, got {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise NonFiniteEntry("operator has NaN or infinite entries")
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > HERMITIAN_TOL:
            raise NotHermitian(dev, HERMITIAN_TOL)
        if dev:
            m = _frozen(0.5 * (m + m.conj().T))
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def shifted(self, c: float) -> "HermitianOperator":
        """Return ``H + c I``."""
        return HermitianOperator(self.matrix + c * np.eye(self.dimension))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues and the matching orthonormal eigenvectors.

    ``vectors`` holds the eigenvectors as columns.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def eigenvectors(self) -> list[StateVector]:
        return [StateVector(self.vectors[:, k]) for k in range(self.vectors.shape[1])]

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])


def make_state(amplitudes: Sequence) -> StateVector:
    """Build a state from complex numbers or ``(re, im)`` pairs.

    >>> make_state([(1, 0), (0, 0)]).amplitudes
    array([1.+0.j, 0.+0.j])
    """
    return StateVector(_as_complex_array(amplitudes))


def basis_state(dimension: int, index: int) -> StateVector:
    amps = np.zeros(dimension, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def normalize(v: StateVector) -> StateVector:
    """Return ``v / ||v||``, computed without underflow for tiny norms."""
    a = v.amplitudes
    m = float(np.max(np.abs(a)))
    s = a / m
    return StateVector(s / np.sqrt(np.sum(s.real**2 + s.imag**2)))


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def _require_unit(phi: StateVector) -> None:
    if abs(phi.norm - 1.0) > UNIT_NORM_INPUT_TOL:
        raise NotNormalized(f"state must be normalized, |norm - 1| = {abs(phi.norm - 1.0):.3e}")


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b> = sum conj(a_i) b_i``."""
    _check_dims(a.dimension, b.dimension)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def validate_hermitian(m, tol: float = HERMITIAN_TOL) -> HermitianOperator:
    """Check Hermiticity within ``tol`` and return the symmetrized operator.

    ``m`` may be a complex array or nested lists of ``(re, im)`` pairs.

    Raises:
        NotHermitian: if ``max |m - m^dagger|`` exceeds ``tol``.
        NonFiniteEntry: if any entry is NaN or infinite.
    """
    arr = np.asarray(m)
    if arr.ndim == 3 and arr.shape[-1] == 2 and arr.dtype.kind in "biuf":
        arr = arr[..., 0] + 1j * arr[..., 1]
    arr = np.array(arr, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntry("operator has NaN or infinite entries")
    dev = float(np.max(np.abs(arr - arr.conj().T)))
    if dev > tol:
        raise NotHermitian(dev, tol)
    return HermitianOperator(0.5 * (arr + arr.conj().T))


def eig(h: HermitianOperator) -> SpectralDecomposition:
    """Eigen-decomposition with a residual check on every pair."""
    try:
        w, v = np.linalg.eigh(h.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
        raise EigFailure("eigensolver returned non-finite values")
    resid = np.linalg.norm(h.matrix @ v - v * w, axis=0)
    if np.any(resid > 1e-9 * (1.0 + np.abs(w))):
        raise EigFailure(f"eigenpair residual too large: {float(np.max(resid)):.3e}")
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v)


def expectation(h: HermitianOperator, phi: StateVector) -> float:
    """``<phi|H|phi>`` for a normalized state."""
    _check_dims(h.dimension, phi.dimension)
    _require_unit(phi)
    raw = complex(np.vdot(phi.amplitudes, h.matrix @ phi.amplitudes))
    if abs(raw.imag) > IMAG_TOL * (1.0 + abs(raw.real)):
        raise NumericalInconsistency(f"expectation has imaginary part {raw.imag:.3e}")
    return raw.real


def dispersion(h: HermitianOperator, phi: StateVector) -> float:
    """Energy standard deviation ``sqrt(<H^2> - <H>^2)``.

    Evaluated as ``||(H - <H>) phi||``, which is the same quantity for a unit
    vector but cannot go negative through cancellation.
    """
    _check_dims(h.dimension, phi.dimension)
    _require_unit(phi)
    return float(dispersions(h, phi.amplitudes[None, :])[0])


def expectations(h: HermitianOperator, phis: np.ndarray) -> np.ndarray:
    """Row-wise ``<phi|H|phi> / <phi|phi>`` for a stack of states (k, d)."""
    hp = phis @ h.matrix.T
    num = np.einsum("ij,ij->i", phis.conj(), hp)
    den = np.einsum("ij,ij->i", phis.conj(), phis).real
    return num.real / den


def dispersions(h: HermitianOperator, phis: np.ndarray) -> np.ndarray:
    """Row-wise energy dispersion for a stack of states (k, d)."""
    phis = np.atleast_2d(phis)
    hp = phis @ h.matrix.T
    den = np.einsum("ij,ij->i", phis.conj(), phis).real
    mean = np.einsum("ij,ij->i", phis.conj(), hp).real / den
    r = hp - mean[:, None] * phis
    var = np.einsum("ij,ij->i", r.conj(), r).real / den
    if not np.all(np.isfinite(var)):
        raise NumericalInconsistency("non-finite energy variance")
    return np.sqrt(var)
