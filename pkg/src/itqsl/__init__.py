"""Imaginary-time evolution and its geometric quantum speed limit."""

from .analytic_models import (
    GroverParams,
    TwoLevelParams,
    fidelity_convergence_bound,
    grover_model,
    grover_runtime,
    grover_runtime_large_n,
    grover_theta,
    two_level_dispersion_integral,
    two_level_hamiltonian,
    two_level_saturation_gap,
    two_level_theta,
)
from .errors import ItqslError
from .ite_engine import (
    HamiltonianSchedule,
    TimeGrid,
    Trajectory,
    crossing_time,
    fidelity_to,
    propagate_exact,
    propagate_rk4,
)
from .qsl_geometry import QslReport, angle, path_length, qsl_report, rate_check, saturation_certificate
from .qstate import (
    HermitianOperator,
    StateVector,
    dispersion,
    eig,
    expectation,
    inner,
    make_state,
    normalize,
    validate_hermitian,
)

__version__ = "0.1.0"
