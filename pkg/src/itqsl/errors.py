"""Exception hierarchy.

Errors fall into three families that the command line maps to distinct
exit codes: input problems (2), numerical failures (3) and I/O (4, plain
``OSError``).
"""

from __future__ import annotations


class ItqslError(Exception):
    """Base class for every error raised by this package."""


class InputError(ItqslError, ValueError):
    """Malformed or out-of-domain input."""


class NumericalError(ItqslError, ArithmeticError):
    """A computation produced a result that violates its own contract."""


class ZeroVector(InputError):
    pass


class NonFiniteEntry(InputError):
    pass


class DimensionTooSmall(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NotHermitian(InputError):
    def __init__(self, max_deviation: float, tol: float):
        self.max_deviation = max_deviation
        self.tol = tol
        super().__init__(
            f"matrix is not Hermitian: max |H - H^dagger| = {max_deviation:.3e} > tol {tol:.1e}"
        )


class NotNormalized(InputError):
    pass


class GridTooCoarse(InputError):
    pass


class NonPositiveGap(InputError):
    pass


class ZeroOverlap(InputError):
    pass


class EigFailure(NumericalError):
    pass


class NumericalInconsistency(NumericalError):
    pass


class VanishingState(NumericalError):
    pass


class StepSizeTooLarge(NumericalError):
    pass


class DegenerateTrajectory(NumericalError):
    pass


class ConfigError(InputError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class SchemaError(ConfigError):
    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class HermiticityError(ConfigError):
    def __init__(self, max_deviation: float, tol: float):
        self.max_deviation = max_deviation
        self.tol = tol
        super().__init__(
            f"hamiltonian is not Hermitian: max deviation {max_deviation:.3e} > tol {tol:.1e}"
        )
