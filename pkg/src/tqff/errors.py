"""Exception hierarchy.

Two broad branches: ``ConfigError`` for bad inputs/configuration (CLI exit
code 2) and ``NumericalError`` for runtime numerical failures (exit code 3).
"""


class TqffError(Exception):
    """Base class for all package errors."""


class ConfigError(TqffError):
    """Invalid argument, configuration, or input data."""


class NumericalError(TqffError):
    """A numerical procedure failed (non-convergence, loss of precision)."""


# --- rule construction -----------------------------------------------------

class InvalidL(ConfigError):
    pass


class InvalidInterval(ConfigError):
    pass


class NonPositiveMoment(NumericalError):
    """A recurrence coefficient A_k came out non-positive: the discretized
    measure is too coarse or L is too large for the precision budget."""


class EigenFailure(NumericalError):
    """Tridiagonal eigensolver did not converge."""


class AbscissaOutOfRange(NumericalError):
    """A Jacobi eigenvalue left [-1, 1] by more than round-off."""


class DimensionMismatch(ConfigError):
    pass


class NodeAtZero(NumericalError):
    """A 1-d node sits numerically at 0; mirroring would duplicate it."""


class AsymmetricRule(ConfigError):
    pass


class OddRule(ConfigError):
    """Symmetric halving hit a node at 0 (odd-sized rule)."""


# --- kernels / features ----------------------------------------------------

class UnsupportedFamily(ConfigError):
    pass


class SeedRequired(ConfigError):
    pass


# --- GP core ---------------------------------------------------------------

class CholeskyFailure(NumericalError):
    pass


class CapExceeded(ConfigError):
    pass


class NonFiniteLoss(NumericalError):
    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite loss at iteration {iteration}")


class LengthMismatch(ConfigError):
    pass


# --- reference integration -------------------------------------------------

class MaxSubdivision(NumericalError):
    """Adaptive integrator hit the subdivision cap before reaching tol."""


class NonFinite(NumericalError):
    """Integrand returned a non-finite value."""


# --- data layer ------------------------------------------------------------

class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyData(ConfigError):
    pass
