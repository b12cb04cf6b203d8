"""Exception hierarchy.

``NumericalValidationError`` subclasses signal a numerical precondition
breach (the CLI maps them to exit code 2); ``ScenarioError`` is a malformed
input document (exit code 1).
"""


class TpmError(Exception):
    """Base class for all package errors."""


class NumericalValidationError(TpmError):
    pass


class NotHermitian(NumericalValidationError):
    pass


class NoConvergence(NumericalValidationError):
    pass


class ShapeMismatch(NumericalValidationError):
    pass


class NotUnitaryBasis(NumericalValidationError):
    pass


class NotUnitary(NumericalValidationError):
    pass


class DimensionMismatch(NumericalValidationError):
    pass


class BetaMismatch(NumericalValidationError):
    pass


class ZeroTemperature(NumericalValidationError):
    pass


class NormalizationError(NumericalValidationError):
    pass


class UndefinedObservableAtSample(TpmError):
    """A sampled outcome pair has no defined observable value."""

    def __init__(self, n: int, m: int, observable: str):
        super().__init__(f"observable {observable!r} undefined at sampled pair (n={n}, m={m})")
        self.n = n
        self.m = m
        self.observable = observable


class ScenarioError(TpmError):
    """Malformed scenario document; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
