"""Exception hierarchy.

Two families: configuration/validation problems (bad input, exit code 1)
and numerical failures (exit code 2).
"""


class ConfigError(ValueError):
    """Invalid model, bath or scan configuration."""


class NumericError(ArithmeticError):
    """A numerical procedure could not deliver a trustworthy result."""


class DivergentIntegralError(NumericError):
    """A bath integral required by the construction does not converge."""


class AccuracyError(NumericError):
    """A quadrature or series did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateSpectrumError(NumericError):
    """Two eigenvalues of the effective system Hamiltonian coincide."""


class NonUniqueSteadyStateError(NumericError):
    """More than one eigenvalue of the Liouvillian is numerically zero."""


class DefectiveGeneratorError(NumericError):
    """The Liouvillian is not (numerically) diagonalizable."""
