"""Exception hierarchy shared by every module of the package."""


class LabError(Exception):
    """Base class for all errors raised by :mod:`torus_lab`."""


class ParameterDomainError(LabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class AliasingError(LabError, ValueError):
    """The sampling grid is too coarse to represent the requested band."""


class NumericDomainError(LabError, ArithmeticError):
    """A computation produced, or would produce, non-finite values."""


class ClassificationError(LabError, ValueError):
    """An exponent triple does not satisfy the required admissibility condition."""


class DivergenceError(LabError, RuntimeError):
    """A fixed-point iteration failed to contract.

    Attributes
    ----------
    ratio : float
        The last observed ratio of successive update sizes.
    history : list of float
        Update sizes recorded before the iteration was abandoned.
    """

    def __init__(self, message, ratio=float("nan"), history=()):
        super().__init__(message)
        self.ratio = ratio
        self.history = list(history)


class DimensionOverflowError(LabError, ValueError):
    """A dense matrix would exceed the configured size limit."""


class EmptySweepError(LabError, ValueError):
    """A parameter grid contains no points."""


class UnknownExperimentError(LabError, KeyError):
    """No experiment is registered under the requested name."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
