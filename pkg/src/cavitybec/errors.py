"""Exception types raised across the package.

Parameter problems derive from :class:`ParameterError` (a ``ValueError``),
runtime/numerical problems from :class:`NumericalError` (a ``RuntimeError``),
so callers can catch broad categories or exact conditions.
"""


class CavityBECError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(CavityBECError, ValueError):
    """Invalid model or configuration input."""


class NonPositiveKappa(ParameterError):
    pass


class TruncationTooSmall(ParameterError):
    pass


class GridTooCoarse(ParameterError):
    pass


class NonFiniteValue(ParameterError):
    pass


class UnnormalizedState(ParameterError):
    pass


class WindowTooShort(ParameterError):
    pass


class NonuniformSampling(ParameterError):
    pass


class TrajectoryTooShort(ParameterError):
    pass


class MissingObservable(ParameterError):
    pass


class IncompatibleOrbits(ParameterError):
    pass


class InteractionUnsupported(ParameterError):
    pass


class ResumeMismatch(ParameterError):
    pass


class NumericalError(CavityBECError, RuntimeError):
    """Numerical failure during a computation."""


class StepSizeUnderflow(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class OscillatoryResidual(NumericalError):
    pass


class BadSteadyState(NumericalError):
    pass


class EigenSolverFailure(NumericalError):
    pass


class DegenerateSpectrum(NumericalError):
    pass
