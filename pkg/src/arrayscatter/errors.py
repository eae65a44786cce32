"""Exceptions and warnings raised by the scattering engine."""


class ArrayScatterError(Exception):
    """Base class for all library errors."""


class ConfigError(ArrayScatterError, ValueError):
    """Invalid array or run configuration."""


class NumericalFailure(ArrayScatterError):
    """Base class for failures of a numerical method to meet its tolerance."""


class NonConvergentSum(NumericalFailure):
    """A lattice sum did not reach the requested tolerance."""


class QuadratureFailure(NumericalFailure):
    """Adaptive quadrature exhausted its interval budget."""


class RootFindingFailure(NumericalFailure):
    """A root or stationary point could not be located.

    Attributes
    ----------
    diagnostics : dict
        Whatever the solver knew when it gave up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingularKernel(NumericalFailure):
    """The discretized Lippmann-Schwinger operator is not invertible."""


class PropagatorZero(NumericalFailure):
    """The local propagator vanishes, so the contact T-matrix has a pole."""


class DarkMomentum(ArrayScatterError, ValueError):
    """A bright momentum was required but the momentum lies outside the light cone."""


class ClosedChannel(ArrayScatterError, ValueError):
    """The requested scattering channel has no states at this energy."""


class OutsideD2(ArrayScatterError, ValueError):
    """Relative momentum is not in the two-bright domain."""


class OffShellSeed(ArrayScatterError, ValueError):
    """Seed pair does not lie on the requested energy shell."""


class NonPhysicalFlux(ArrayScatterError, ValueError):
    """Survival probability is negative: the flux exceeds the perturbative regime.

    Attributes
    ----------
    survival : float
        The (negative) survival probability that was computed.
    """

    def __init__(self, message, survival):
        super().__init__(message)
        self.survival = survival


class CriticalEnergyProximity(UserWarning):
    """Energy lies within the resolvable window of a critical energy."""
