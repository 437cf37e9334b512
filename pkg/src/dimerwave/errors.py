"""Exception types shared across the toolkit.

Every failure mode a caller can act on gets its own class so the CLI can map
them to exit codes without string matching.
"""


class DimerwaveError(Exception):
    """Base class for all toolkit errors."""


class ConfigInvalid(DimerwaveError):
    """Bad parameters or configuration (CLI exit code 2)."""


class NumericalFailure(DimerwaveError):
    """A solver or check failed numerically (CLI exit code 3)."""


# dispersion
class NoRoot(NumericalFailure):
    pass


class MultipleRoots(NumericalFailure):
    pass


class Unsupported(ConfigInvalid):
    """Operation not defined for these parameters (e.g. general dimer)."""


# state space
class NotInDomain(DimerwaveError):
    """State lacks the smoothness expected of the evolution operator's domain."""


class SingularDenominator(DimerwaveError):
    pass


class NearSpectrum(DimerwaveError):
    """Resolvent requested too close to the spectrum."""


class ContourThroughSpectrum(DimerwaveError):
    pass


# invariants
class MuOutOfRange(ConfigInvalid):
    pass


# profiles
class SpringSingular(ConfigInvalid):
    """beta + kappa^3 = 0 wipes out the quadratic spring response."""


class NonConvergentTails(NumericalFailure):
    pass


# collocation
class DegenerateEigenvalues(NumericalFailure):
    pass


class SymbolSingular(NumericalFailure):
    pass


class NewtonDiverged(NumericalFailure):
    pass


class JacobianSingular(NumericalFailure):
    pass


class UnderResolved(NumericalFailure):
    pass


class WindowInsideCore(ConfigInvalid):
    pass


# simulation
class DomainTooSmall(ConfigInvalid):
    pass


class Blowup(NumericalFailure):
    pass
