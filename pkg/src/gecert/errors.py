"""Exception hierarchy shared by all gecert modules."""


class GecertError(Exception):
    """Base class for every error raised by the package."""


class DomainMiss(GecertError):
    pass


class AtKink(GecertError):
    pass


class NondifferentiablePiece(GecertError):
    pass


class IncompatibleDomain(GecertError):
    pass


class GraphInvariantError(GecertError):
    """A PiecewiseGraph violates disjointness, coverage or closedness."""


class UnsupportedTopology(GecertError):
    pass


class SignalRangeError(GecertError):
    pass


class AmbiguousLink(GecertError):
    pass


class OnFold(GecertError):
    """No SMR certificate exists at a fold point, kink or segment abscissa."""


class RatioViolation(GecertError):
    pass


class EmptyInput(GecertError):
    pass


class GateViolation(GecertError):
    pass


class LocalizationError(GecertError):
    """The localized inverse inside a certified ball is empty or multivalued."""

    def __init__(self, message, t=None, count=None):
        super().__init__(message)
        self.t = t
        self.count = count


class EpsilonTooLarge(GecertError):
    pass


class GridMismatch(GecertError):
    pass


class WindowTooWide(GecertError):
    pass


class ScenarioError(GecertError):
    """Scenario text could not be parsed or validated."""
