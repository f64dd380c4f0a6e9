"""Exception hierarchy shared across the package."""


class VolscreenError(Exception):
    """Base class for all package errors."""


# chemistry
class SmilesError(VolscreenError, ValueError):
    pass


class UnsupportedToken(SmilesError):
    pass


class UnsupportedElement(UnsupportedToken):
    """An element symbol outside C/O/F (e.g. Cl, N, S)."""


class ValenceError(SmilesError):
    pass


class UnclosedRing(SmilesError):
    pass


class UnbalancedParenthesis(SmilesError):
    pass


class InvalidWidth(VolscreenError, ValueError):
    pass


class WidthMismatch(VolscreenError, ValueError):
    pass


class NoHydrogenAtSite(VolscreenError, ValueError):
    pass


# vapor-pressure data
class SingularTemperature(VolscreenError, ValueError):
    pass


class InsufficientPoints(VolscreenError, ValueError):
    pass


class NonConvergence(VolscreenError, RuntimeError):
    pass


class DegenerateRange(VolscreenError, ValueError):
    pass


class TooFewGroups(VolscreenError, ValueError):
    pass


# features / models
class AllConstant(VolscreenError, ValueError):
    pass


class DimensionMismatch(VolscreenError, ValueError):
    pass


class SingularKernel(VolscreenError, RuntimeError):
    pass


class NonFinite(VolscreenError, ValueError):
    pass


class LengthMismatch(VolscreenError, ValueError):
    pass


class ZeroVariance(VolscreenError, ValueError):
    pass


class TooManyFeatures(VolscreenError, ValueError):
    pass


class EmptyBackground(VolscreenError, ValueError):
    pass


class BadK(VolscreenError, ValueError):
    pass


class MissingFeature(VolscreenError, KeyError):
    pass


class PredictorFailure(VolscreenError, RuntimeError):
    pass


class PerplexityTooLarge(VolscreenError, ValueError):
    pass


class StageFailure(VolscreenError, RuntimeError):
    """Raised by the pipeline runner; ``stage`` names the failing step."""

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
