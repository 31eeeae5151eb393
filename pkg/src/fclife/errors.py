"""Exception types raised across the package."""


class FcLifeError(Exception):
    """Base class for all package-specific errors."""


# -- spectrum validation ------------------------------------------------

class SpectrumError(FcLifeError):
    pass


class NonPositiveFrequency(SpectrumError):
    pass


class MismatchedLengths(SpectrumError):
    pass


class NonFiniteValue(SpectrumError):
    pass


class TooFewPoints(SpectrumError):
    pass


class DuplicateFrequency(SpectrumError):
    pass


class NegativeAge(SpectrumError):
    pass


# -- optimizers and model fits ------------------------------------------

class NonFiniteCost(FcLifeError):
    """Cost function returned NaN/inf at an initial simplex vertex."""


class DegenerateFit(FcLifeError):
    """Every EM initialization starved at least one regime."""


class SingularHessian(FcLifeError):
    """Newton system in the IRLS update is singular (handled internally)."""


class BoundaryCountMismatch(FcLifeError):
    """Segmentation did not yield exactly two boundaries around a central
    regime, so the fixed 18-slot feature layout cannot be filled."""


# -- regression / selection ---------------------------------------------

class ConstantColumn(FcLifeError):
    pass


class EmptySubset(FcLifeError):
    pass


class NoFeasibleSubset(FcLifeError):
    pass


# -- file formats --------------------------------------------------------

class FormatError(FcLifeError):
    """Malformed CSV/JSON input (bad header, non-numeric cell, ...)."""
