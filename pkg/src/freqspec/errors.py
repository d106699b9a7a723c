"""Exception hierarchy.

Validation failures subclass ``ValueError`` so callers that only care about
"bad input" can catch that; file problems subclass ``OSError``.
"""


class FreqSpecError(Exception):
    """Base class for all package errors."""


class InvalidInput(FreqSpecError, ValueError):
    pass


# raster
class UnsupportedFormat(InvalidInput):
    pass


class CorruptStream(InvalidInput):
    pass


class ZeroDimension(InvalidInput):
    pass


class ShapeMismatch(InvalidInput):
    pass


# spectrum
class EvenWindow(InvalidInput):
    pass


class NonSquareInput(InvalidInput):
    pass


class EmptySet(InvalidInput):
    pass


class MixedSizes(InvalidInput):
    pass


# perturb
class InvalidQuality(InvalidInput):
    pass


class EvenKernel(InvalidInput):
    pass


class DegenerateIntermediate(InvalidInput):
    pass


class InvalidPerturbation(InvalidInput):
    pass


# synth
class InvalidSpec(InvalidInput):
    pass


# metrics / model
class SingleClass(InvalidInput):
    pass


class NoPositives(InvalidInput):
    pass


class DimensionMismatch(InvalidInput):
    pass


class TooFewSamples(InvalidInput):
    pass


class NonFiniteLoss(FreqSpecError, ArithmeticError):
    """Training diverged (usually: learning rate too large)."""


class SchemaMismatch(InvalidInput):
    pass


# bench
class EmptySource(InvalidInput):
    pass


class MissingRealSet(InvalidInput):
    pass


class UnknownSource(InvalidInput):
    pass


# oracles
class InputTooLarge(InvalidInput):
    pass


class IoFailure(FreqSpecError, OSError):
    pass
