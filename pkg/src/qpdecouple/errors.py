"""Exception hierarchy.

Every error raised on bad input derives from :class:`DecouplingError`, which
itself is a :class:`ValueError`, so callers that only care about "the input
was wrong" can catch the builtin.
"""


class DecouplingError(ValueError):
    """Base class for all input and invariant errors raised by this package."""


class NonFinite(DecouplingError):
    pass


class NonSymmetric(DecouplingError):
    pass


class NotHermitian(DecouplingError):
    pass


class SigmaMismatch(DecouplingError):
    pass


class MalformedInput(DecouplingError):
    pass


class NonPhysicalStructure(DecouplingError):
    pass


class DimensionMismatch(DecouplingError):
    pass


class NonPositiveParameter(DecouplingError):
    pass


class InvalidParameter(DecouplingError):
    pass


class InvalidDimension(DecouplingError):
    pass


class NotUnitary(DecouplingError):
    pass


class InvalidElement(DecouplingError):
    pass
