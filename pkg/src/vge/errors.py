"""Exception taxonomy shared across the package."""


class VgeError(Exception):
    """Base class for all library errors."""


class NonFinite(VgeError):
    """Input contains NaN or infinity."""


class NegativeMass(VgeError):
    """A probability entry lies below the negative tolerance."""


class MassMismatch(VgeError):
    """A probability vector does not sum to one within tolerance."""


class TooFewMembers(VgeError):
    """The operation needs at least two ensemble members."""


class EmptyEnsemble(VgeError):
    """No member distributions were supplied."""


class ShapeMismatch(VgeError):
    """Array shapes disagree with the declared layout."""


class CacheMismatch(VgeError):
    """Backward-pass inputs do not match the forward cache."""


class LengthMismatch(VgeError):
    """Paired vectors have different lengths (or too few entries)."""


class DegenerateVariance(VgeError):
    """Rank correlation is undefined for a constant input."""


class AllZero(VgeError):
    """A score vector has no mass to concentrate."""


class EmptyInput(VgeError):
    """A metric received no samples."""


class EmptySet(VgeError):
    """ROC comparison received an empty score set."""


class InfeasibleConstruction(VgeError):
    """Moment targets cannot be met on the probability simplex."""


class Divergence(VgeError):
    """Training loss became non-finite or kept increasing."""


class ParseError(VgeError):
    """An input file is malformed; the message names the offending line."""


class InconsistentShape(VgeError):
    """Samples in one file disagree on member or class count."""
