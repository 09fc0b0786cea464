"""Probability-simplex data types, ensemble batches, and moment computation.

Conventions used throughout the package:

* a member distribution is a length-C vector on the (C-1)-simplex,
* an ensemble batch is stored sample-major as a (B, M, C) float64 array,
* the per-class spread is the Bessel-corrected sample standard deviation,
  stabilized additively as ``spread = S + epsilon``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyEnsemble,
    MassMismatch,
    NegativeMass,
    NonFinite,
    ShapeMismatch,
    TooFewMembers,
)

DEFAULT_TOL = 1e-6
INGEST_TOL = 1e-5
DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class ProbVector:
    """One ensemble member's predictive categorical distribution."""

    values: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(self.values.shape[0])


def validate_simplex(v, tol: float = DEFAULT_TOL) -> ProbVector:
    """Validate a raw vector as a point on the probability simplex.

    Entries no lower than ``-tol`` whose total lies within ``tol`` of one
    are accepted; tiny negatives are clipped to zero and the vector is
    renormalized so the result sums to one exactly (up to rounding).
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ShapeMismatch(f"expected a 1-d vector with >= 2 classes, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("probability vector contains non-finite entries")
    lo = float(arr.min())
    if lo < -tol:
        raise NegativeMass(f"entry {lo:.6g} is below -tol ({-tol:.6g})")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise MassMismatch(f"probabilities sum to {total:.6g}, expected 1 within {tol:.6g}")
    arr = np.clip(arr, 0.0, None)
    return ProbVector(arr / arr.sum())


def as_members(members) -> np.ndarray:
    """Coerce a member collection to a float64 (M, C) array.

    Accepts an (M, C) array, a sequence of length-C vectors, or a sequence
    of :class:`ProbVector`.
    """
    if isinstance(members, EnsembleBatch):
        raise ShapeMismatch("expected members of a single sample, got an EnsembleBatch")
    if isinstance(members, np.ndarray):
        arr = members.astype(np.float64, copy=False)
    else:
        rows = [m.values if isinstance(m, ProbVector) else m for m in members]
        if len(rows) == 0:
            raise EmptyEnsemble("no member distributions supplied")
        arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ShapeMismatch(f"expected an (M, C) member array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class EnsembleBatch:
    """B samples x M members x C classes of member probabilities.

    Construction validates every (sample, member) row through
    :func:`validate_simplex` semantics (vectorized) and stores the
    clipped/renormalized copy.
    """

    data: np.ndarray

    def __init__(self, data, tol: float = DEFAULT_TOL):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeMismatch(f"expected a (B, M, C) array, got shape {arr.shape}")
        b, m, c = arr.shape
        if b < 1:
            raise ShapeMismatch("batch has no samples")
        if m < 2:
            raise TooFewMembers(f"need at least 2 members, got {m}")
        if c < 2:
            raise ShapeMismatch(f"need at least 2 classes, got {c}")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("batch contains non-finite entries")
        lo = float(arr.min())
        if lo < -tol:
            raise NegativeMass(f"entry {lo:.6g} is below -tol ({-tol:.6g})")
        sums = arr.sum(axis=2)
        worst = float(np.abs(sums - 1.0).max())
        if worst > tol:
            raise MassMismatch(f"worst member row sums to 1 {worst:+.6g}, tolerance {tol:.6g}")
        arr = np.clip(arr, 0.0, None)
        arr = arr / arr.sum(axis=2, keepdims=True)
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def n_samples(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_members(self) -> int:
        return int(self.data.shape[1])

    @property
    def n_classes(self) -> int:
        return int(self.data.shape[2])


@dataclass(frozen=True)
class EnsembleMoments:
    """Per-sample, per-class ensemble mean and stabilized spread.

    ``spread = spread_raw + epsilon`` where ``spread_raw`` is the
    Bessel-corrected sample standard deviation over members.
    """

    mean: np.ndarray
    spread: np.ndarray
    epsilon: float
    spread_raw: np.ndarray


def batch_array(batch) -> np.ndarray:
    """Return the (B, M, C) array behind a batch-like input."""
    arr = batch.data if isinstance(batch, EnsembleBatch) else np.asarray(batch, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeMismatch(f"expected a (B, M, C) array, got shape {arr.shape}")
    return arr


def ensemble_moments(batch, epsilon: float = DEFAULT_EPSILON) -> EnsembleMoments:
    """Per-class ensemble sample mean and stabilized standard deviation.

    The spread uses the Bessel correction (M - 1 denominator), so M >= 2
    is required; ``epsilon`` is added, not used as a floor.
    """
    arr = batch_array(batch)
    m = arr.shape[1]
    if m < 2:
        raise TooFewMembers(f"sample standard deviation needs M >= 2, got M={m}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    mean = arr.mean(axis=1)
    dev = arr - mean[:, None, :]
    spread_raw = np.sqrt((dev * dev).sum(axis=1) / (m - 1))
    return EnsembleMoments(
        mean=mean, spread=spread_raw + epsilon, epsilon=float(epsilon), spread_raw=spread_raw
    )


def mixture(distributions) -> ProbVector:
    """Arithmetic mean of member distributions (the ensemble prediction)."""
    arr = as_members(distributions)
    if arr.shape[0] == 0:
        raise EmptyEnsemble("no member distributions supplied")
    return ProbVector(arr.mean(axis=0))
