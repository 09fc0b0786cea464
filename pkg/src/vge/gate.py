"""Exponential variance gate, its analytic sensitivities, and region labels.

The gate ``gamma = 1 - exp(-mean / (k * spread))`` rewards classes with a
high ensemble mean and a low ensemble spread; ``k`` sets how much spread
is tolerated before a class is suppressed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleMoments
from .errors import ShapeMismatch

DEFAULT_K_MIN = 1e-3
DEFAULT_GAMMA_MIN = 1e-8
K_EPSILON = 1e-8

CONFIDENT_CERTAIN = "confident-certain"
CONFIDENT_UNCERTAIN = "confident-uncertain"
AMBIGUOUS_CERTAIN = "ambiguous-certain"
AMBIGUOUS_UNCERTAIN = "ambiguous-uncertain"

REGION_LABELS = (
    CONFIDENT_CERTAIN,
    CONFIDENT_UNCERTAIN,
    AMBIGUOUS_CERTAIN,
    AMBIGUOUS_UNCERTAIN,
)


def softplus(x) -> np.ndarray:
    return np.logaddexp(0.0, x)


def inverse_softplus(y) -> np.ndarray:
    """Stable inverse of softplus for y > 0: log(exp(y) - 1)."""
    y = np.asarray(y, dtype=np.float64)
    return y + np.log1p(-np.exp(-y))


@dataclass(frozen=True)
class GateParams:
    """Per-class raw gate parameters.

    The effective sensitivity is ``k = softplus(raw) + K_EPSILON`` clamped
    below at ``k_min``, so k stays strictly positive; raw initialized to
    zero gives k close to 0.6931.
    """

    raw: np.ndarray
    k_min: float = DEFAULT_K_MIN
    gamma_min: float = DEFAULT_GAMMA_MIN

    def __post_init__(self):
        arr = np.asarray(self.raw, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ShapeMismatch(f"raw gate parameters must be a 1-d vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("raw gate parameters must be finite")
        if self.k_min <= 0 or self.gamma_min <= 0:
            raise ValueError("k_min and gamma_min must be positive")
        object.__setattr__(self, "raw", arr)

    @property
    def n_classes(self) -> int:
        return int(self.raw.shape[0])

    @property
    def k(self) -> np.ndarray:
        return np.maximum(softplus(self.raw) + K_EPSILON, self.k_min)

    @classmethod
    def init(cls, n_classes: int, **kwargs) -> "GateParams":
        """Parameters at the standard initialization (raw = 0)."""
        return cls(raw=np.zeros(n_classes), **kwargs)

    @classmethod
    def from_k(cls, k, n_classes: int, **kwargs) -> "GateParams":
        """Parameters whose derived k equals the requested fixed value(s)."""
        k_arr = np.broadcast_to(np.asarray(k, dtype=np.float64), (n_classes,)).copy()
        k_min = kwargs.get("k_min", DEFAULT_K_MIN)
        if np.any(k_arr < k_min):
            raise ValueError(f"fixed k must be >= k_min ({k_min:g})")
        return cls(raw=inverse_softplus(k_arr - K_EPSILON), **kwargs)


@dataclass(frozen=True)
class GateOutput:
    """Gate values with the statistics they were computed from."""

    gamma: np.ndarray
    mean: np.ndarray
    spread: np.ndarray
    k: np.ndarray
    gamma_min: float


def compute_gate(moments: EnsembleMoments, params: GateParams) -> GateOutput:
    """Evaluate ``gamma = 1 - exp(-mean / (k * spread))`` per sample and class.

    The result is clamped below at ``gamma_min`` so downstream
    normalizations and gradients stay finite.
    """
    mean = moments.mean
    spread = moments.spread
    if params.n_classes != mean.shape[-1]:
        raise ShapeMismatch(
            f"gate has {params.n_classes} classes, moments have {mean.shape[-1]}"
        )
    k = params.k
    gamma = 1.0 - np.exp(-mean / (k * spread))
    gamma = np.maximum(gamma, params.gamma_min)
    return GateOutput(gamma=gamma, mean=mean, spread=spread, k=k, gamma_min=params.gamma_min)


def gate_grad_mean(gate: GateOutput) -> np.ndarray:
    """d gamma / d mean = (1 - gamma) / (k * spread); positive, saturating."""
    return (1.0 - gate.gamma) / (gate.k * gate.spread)


def gate_grad_spread(gate: GateOutput) -> np.ndarray:
    """d gamma / d spread = -(1 - gamma) * mean / (k * spread^2)."""
    return -(1.0 - gate.gamma) * gate.mean / (gate.k * gate.spread**2)


def gate_grad_k(gate: GateOutput) -> np.ndarray:
    """d gamma / d k = -(1 - gamma) * mean / (k^2 * spread)."""
    return -(1.0 - gate.gamma) * gate.mean / (gate.k**2 * gate.spread)


def classify_region(
    moments: EnsembleMoments,
    conf_threshold: float = 0.5,
    spread_threshold: float = 0.1,
) -> list[str]:
    """Label each sample by where its ensemble sits on the simplex.

    Confident means the top-class mean exceeds ``conf_threshold``; uncertain
    means that class's raw spread exceeds ``spread_threshold``.
    """
    if not (0.0 < conf_threshold < 1.0 and 0.0 < spread_threshold < 1.0):
        raise ValueError("thresholds must lie in (0, 1)")
    top = np.argmax(moments.mean, axis=1)
    rows = np.arange(moments.mean.shape[0])
    confident = moments.mean[rows, top] > conf_threshold
    uncertain = moments.spread_raw[rows, top] > spread_threshold
    labels = []
    for c_flag, u_flag in zip(confident, uncertain):
        if c_flag:
            labels.append(CONFIDENT_UNCERTAIN if u_flag else CONFIDENT_CERTAIN)
        else:
            labels.append(AMBIGUOUS_UNCERTAIN if u_flag else AMBIGUOUS_CERTAIN)
    return labels
