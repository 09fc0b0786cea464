"""Desk-scale end-to-end demo: train a linear-softmax ensemble through the
gated normalization layer on synthetic Gaussian blobs.

Full-batch gradient descent keeps the run deterministic; members differ
only through their weight initialization. Every backward path is exercised,
including the learnable per-class gate sensitivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Divergence
from .gate import GateParams
from .vgn import cross_entropy_on_mixture, vgn_backward, vgn_forward


@dataclass(frozen=True)
class ToyMember:
    """One linear-softmax member: a C x (D+1) map over features plus bias."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.weights, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"member weights must be C x (D+1), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("member weights must be finite")
        object.__setattr__(self, "weights", arr)

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[1]) - 1


def stack_members(members: list[ToyMember]) -> np.ndarray:
    return np.stack([m.weights for m in members])


@dataclass(frozen=True)
class TrainConfig:
    n_members: int = 5
    n_classes: int = 3
    n_features: int = 2
    samples_per_class: int = 100
    learning_rate: float = 0.5
    epochs: int = 200
    seed: int = 0
    learn_k: bool = True
    cluster_radius: float = 4.0
    cluster_spread: float = 0.6
    init_scale: float = 0.1

    def __post_init__(self):
        if min(self.n_members, self.n_classes, self.n_features, self.samples_per_class) < 1:
            raise ValueError("counts must be positive")
        if self.n_members < 2:
            raise ValueError("the ensemble needs at least two members")
        if self.learning_rate <= 0 or self.epochs < 1:
            raise ValueError("learning rate and epochs must be positive")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    k: list[np.ndarray] = field(default_factory=list)
    lr_halved_at: int | None = None


def generate_blobs(config: TrainConfig, seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian clusters at fixed centers on a circle."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    angles = 2.0 * np.pi * np.arange(config.n_classes) / config.n_classes
    centers = np.zeros((config.n_classes, config.n_features))
    centers[:, 0] = config.cluster_radius * np.cos(angles)
    centers[:, 1 % config.n_features] = config.cluster_radius * np.sin(angles)
    xs, ys = [], []
    for c in range(config.n_classes):
        pts = centers[c] + config.cluster_spread * rng.standard_normal(
            (config.samples_per_class, config.n_features)
        )
        xs.append(pts)
        ys.append(np.full(config.samples_per_class, c, dtype=np.int64))
    return np.concatenate(xs), np.concatenate(ys)


def init_members(config: TrainConfig, identical: bool = False) -> np.ndarray:
    """Member weights (M, C, D+1); identical=True collapses the ensemble."""
    rng = np.random.default_rng(config.seed + 1)
    if identical:
        one = config.init_scale * rng.standard_normal((config.n_classes, config.n_features + 1))
        return np.tile(one, (config.n_members, 1, 1))
    return config.init_scale * rng.standard_normal(
        (config.n_members, config.n_classes, config.n_features + 1)
    )


def member_probs(weights: np.ndarray, features_aug: np.ndarray) -> np.ndarray:
    """Per-member softmax probabilities, shape (B, M, C)."""
    logits = np.einsum("mcd,bd->bmc", weights, features_aug)
    logits -= logits.max(axis=2, keepdims=True)
    expl = np.exp(logits)
    return expl / expl.sum(axis=2, keepdims=True)


def ensemble_forward(
    weights: np.ndarray, params: GateParams, features_aug: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray, "object"]:
    """Loss, member probabilities, and the gated-layer cache."""
    probs = member_probs(weights, features_aug)
    cache = vgn_forward(probs, params)
    value, _ = cross_entropy_on_mixture(labels)(cache.mixture)
    return value, probs, cache


def ensemble_gradients(
    weights: np.ndarray,
    params: GateParams,
    features_aug: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Loss plus gradients for weights and the raw gate parameters."""
    probs = member_probs(weights, features_aug)
    cache = vgn_forward(probs, params)
    value, grad_mix = cross_entropy_on_mixture(labels)(cache.mixture)
    grads = vgn_backward(cache, grad_mix)
    # backprop through each member softmax: dlogits = p * (dp - (p . dp))
    inner = np.einsum("bmc,bmc->bm", probs, grads.d_members)[:, :, None]
    dlogits = probs * (grads.d_members - inner)
    dweights = np.einsum("bmc,bd->mcd", dlogits, features_aug)
    return value, dweights, grads.d_raw, cache.mixture


def train_toy_ensemble(
    config: TrainConfig, initial_weights: np.ndarray | None = None
) -> tuple[list[ToyMember], GateParams, TrainHistory]:
    """Full-batch gradient descent on the mixture cross-entropy.

    The loss must not increase on this separable problem; the first
    increase halves the learning rate once, a second one raises
    :class:`Divergence`. Returns the trained members, gate parameters,
    and the per-epoch history.
    """
    features, labels = generate_blobs(config)
    features_aug = np.concatenate([features, np.ones((features.shape[0], 1))], axis=1)
    weights = init_members(config) if initial_weights is None else initial_weights.copy()
    raw = np.zeros(config.n_classes)
    history = TrainHistory()
    lr = config.learning_rate
    prev_loss = np.inf
    for epoch in range(config.epochs):
        params = GateParams(raw)
        value, dweights, draw, mix = ensemble_gradients(weights, params, features_aug, labels)
        if not np.isfinite(value):
            raise Divergence(f"loss became non-finite at epoch {epoch}")
        if value > prev_loss + 1e-12 * max(1.0, abs(prev_loss)):
            if history.lr_halved_at is None:
                lr *= 0.5
                history.lr_halved_at = epoch
            else:
                raise Divergence(
                    f"loss increased again after halving the learning rate (epoch {epoch})"
                )
        prev_loss = min(prev_loss, value)
        history.loss.append(value)
        history.accuracy.append(float((np.argmax(mix, axis=1) == labels).mean()))
        history.k.append(params.k.copy())
        weights = weights - lr * dweights
        if config.learn_k:
            raw = raw - lr * draw
    return [ToyMember(w) for w in weights], GateParams(raw), history
