"""Variance-gated normalization: forward pass and closed-form backward pass.

Forward: gate the members with the shared per-class gate, renormalize each
member, and average into the mixture. Backward: the gradient each member
receives splits additively into a direct normalization path plus indirect
paths through the ensemble mean and spread; the gate sensitivity ``k`` is
trained through its softplus reparameterization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ensemble import batch_array
from .errors import CacheMismatch, ShapeMismatch, TooFewMembers
from .gate import GateParams

logger = logging.getLogger(__name__)

Z_FLOOR = 1e-8
DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class VgnForwardCache:
    """Everything the backward pass needs, cached from one forward call."""

    members: np.ndarray  # (B, M, C) input probabilities
    params: GateParams
    mean: np.ndarray  # (B, C)
    spread: np.ndarray  # (B, C), stabilized: raw std + epsilon
    spread_raw: np.ndarray  # (B, C), Bessel-corrected std before epsilon
    gamma: np.ndarray  # (B, C), clamped below at gamma_min
    z: np.ndarray  # (B, M), member normalizers, floored
    gated: np.ndarray  # (B, M, C) gated member distributions
    mixture: np.ndarray  # (B, C)
    epsilon: float

    @property
    def n_members(self) -> int:
        return int(self.members.shape[1])


@dataclass(frozen=True)
class VgnGradients:
    """Member gradients with the additive path breakdown retained."""

    d_members: np.ndarray  # (B, M, C) = direct + via_mean + via_spread
    d_raw: np.ndarray  # (C,) gradient for the unconstrained gate parameters
    d_k: np.ndarray  # (C,)
    d_gamma: np.ndarray  # (B, C)
    direct: np.ndarray
    via_mean: np.ndarray
    via_spread: np.ndarray


def vgn_forward(
    batch, params: GateParams, epsilon: float = DEFAULT_EPSILON, z_floor: float = Z_FLOOR
) -> VgnForwardCache:
    """Gate, renormalize, and mix an ensemble batch.

    Normalizers that fall below ``z_floor`` are floored (logged, not fatal);
    gradients pass through the floor unchanged.
    """
    arr = batch_array(batch)
    b, m, c = arr.shape
    if m < 2:
        raise TooFewMembers(f"need M >= 2 members, got {m}")
    if params.n_classes != c:
        raise ShapeMismatch(f"gate has {params.n_classes} classes, batch has {c}")
    mean = arr.mean(axis=1)
    dev = arr - mean[:, None, :]
    spread_raw = np.sqrt((dev * dev).sum(axis=1) / (m - 1))
    spread = spread_raw + epsilon
    k = params.k
    gamma = 1.0 - np.exp(-mean / (k[None, :] * spread))
    gamma = np.maximum(gamma, params.gamma_min)
    weighted = arr * gamma[:, None, :]
    z_raw = weighted.sum(axis=2)
    degenerate = z_raw < z_floor
    if np.any(degenerate):
        logger.warning(
            "%d member normalizer(s) below %.1e floored", int(degenerate.sum()), z_floor
        )
    z = np.maximum(z_raw, z_floor)
    gated = weighted / z[:, :, None]
    return VgnForwardCache(
        members=arr,
        params=params,
        mean=mean,
        spread=spread,
        spread_raw=spread_raw,
        gamma=gamma,
        z=z,
        gated=gated,
        mixture=gated.mean(axis=1),
        epsilon=float(epsilon),
    )


def vgn_backward(cache: VgnForwardCache, upstream: np.ndarray) -> VgnGradients:
    """Closed-form reverse pass for a loss on the mixture.

    ``upstream`` is the loss gradient with respect to the mixture, shape
    (B, C). Each member receives upstream/M through the mixture; the member
    gradient is the exact sum of the direct, via-mean, and via-spread paths.
    """
    u = np.asarray(upstream, dtype=np.float64)
    p = cache.members
    b, m, c = p.shape
    if u.shape != (b, c):
        raise CacheMismatch(f"upstream has shape {u.shape}, cache expects {(b, c)}")
    gamma = cache.gamma
    z = cache.z[:, :, None]
    q = cache.gated
    s = cache.spread
    k = cache.params.k[None, :]

    # q_m^T u per member, shared by the direct path and the gate gradient
    qu = np.einsum("bmc,bc->bm", q, u)[:, :, None]
    centered = u[:, None, :] - qu
    direct = gamma[:, None, :] * centered / (m * z)

    # gate gradient accumulates over members (shared gate)
    d_gamma = (p * centered / z).sum(axis=1) / m

    one_minus = 1.0 - gamma
    d_mean = d_gamma * one_minus / (k * s)
    via_mean = np.broadcast_to((d_mean / m)[:, None, :], p.shape).copy()

    d_spread = -d_gamma * one_minus * cache.mean / (k * s**2)
    # exact Jacobian of the Bessel-corrected std: (p_m - mean) / ((M-1) S); the
    # epsilon floor only matters where the deviations are zero anyway
    s_raw = np.maximum(cache.spread_raw, cache.epsilon)[:, None, :]
    via_spread = d_spread[:, None, :] * (p - cache.mean[:, None, :]) / ((m - 1) * s_raw)

    d_k = -(d_gamma * one_minus * cache.mean / (cache.params.k[None, :] ** 2 * s)).sum(axis=0)
    d_raw = d_k / (1.0 + np.exp(-cache.params.raw))

    return VgnGradients(
        d_members=direct + via_mean + via_spread,
        d_raw=d_raw,
        d_k=d_k,
        d_gamma=d_gamma,
        direct=direct,
        via_mean=via_mean,
        via_spread=via_spread,
    )


def jvp_gate(cache: VgnForwardCache, direction: np.ndarray) -> np.ndarray:
    """Directional derivative of the gated members for a gate perturbation.

    dq_m = [p_m * dG - q_m (p_m . dG)] / Z_m, broadcast over the batch.
    """
    d = np.asarray(direction, dtype=np.float64)
    if d.shape != (cache.members.shape[2],):
        raise ShapeMismatch(f"direction has shape {d.shape}, expected ({cache.members.shape[2]},)")
    p = cache.members
    pd = np.einsum("bmc,c->bm", p, d)[:, :, None]
    return (p * d[None, None, :] - cache.gated * pd) / cache.z[:, :, None]


def cross_entropy_on_mixture(labels: np.ndarray) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    """Loss factory: mean negative log-likelihood of the mixture.

    Returns a callable mapping the mixture (B, C) to (value, gradient).
    """
    y = np.asarray(labels, dtype=np.int64)

    def loss(mixture: np.ndarray) -> tuple[float, np.ndarray]:
        bsz = mixture.shape[0]
        rows = np.arange(bsz)
        picked = np.maximum(mixture[rows, y], 1e-12)
        value = float(-np.log(picked).mean())
        grad = np.zeros_like(mixture)
        grad[rows, y] = -1.0 / (bsz * picked)
        return value, grad

    return loss


@dataclass(frozen=True)
class GradcheckReport:
    """Elementwise analytic-vs-numeric comparison from a gradcheck run."""

    member_errors: np.ndarray  # (B, M, C): one tangent direction per entry
    raw_errors: np.ndarray  # (C,)
    max_rel_error_members: float
    max_rel_error_raw: float
    h: float

    @property
    def max_rel_error(self) -> float:
        return max(self.max_rel_error_members, self.max_rel_error_raw)


def finite_diff_gradcheck(
    batch,
    params: GateParams,
    loss: Callable[[np.ndarray], tuple[float, np.ndarray]],
    h: float = 1e-5,
) -> GradcheckReport:
    """Compare the analytic backward pass against central finite differences.

    Member probabilities are perturbed along simplex tangent directions
    (+h on one class, -h on the next, no renormalization), which keeps the
    row sum exact; renormalizing after a raw perturbation would change the
    function being differentiated. Guaranteed accuracy holds for h in
    [1e-7, 1e-4]; values outside that window are allowed (to demonstrate
    the check is live) but warned about.
    """
    if h <= 0:
        raise ValueError("step size h must be positive")
    if not (1e-7 <= h <= 1e-4):
        logger.warning("step size %.1e outside the calibrated window [1e-7, 1e-4]", h)
    arr = batch_array(batch).copy()
    b, m, c = arr.shape

    cache = vgn_forward(arr, params)
    _, grad_mix = loss(cache.mixture)
    grads = vgn_backward(cache, grad_mix)

    def loss_value(p: np.ndarray, prm: GateParams) -> float:
        return loss(vgn_forward(p, prm).mixture)[0]

    member_fd = np.zeros((b, m, c))
    member_an = np.zeros((b, m, c))
    for bi in range(b):
        for mi in range(m):
            for ci in range(c):
                cj = (ci + 1) % c
                pert = arr.copy()
                pert[bi, mi, ci] += h
                pert[bi, mi, cj] -= h
                f_plus = loss_value(pert, params)
                pert = arr.copy()
                pert[bi, mi, ci] -= h
                pert[bi, mi, cj] += h
                f_minus = loss_value(pert, params)
                member_fd[bi, mi, ci] = (f_plus - f_minus) / (2 * h)
                member_an[bi, mi, ci] = (
                    grads.d_members[bi, mi, ci] - grads.d_members[bi, mi, cj]
                )

    raw_fd = np.zeros(c)
    for ci in range(c):
        raw = params.raw.copy()
        raw[ci] += h
        f_plus = loss_value(arr, GateParams(raw, params.k_min, params.gamma_min))
        raw = params.raw.copy()
        raw[ci] -= h
        f_minus = loss_value(arr, GateParams(raw, params.k_min, params.gamma_min))
        raw_fd[ci] = (f_plus - f_minus) / (2 * h)

    # Relative to the gradient scale: an entrywise floor keeps central-difference
    # roundoff on near-zero tangent components from masquerading as error.
    scale = max(float(np.abs(member_an).max()), float(np.abs(grads.d_raw).max()), 1e-12)
    floor = 1e-5 * scale

    def rel(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
        return np.abs(analytic - numeric) / denom

    member_errors = rel(member_an, member_fd)
    raw_errors = rel(grads.d_raw, raw_fd)
    return GradcheckReport(
        member_errors=member_errors,
        raw_errors=raw_errors,
        max_rel_error_members=float(member_errors.max()),
        max_rel_error_raw=float(raw_errors.max()),
        h=float(h),
    )
