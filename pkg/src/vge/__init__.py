"""Variance-gated ensembles: uncertainty scoring and gated normalization.

The package turns a batch of ensemble member distributions into
epistemic-aware uncertainty reports (entropy decomposition, pairwise
divergence baselines, margin-based VGMU with an abstention rule) and
provides a differentiable gated-normalization layer with a closed-form
backward pass for training through ensemble statistics.
"""

from .backend import ACTIVE as active_backend
from .ensemble import (
    EnsembleBatch,
    EnsembleMoments,
    ProbVector,
    ensemble_moments,
    mixture,
    validate_simplex,
)
from .errors import VgeError
from .gate import (
    GateOutput,
    GateParams,
    classify_region,
    compute_gate,
    gate_grad_k,
    gate_grad_mean,
    gate_grad_spread,
)
from .uncertainty import (
    ABSTAIN,
    UncertaintyReport,
    decompose,
    entropy,
    epjs,
    epkl,
    score_batch,
    snr_decision,
    vgmu,
)
from .vgn import (
    VgnForwardCache,
    VgnGradients,
    cross_entropy_on_mixture,
    finite_diff_gradcheck,
    jvp_gate,
    vgn_backward,
    vgn_forward,
)

__version__ = "0.1.0"

__all__ = [
    "ABSTAIN",
    "EnsembleBatch",
    "EnsembleMoments",
    "GateOutput",
    "GateParams",
    "ProbVector",
    "UncertaintyReport",
    "VgeError",
    "VgnForwardCache",
    "VgnGradients",
    "active_backend",
    "classify_region",
    "compute_gate",
    "cross_entropy_on_mixture",
    "decompose",
    "ensemble_moments",
    "entropy",
    "epjs",
    "epkl",
    "finite_diff_gradcheck",
    "gate_grad_k",
    "gate_grad_mean",
    "gate_grad_spread",
    "jvp_gate",
    "mixture",
    "score_batch",
    "snr_decision",
    "validate_simplex",
    "vgmu",
    "vgn_backward",
    "vgn_forward",
]
