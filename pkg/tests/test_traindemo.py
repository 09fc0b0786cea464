"""End-to-end toy trainer: convergence, symmetry, and gradient checks."""

import numpy as np
import pytest

from vge.gate import GateParams
from vge.traindemo import (
    ToyMember,
    TrainConfig,
    ensemble_gradients,
    generate_blobs,
    init_members,
    member_probs,
    stack_members,
    train_toy_ensemble,
)
from vge.uncertainty import decompose


class TestBlobs:
    def test_deterministic_under_seed(self):
        cfg = TrainConfig()
        x1, y1 = generate_blobs(cfg, seed=5)
        x2, y2 = generate_blobs(cfg, seed=5)
        np.testing.assert_array_equal(x1, x2)
        np.testing.assert_array_equal(y1, y2)

    def test_balanced_counts(self):
        cfg = TrainConfig(n_classes=3, samples_per_class=100)
        x, y = generate_blobs(cfg)
        assert x.shape == (300, cfg.n_features)
        assert np.bincount(y).tolist() == [100, 100, 100]

    def test_zero_noise_is_separable(self):
        cfg = TrainConfig(cluster_spread=0.0, samples_per_class=10)
        x, y = generate_blobs(cfg)
        # every point sits exactly on its class center
        assert len({tuple(row) for row in x}) == cfg.n_classes


class TestTraining:
    def test_reaches_high_accuracy(self):
        _, params, history = train_toy_ensemble(TrainConfig())
        assert history.accuracy[-1] > 0.9
        assert len(history.loss) == 200
        assert np.all(np.asarray(params.k) >= 1e-3)

    def test_loss_non_increasing(self):
        _, _, history = train_toy_ensemble(TrainConfig())
        losses = np.asarray(history.loss)
        assert np.all(np.diff(losses) <= 1e-12)

    def test_fixed_k_also_converges(self):
        _, params, history = train_toy_ensemble(TrainConfig(learn_k=False))
        assert history.accuracy[-1] > 0.9
        np.testing.assert_allclose(params.k, np.log(2.0) + 1e-8, rtol=1e-9)

    def test_learned_k_moves_and_stays_finite(self):
        _, params, history = train_toy_ensemble(TrainConfig())
        assert np.all(np.isfinite(params.k))
        assert not np.allclose(params.k, history.k[0])

    def test_identical_initializations_stay_identical(self):
        cfg = TrainConfig(epochs=50)
        weights0 = init_members(cfg, identical=True)
        members, _, _ = train_toy_ensemble(cfg, initial_weights=weights0)
        assert all(isinstance(m, ToyMember) for m in members)
        weights = stack_members(members)
        for m in range(1, cfg.n_members):
            np.testing.assert_array_equal(weights[0], weights[m])
        # epistemic uncertainty stays zero for the trained ensemble
        x, _ = generate_blobs(cfg)
        xa = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
        probs = member_probs(weights, xa)
        for b in range(0, probs.shape[0], 37):
            _, _, eu = decompose(probs[b])
            assert abs(eu) <= 1e-12

    def test_history_k_tracks_training(self):
        _, _, history = train_toy_ensemble(TrainConfig(epochs=10))
        assert len(history.k) == 10
        assert history.k[0] == pytest.approx(np.log(2.0) + 1e-8, rel=1e-9)


class TestEndToEndGradient:
    def test_matches_finite_differences_at_init(self):
        cfg = TrainConfig(
            n_members=2, n_classes=3, n_features=2, samples_per_class=5, seed=3
        )
        x, y = generate_blobs(cfg)
        xa = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
        weights = init_members(cfg)
        raw = np.zeros(cfg.n_classes)

        def loss_at(w, r):
            from vge.vgn import cross_entropy_on_mixture, vgn_forward

            probs = member_probs(w, xa)
            cache = vgn_forward(probs, GateParams(r))
            return cross_entropy_on_mixture(y)(cache.mixture)[0]

        value, dweights, draw, _ = ensemble_gradients(weights, GateParams(raw), xa, y)
        assert np.isfinite(value)

        h = 1e-6
        worst = 0.0
        for idx in np.ndindex(weights.shape):
            wp = weights.copy()
            wp[idx] += h
            wm = weights.copy()
            wm[idx] -= h
            fd = (loss_at(wp, raw) - loss_at(wm, raw)) / (2 * h)
            denom = max(abs(fd), abs(dweights[idx]), 1e-8)
            worst = max(worst, abs(fd - dweights[idx]) / denom)
        for c in range(cfg.n_classes):
            rp = raw.copy()
            rp[c] += h
            rm = raw.copy()
            rm[c] -= h
            fd = (loss_at(weights, rp) - loss_at(weights, rm)) / (2 * h)
            denom = max(abs(fd), abs(draw[c]), 1e-8)
            worst = max(worst, abs(fd - draw[c]) / denom)
        assert worst < 1e-4
