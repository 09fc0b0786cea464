"""Simplex validation, ensemble batches, and moment computation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vge.ensemble import (
    EnsembleBatch,
    ensemble_moments,
    mixture,
    validate_simplex,
)
from vge.errors import (
    MassMismatch,
    NegativeMass,
    NonFinite,
    ShapeMismatch,
    TooFewMembers,
)


class TestValidateSimplex:
    def test_exact_point_accepted_unchanged(self):
        v = validate_simplex([0.5, 0.5], tol=1e-6)
        np.testing.assert_array_equal(v.values, [0.5, 0.5])

    def test_vertex_accepted(self):
        v = validate_simplex([1.0, 0.0, 0.0], tol=1e-6)
        np.testing.assert_array_equal(v.values, [1.0, 0.0, 0.0])

    def test_mass_mismatch(self):
        with pytest.raises(MassMismatch):
            validate_simplex([0.7, 0.4], tol=1e-6)

    def test_negative_mass(self):
        with pytest.raises(NegativeMass):
            validate_simplex([1.1, -0.1], tol=1e-6)

    def test_non_finite(self):
        with pytest.raises(NonFinite):
            validate_simplex([np.nan, 1.0])

    def test_tiny_negative_clipped_and_renormalized(self):
        v = validate_simplex([1.0 + 5e-7, -5e-7], tol=1e-6)
        assert v.values[1] == 0.0
        assert v.values.sum() == pytest.approx(1.0, abs=1e-15)

    def test_scalar_rejected(self):
        with pytest.raises(ShapeMismatch):
            validate_simplex([1.0])


class TestEnsembleBatch:
    def test_single_member_rejected(self):
        with pytest.raises(TooFewMembers):
            EnsembleBatch(np.full((2, 1, 3), 1.0 / 3.0))

    def test_bad_row_reported(self):
        data = np.full((1, 2, 2), 0.5)
        data[0, 1] = [0.7, 0.4]
        with pytest.raises(MassMismatch):
            EnsembleBatch(data)

    def test_shape_properties(self):
        batch = EnsembleBatch(np.full((4, 3, 2), 0.5))
        assert (batch.n_samples, batch.n_members, batch.n_classes) == (4, 3, 2)


class TestEnsembleMoments:
    def test_identical_members_zero_spread(self):
        batch = np.tile([0.8, 0.2], (1, 2, 1))
        mom = ensemble_moments(batch, epsilon=1e-8)
        np.testing.assert_allclose(mom.mean[0], [0.8, 0.2], rtol=0, atol=0)
        np.testing.assert_array_equal(mom.spread[0], [1e-8, 1e-8])

    def test_two_member_oracle(self):
        # direct formula: sqrt(((0.2)^2 + (0.2)^2) / 1) per class
        batch = np.array([[[0.9, 0.1], [0.5, 0.5]]])
        mom = ensemble_moments(batch)
        expected = math.sqrt((0.2**2 + 0.2**2) / 1)
        np.testing.assert_allclose(mom.mean[0], [0.7, 0.3], atol=1e-15)
        np.testing.assert_allclose(mom.spread[0], expected + 1e-8, rtol=1e-12)

    def test_vertex_ensemble_oracle(self):
        # direct formula with M=3: per class sqrt(((2/3)^2 + 2*(1/3)^2) / 2)
        batch = np.eye(3)[None, :, :]
        mom = ensemble_moments(batch)
        expected = math.sqrt(((2 / 3) ** 2 + 2 * (1 / 3) ** 2) / 2)
        assert expected == pytest.approx(math.sqrt(1 / 3), rel=1e-12)
        np.testing.assert_allclose(mom.mean[0], np.full(3, 1 / 3), rtol=1e-12)
        np.testing.assert_allclose(mom.spread[0], np.full(3, expected + 1e-8), rtol=1e-12)

    def test_single_member_rejected(self):
        with pytest.raises(TooFewMembers):
            ensemble_moments(np.full((1, 1, 2), 0.5))

    def test_mean_rows_on_simplex(self):
        rng = np.random.default_rng(3)
        batch = rng.dirichlet(np.ones(5), size=(50, 4))
        mom = ensemble_moments(batch)
        np.testing.assert_allclose(mom.mean.sum(axis=1), 1.0, atol=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(2, 6), st.integers(2, 5))
    def test_member_permutation_invariance(self, seed, m, c):
        rng = np.random.default_rng(seed)
        batch = rng.dirichlet(np.ones(c), size=(3, m))
        perm = rng.permutation(m)
        a = ensemble_moments(batch)
        b = ensemble_moments(batch[:, perm, :])
        # permutation only reorders the summations; differences are rounding
        np.testing.assert_allclose(a.mean, b.mean, rtol=1e-14, atol=1e-16)
        np.testing.assert_allclose(a.spread, b.spread, rtol=1e-13, atol=1e-16)

    def test_spread_at_least_epsilon(self):
        rng = np.random.default_rng(4)
        batch = rng.dirichlet(np.ones(4), size=(20, 3))
        mom = ensemble_moments(batch, epsilon=1e-8)
        assert np.all(mom.spread >= 1e-8)


class TestMixture:
    def test_symmetry(self):
        mix = mixture([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(mix.values, [0.5, 0.5])

    def test_identical_members(self):
        mix = mixture([[0.6, 0.4]] * 5)
        np.testing.assert_allclose(mix.values, [0.6, 0.4], rtol=1e-15)

    def test_three_member_oracle(self):
        # direct averaging
        members = np.array([[0.9, 0.1], [0.5, 0.5], [0.7, 0.3]])
        mix = mixture(members)
        np.testing.assert_allclose(mix.values, members.mean(axis=0), rtol=0, atol=0)
        np.testing.assert_allclose(mix.values, [0.7, 0.3], atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.integers(2, 5))
    def test_idempotence(self, seed, m, c):
        rng = np.random.default_rng(seed)
        v = rng.dirichlet(np.ones(c))
        mix = mixture(np.tile(v, (m, 1)))
        np.testing.assert_allclose(mix.values, v, rtol=1e-14)
