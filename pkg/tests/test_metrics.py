"""Metric implementations against brute-force reference oracles."""

import numpy as np
import pytest
from oracles import (
    aucc_oracle,
    ece_oracle,
    fpr95_oracle,
    kendall_oracle,
    roc_auc_oracle,
    spearman_oracle,
)

from vge.errors import (
    AllZero,
    DegenerateVariance,
    EmptySet,
    LengthMismatch,
    TooFewMembers,
)
from vge.metrics import (
    accuracy_f1,
    aucc,
    diversity,
    ece,
    kendall,
    roc_auc_fpr95,
    spearman,
)


class TestSpearman:
    def test_identity_and_reversal(self):
        assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_textbook_example(self):
        # 1 - 6 * sum(d^2) / (n (n^2 - 1)) with d = rank differences
        d2 = sum((a - b) ** 2 for a, b in zip([1, 2, 3, 4], [1, 3, 2, 4]))
        expected = 1 - 6 * d2 / (4 * 15)
        assert expected == pytest.approx(0.8)
        assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_degenerate_and_length_errors(self):
        with pytest.raises(DegenerateVariance):
            spearman([1, 1, 1], [1, 2, 3])
        with pytest.raises(LengthMismatch):
            spearman([1, 2], [1, 2, 3])
        with pytest.raises(LengthMismatch):
            spearman([1], [1])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(30)
        b = rng.standard_normal(30)
        assert spearman(a, b) == pytest.approx(spearman(np.exp(a), b), abs=1e-12)
        assert kendall(a, b) == pytest.approx(kendall(a, b**3 + 5 * b), abs=1e-12)


class TestKendall:
    def test_textbook_example(self):
        assert kendall([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3, abs=1e-12)

    def test_identity_and_reversal(self):
        assert kendall([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
        assert kendall([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


class TestAucc:
    def test_equal_scores_no_concentration(self):
        for n in (3, 10, 50):
            value = aucc([1.0] * n)
            assert abs(value - 0.5) <= 1 / (2 * n) + 1e-12

    def test_single_spike(self):
        for n in (2, 5, 20):
            scores = [0.0] * (n - 1) + [3.0]
            assert aucc(scores) == pytest.approx(1 - 1 / (2 * n), abs=1e-12)

    def test_three_two_one_oracle(self):
        assert aucc_oracle([3, 2, 1]) == pytest.approx(11 / 18, abs=1e-12)
        assert aucc([3, 2, 1]) == pytest.approx(aucc_oracle([3, 2, 1]), abs=1e-12)

    def test_scale_and_permutation_invariance(self):
        rng = np.random.default_rng(1)
        s = rng.uniform(0, 5, size=17)
        assert aucc(s) == pytest.approx(aucc(7.3 * s), abs=1e-12)
        assert aucc(s) == pytest.approx(aucc(rng.permutation(s)), abs=1e-12)

    def test_errors(self):
        with pytest.raises(AllZero):
            aucc([0.0, 0.0])
        with pytest.raises(ValueError):
            aucc([1.0, -0.5])


class TestEce:
    def test_two_sample_hand_value(self):
        assert ece([0.9, 0.6], [True, False], bins=10) == pytest.approx(0.35, abs=1e-12)

    def test_all_confident_half_correct(self):
        assert ece([1.0] * 4, [True, True, False, False], bins=15) == pytest.approx(0.5)

    def test_perfectly_calibrated_bins(self):
        conf = [0.25] * 4 + [0.75] * 4
        correct = [True, False, False, False, True, True, True, False]
        assert ece(conf, correct, bins=2) == pytest.approx(0.0, abs=1e-12)

    def test_single_bin_identity(self):
        rng = np.random.default_rng(2)
        conf = rng.uniform(0, 1, 40)
        correct = rng.uniform(0, 1, 40) < conf
        expected = abs(correct.mean() - conf.mean())
        assert ece(conf, correct, bins=1) == pytest.approx(expected, abs=1e-12)


class TestDiversity:
    def test_identical_members(self):
        assert diversity(np.tile([0.5, 0.5], (3, 4, 1))) == 0.0

    def test_opposite_vertices(self):
        batch = np.array([[[1.0, 0.0], [0.0, 1.0]]])
        assert diversity(batch) == pytest.approx(0.5, abs=1e-12)

    def test_member_permutation_invariance(self):
        rng = np.random.default_rng(3)
        batch = rng.dirichlet(np.ones(3), size=(5, 4))
        assert diversity(batch) == pytest.approx(
            diversity(batch[:, rng.permutation(4), :]), rel=1e-12
        )

    def test_needs_two_members(self):
        with pytest.raises(TooFewMembers):
            diversity(np.full((2, 1, 2), 0.5))


class TestAccuracyF1:
    def test_perfect_and_zero(self):
        assert accuracy_f1([0, 1, 2], [0, 1, 2], 3) == (1.0, 1.0)
        acc, f1 = accuracy_f1([1, 2, 0], [0, 1, 2], 3)
        assert (acc, f1) == (0.0, 0.0)

    def test_hand_confusion_matrix(self):
        acc, f1 = accuracy_f1([0, 0, 1, 1], [0, 1, 1, 1], 2)
        assert acc == pytest.approx(0.75)
        assert f1 == pytest.approx((2 / 3 + 4 / 5) / 2, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            accuracy_f1([0, 1], [0], 2)


class TestRocAucFpr95:
    def test_fully_separated(self):
        auc, fpr = roc_auc_fpr95([0.1, 0.2], [0.8, 0.9])
        assert (auc, fpr) == (1.0, 0.0)

    def test_identical_distributions(self):
        auc, _ = roc_auc_fpr95([0.3, 0.5, 0.7], [0.3, 0.5, 0.7])
        assert auc == pytest.approx(0.5, abs=1e-12)

    def test_pair_counting_example(self):
        auc, _ = roc_auc_fpr95([0.1, 0.2, 0.3], [0.25, 0.35, 0.4])
        assert auc == pytest.approx(8 / 9, abs=1e-12)

    def test_empty_set(self):
        with pytest.raises(EmptySet):
            roc_auc_fpr95([], [0.5])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(4)
        id_s = rng.standard_normal(25)
        ood_s = rng.standard_normal(25) + 0.5
        a1, _ = roc_auc_fpr95(id_s, ood_s)
        a2, _ = roc_auc_fpr95(np.tanh(id_s), np.tanh(ood_s))
        assert a1 == pytest.approx(a2, abs=1e-12)


class TestAgainstOracles:
    """Randomized small inputs against the brute-force references."""

    def test_rank_and_concentration_oracles(self):
        rng = np.random.default_rng(123)
        for trial in range(200):
            n = int(rng.integers(2, 21))
            # integer-valued draws produce plenty of ties
            a = rng.integers(0, 6, size=n).astype(float)
            b = rng.integers(0, 6, size=n).astype(float)
            if np.all(a == a[0]) or np.all(b == b[0]):
                continue
            assert spearman(a, b) == pytest.approx(spearman_oracle(a, b), abs=1e-12)
            assert kendall(a, b) == pytest.approx(kendall_oracle(a, b), abs=1e-12)
            s = rng.uniform(0, 3, size=n)
            if s.sum() > 0:
                assert aucc(s) == pytest.approx(aucc_oracle(s), abs=1e-12)

    def test_ece_and_roc_oracles(self):
        rng = np.random.default_rng(321)
        for trial in range(200):
            n = int(rng.integers(1, 21))
            conf = np.round(rng.uniform(0, 1, n), 2)
            correct = rng.uniform(0, 1, n) < 0.5
            bins = int(rng.integers(1, 16))
            assert ece(conf, correct, bins) == pytest.approx(
                ece_oracle(conf, correct, bins), abs=1e-12
            )
            n_i = int(rng.integers(1, 21))
            n_o = int(rng.integers(1, 21))
            id_s = np.round(rng.uniform(0, 1, n_i), 1)
            ood_s = np.round(rng.uniform(0, 1, n_o), 1)
            auc, fpr = roc_auc_fpr95(id_s, ood_s)
            assert auc == pytest.approx(roc_auc_oracle(id_s, ood_s), abs=1e-12)
            assert fpr == pytest.approx(fpr95_oracle(id_s, ood_s), abs=1e-12)
