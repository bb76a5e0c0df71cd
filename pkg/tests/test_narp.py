import itertools

import numpy as np
import pytest
from scipy import stats as sps

from artkit.core import ExperimentRecord, PolicyMismatchError, SeedPlan
from artkit.narp import narp_resample, record_id
from artkit.policies import (
    AdaptivePolicy,
    TwoStageConfig,
    iid_policy,
    two_stage_policy,
)


class LogisticMemoryPolicy(AdaptivePolicy):
    """Binary treatment with P(X_t=1) = sigmoid(sum of y_s over past x_s=1).

    Deliberately has no vectorized resample kernel, so it exercises the
    per-resample replay path.
    """

    n_x_arms = 2
    policy_id = "logistic-memory(p=2)"

    def x_rule(self, view, rng):
        score = float(np.dot(view.y_hist, view.x_hist))
        p1 = 1.0 / (1.0 + np.exp(-score))
        return np.array([1.0 - p1, p1])


def replay_path_probability(path, y):
    """Independent enumeration of the replay law for LogisticMemoryPolicy."""
    prob = 1.0
    for t, xt in enumerate(path):
        score = sum(y[s] for s in range(t) if path[s] == 1)
        p1 = 1.0 / (1.0 + np.exp(-score))
        prob *= p1 if xt == 1 else 1.0 - p1
    return prob


def make_record(policy, x, y, z=None, seed=99):
    return ExperimentRecord(
        x=np.asarray(x, np.int64), z=z, y=np.asarray(y, np.float64),
        n=len(x), policy_id=policy.policy_id, seed=seed,
    )


class TestGenericReplayExactness:
    def test_three_step_law_matches_enumeration(self):
        policy = LogisticMemoryPolicy()
        y = [1.2, -0.7, 0.4]
        record = make_record(policy, [1, 0, 1], y)

        paths = list(itertools.product([0, 1], repeat=3))
        expected = np.array([replay_path_probability(p, y) for p in paths])
        assert expected.sum() == pytest.approx(1.0)

        B = 100_000
        bundle = narp_resample(policy, record, B, SeedPlan(17))
        codes = bundle.resamples @ np.array([4, 2, 1])
        counts = np.bincount(codes, minlength=8)
        chi2 = sps.chisquare(counts, expected * B)
        assert chi2.pvalue > 0.001

    def test_replay_never_reads_observed_treatments(self):
        policy = LogisticMemoryPolicy()
        y = [0.5, 0.5, 0.5]
        a = narp_resample(policy, make_record(policy, [0, 0, 0], y), 500, SeedPlan(3))
        b = narp_resample(policy, make_record(policy, [1, 1, 1], y), 500, SeedPlan(3))
        np.testing.assert_array_equal(a.resamples, b.resamples)


class TestBundleContract:
    def test_policy_mismatch_rejected(self):
        policy = LogisticMemoryPolicy()
        record = make_record(policy, [0, 1], [0.0, 1.0])
        with pytest.raises(PolicyMismatchError):
            narp_resample(iid_policy(np.array([0.5, 0.5])), record, 10, SeedPlan(0))

    def test_out_of_domain_arms_rejected(self):
        policy = LogisticMemoryPolicy()
        record = make_record(policy, [0, 3], [0.0, 1.0])
        with pytest.raises(ValueError):
            narp_resample(policy, record, 10, SeedPlan(0))

    def test_bundle_is_deterministic(self):
        policy = LogisticMemoryPolicy()
        record = make_record(policy, [0, 1, 1], [0.3, 0.6, 0.9])
        a = narp_resample(policy, record, 50, SeedPlan(5))
        b = narp_resample(policy, record, 50, SeedPlan(5))
        np.testing.assert_array_equal(a.resamples, b.resamples)
        assert a.source_record_id == b.source_record_id == record_id(record)

    def test_b_must_be_positive(self):
        policy = LogisticMemoryPolicy()
        record = make_record(policy, [0], [0.0])
        with pytest.raises(ValueError):
            narp_resample(policy, record, 0, SeedPlan(0))


def stage_counts(resamples, n1, p):
    first = np.bincount(resamples[:, :n1].ravel(), minlength=p)
    second = np.bincount(resamples[:, n1:].ravel(), minlength=p)
    return first, second


class TestTwoStageResampleLaw:
    """The vectorized kernel and the generic replay must share one law."""

    CFG = TwoStageConfig(n=24, epsilon=0.5, q=np.array([0.25, 0.25, 0.25, 0.25]),
                         t_scale=0.3)

    def _record(self):
        policy = two_stage_policy(self.CFG)
        rng = np.random.default_rng(123)
        x = rng.integers(0, 4, self.CFG.n)
        y = rng.normal(size=self.CFG.n) + (x == 2) * 1.5
        return policy, make_record(policy, x, y)

    def _expected_second_stage(self, policy, record, resamples):
        n1 = self.CFG.n_explore
        n2 = self.CFG.n - n1
        total = np.zeros(policy.n_x_arms)
        for row in resamples:
            Q, _ = policy.reweight(row[:n1], record.y[:n1])
            total += n2 * Q
        return total

    @pytest.mark.parametrize("use_batch", [True, False])
    def test_conditional_law(self, use_batch):
        policy, record = self._record()
        if not use_batch:
            policy.narp_batch = None
        B = 3000
        bundle = narp_resample(policy, record, B, SeedPlan(8))
        n1 = self.CFG.n_explore
        first, second = stage_counts(bundle.resamples, n1, 4)

        # stage 1 is iid q regardless of history
        chi2 = sps.chisquare(first, self.CFG.q * B * n1)
        assert chi2.pvalue > 0.001

        # stage 2 matches the per-resample reweighted law
        expected = self._expected_second_stage(policy, record, bundle.resamples)
        se = np.sqrt(np.maximum(expected * (1 - expected / expected.sum()), 1.0))
        assert (np.abs(second - expected) < 5 * se).all()

    def test_batch_and_generic_distributions_agree(self):
        policy, record = self._record()
        fast = narp_resample(policy, record, 4000, SeedPlan(8))
        policy.narp_batch = None
        slow = narp_resample(policy, record, 4000, SeedPlan(9))
        n1 = self.CFG.n_explore
        _, second_fast = stage_counts(fast.resamples, n1, 4)
        _, second_slow = stage_counts(slow.resamples, n1, 4)
        total = second_fast.sum()
        diff = (second_fast - second_slow) / total
        assert (np.abs(diff) < 0.02).all()
