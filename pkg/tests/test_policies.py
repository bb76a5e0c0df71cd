import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artkit.core import SeedPlan, derive_stream
from artkit.policies import (
    HistoryView,
    IidPolicy,
    PolicyError,
    TwoStageConfig,
    apply_reweight,
    arm_means,
    categorical,
    iid_policy,
    product_policy,
    run_experiment,
    two_stage_policy,
)


class ConstantResponse:
    """y = x as a float, handy for checking bookkeeping."""

    def __call__(self, x, z, rng):
        return float(x)

    def sample_batch(self, x, z, rng):
        return np.asarray(x, dtype=np.float64)


class TestCategorical:
    def test_matches_weights(self):
        rng = np.random.default_rng(0)
        w = np.array([0.2, 0.5, 0.3])
        draws = categorical(rng, w, 200_000)
        freq = np.bincount(draws, minlength=3) / len(draws)
        np.testing.assert_allclose(freq, w, atol=0.01)

    def test_scalar_draw(self):
        rng = np.random.default_rng(0)
        v = categorical(rng, np.array([0.0, 1.0]))
        assert v == 1

    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=25, deadline=None)
    def test_support_is_valid(self, p, seed):
        rng = np.random.default_rng(seed)
        w = rng.dirichlet(np.ones(p))
        draws = categorical(np.random.default_rng(seed + 1), w, 100)
        assert ((draws >= 0) & (draws < p)).all()


class TestReweight:
    def test_exp_is_shift_stable(self):
        v = np.array([700.0, 710.0, 705.0])
        out = apply_reweight("exp", v)
        assert np.isfinite(out).all()
        ratio = out[1] / out[0]
        assert ratio == pytest.approx(np.exp(10.0))

    def test_identity_positive_clips(self):
        out = apply_reweight("identity-positive", np.array([-1.0, 0.5, 2.0]))
        np.testing.assert_allclose(out, [0.0, 0.5, 2.0])

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            apply_reweight("cubic", np.ones(2))


class TestIidPolicy:
    def test_record_shape_and_id(self):
        pol = iid_policy(np.array([0.5, 0.5]))
        rec = run_experiment(pol, ConstantResponse(), 10, SeedPlan(1))
        assert rec.n == 10
        assert rec.z is None
        assert rec.policy_id == pol.policy_id
        assert rec.policy_id.startswith("iid(p=2,")

    def test_run_is_deterministic(self):
        pol = iid_policy(np.array([0.3, 0.7]))
        a = run_experiment(pol, ConstantResponse(), 25, SeedPlan(3))
        b = run_experiment(pol, ConstantResponse(), 25, SeedPlan(3))
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)
        assert a.seed == b.seed

    def test_z_weights_give_z_column(self):
        pol = iid_policy(np.array([0.5, 0.5]), z_weights=np.array([0.25, 0.75]))
        rec = run_experiment(pol, ConstantResponse(), 30, SeedPlan(2))
        assert rec.z is not None
        assert ((rec.z >= 0) & (rec.z < 2)).all()


class TestTwoStagePolicy:
    def test_explore_stage_uses_q(self):
        cfg = TwoStageConfig(n=40, epsilon=0.5, q=np.array([0.5, 0.5]), t_scale=5.0)
        pol = two_stage_policy(cfg)
        assert cfg.n_explore == 20
        rng = derive_stream(SeedPlan(0), "x")
        view = HistoryView(x_hist=np.zeros(5, np.int64), z_hist=None, y_hist=np.zeros(5))
        np.testing.assert_allclose(pol.x_rule(view, rng), cfg.q)

    def test_second_stage_tilts_toward_high_mean_arm(self):
        cfg = TwoStageConfig(n=40, epsilon=0.5, q=np.array([0.5, 0.5]), t_scale=1.0)
        pol = two_stage_policy(cfg)
        x_hist = np.array([0] * 10 + [1] * 10, dtype=np.int64)
        y_hist = np.array([0.0] * 10 + [2.0] * 10)
        view = HistoryView(x_hist=x_hist, z_hist=None, y_hist=y_hist)
        w = pol.x_rule(view, derive_stream(SeedPlan(0), "x"))
        assert w[1] > w[0]

    def test_empty_arm_diagnostic(self):
        cfg = TwoStageConfig(n=12, epsilon=0.25, q=np.array([0.98, 0.01, 0.01]),
                             t_scale=0.5)
        pol = two_stage_policy(cfg)
        x = np.zeros(12, dtype=np.int64)
        y = np.linspace(0, 1, 12)
        from artkit.core import ExperimentRecord

        rec = ExperimentRecord(x=x, z=None, y=y, n=12, policy_id=pol.policy_id, seed=0)
        diag = pol.record_diagnostics(rec)
        assert diag["empty_first_stage_arms"] == 2

    def test_wrong_n_rejected(self):
        cfg = TwoStageConfig(n=40, epsilon=0.5, q=np.array([0.5, 0.5]), t_scale=1.0)
        pol = two_stage_policy(cfg)
        with pytest.raises(PolicyError):
            run_experiment(pol, ConstantResponse(), 13, SeedPlan(0))

    def test_fast_and_generic_paths_agree(self):
        cfg = TwoStageConfig(n=30, epsilon=0.4, q=np.array([0.25, 0.25, 0.5]),
                             t_scale=0.8)
        pol = two_stage_policy(cfg)
        fast = run_experiment(pol, ConstantResponse(), 30, SeedPlan(11))

        slow_pol = two_stage_policy(cfg)
        slow_pol.simulate_record = None  # force the per-step path
        slow = run_experiment(slow_pol, ConstantResponse(), 30, SeedPlan(11))
        np.testing.assert_array_equal(fast.x, slow.x)
        np.testing.assert_array_equal(fast.y, slow.y)

    def test_epsilon_bounds_validated(self):
        with pytest.raises(ValueError):
            TwoStageConfig(n=10, epsilon=0.0, q=np.array([0.5, 0.5]), t_scale=1.0)
        with pytest.raises(ValueError):
            TwoStageConfig(n=10, epsilon=1.0, q=np.array([0.5, 0.5]), t_scale=1.0)


class TestArmMeans:
    def test_means_and_counts(self):
        x = np.array([0, 0, 2], dtype=np.int64)
        y = np.array([1.0, 3.0, 5.0])
        means, counts = arm_means(x, y, 3)
        np.testing.assert_allclose(means, [2.0, 0.0, 5.0])
        np.testing.assert_allclose(counts, [2, 0, 1])


class TestProductPolicy:
    def test_joint_weights_are_outer_product(self):
        a = iid_policy(np.array([0.2, 0.8]))
        b = iid_policy(np.array([0.5, 0.5]))
        joint = product_policy([a, b])
        assert joint.n_x_arms == 4
        view = HistoryView(
            x_hist=np.zeros(0, np.int64), z_hist=None, y_hist=np.zeros(0)
        )
        w = joint.x_rule(view, derive_stream(SeedPlan(0), "x"))
        np.testing.assert_allclose(w, [0.1, 0.1, 0.4, 0.4])

    def test_split_arm_roundtrip(self):
        a = iid_policy(np.array([0.2, 0.8]))
        b = iid_policy(np.array([0.3, 0.3, 0.4]))
        joint = product_policy([a, b])
        for arm in range(6):
            parts = joint.split_arm(arm)
            assert arm == parts[0] * 3 + parts[1]

    def test_component_histories_are_isolated(self):
        # each component's rule sees only its own past arms
        seen = []

        class Probe(IidPolicy):
            def x_rule(self, view, rng):
                seen.append(np.array(view.x_hist))
                return super().x_rule(view, rng)

        a = Probe(np.array([0.5, 0.5]))
        b = iid_policy(np.array([0.5, 0.5]))
        joint = product_policy([a, b])
        run_experiment(joint, ConstantResponse(), 4, SeedPlan(5))
        assert all((h >= 0).all() and (h < 2).all() for h in seen)
        assert [len(h) for h in seen] == [0, 1, 2, 3]
