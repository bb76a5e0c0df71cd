import csv
import dataclasses
import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from artkit.core import PolicyMismatchError, SeedPlan
from artkit.conjoint import (
    ArmState,
    ConjointAdaptivePolicy,
    ConjointResponseModel,
    ProfilePair,
    ReplayExhaustedError,
    conjoint_adaptive_policy,
    conjoint_iid_policy,
    ingest_replay_dataset,
    make_statistic,
    pair_code,
    pair_levels,
    replay_experiment,
    replay_power,
    simulate_conjoint_power,
)
from artkit.narp import narp_resample
from artkit.policies import run_experiment


def sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


MODEL = ConjointResponseModel(beta_x=0.6, beta_z=0.6, beta_xz=0.9)


def prob(xl, xr, zl, zr, model=MODEL):
    xc, zc = ProfilePair(xl, xr, zl, zr).codes(model.K, model.L)
    return float(model.probability(xc, zc))


class TestPairCodes:
    @pytest.mark.parametrize("width", [2, 4])
    def test_roundtrip(self, width):
        codes = np.arange(width * width)
        left, right = pair_levels(codes, width)
        np.testing.assert_array_equal(pair_code(left, right, width), codes)
        assert left.min() == 1 and left.max() == width

    def test_profile_pair_codes(self):
        assert ProfilePair(1, 3, 2, 4).codes(4, 4) == (2, 7)

    def test_profile_pair_validation(self):
        with pytest.raises(ValueError, match="x_left"):
            ProfilePair(0, 3, 2, 4).codes(4, 4)
        with pytest.raises(ValueError, match="z_right"):
            ProfilePair(1, 3, 2, 5).codes(4, 4)


class TestResponseModel:
    def test_single_main_effect(self):
        # left shows the X signal level, everything else neutral
        assert prob(1, 3, 3, 3) == pytest.approx(sigmoid(0.6))
        assert prob(1, 3, 3, 3) == pytest.approx(0.645656, abs=1e-6)
        assert prob(3, 3, 1, 3) == pytest.approx(sigmoid(0.6))

    def test_main_effects_stack_with_interaction(self):
        # left profile is exactly (X, Z) = (1, 2): X main plus interaction
        assert prob(1, 3, 2, 3) == pytest.approx(sigmoid(0.6 + 0.9))

    def test_interaction_fires_alone(self):
        # both sides show X level 1 (main cancels); Z levels 2 vs 3 carry no
        # main effect, yet only the left side forms the (1, 2) combination
        assert prob(1, 1, 2, 3) == pytest.approx(sigmoid(0.9))

    def test_interaction_cancels_when_both_sides_hit(self):
        assert prob(1, 1, 2, 2) == pytest.approx(0.5)

    def test_neutral_pairs(self):
        assert prob(3, 3, 3, 3) == pytest.approx(0.5)
        assert prob(2, 2, 4, 4) == pytest.approx(0.5)

    def test_swap_symmetry_everywhere(self):
        table = MODEL.probability_table
        xl, xr = pair_levels(np.arange(16), 4)
        zl, zr = pair_levels(np.arange(16), 4)
        x_swap = pair_code(xr, xl, 4)
        z_swap = pair_code(zr, zl, 4)
        swapped = table[np.ix_(x_swap, z_swap)]
        np.testing.assert_allclose(table + swapped, 1.0, atol=1e-15)

    def test_table_matches_pointwise(self):
        table = MODEL.probability_table
        assert table.shape == (16, 16)
        for xc in (0, 5, 11):
            for zc in (2, 7, 15):
                assert table[xc, zc] == MODEL.probability(xc, zc)

    def test_zero_betas_are_coin_flips(self):
        null = ConjointResponseModel(0.0, 0.0, 0.0)
        np.testing.assert_allclose(null.probability_table, 0.5)

    def test_sampling_law(self):
        rng = np.random.default_rng(5)
        x = np.full(40_000, 2)  # levels (1, 3)
        z = np.full(40_000, 10)  # levels (3, 3)
        ys = MODEL.sample_batch(x, z, rng)
        assert set(np.unique(ys)) <= {0.0, 1.0}
        assert ys.mean() == pytest.approx(sigmoid(0.6), abs=0.01)


class TestArmState:
    def test_empty_arms_read_neutral(self):
        np.testing.assert_allclose(ArmState(3).means(), 0.5)

    def test_accumulation(self):
        st = ArmState(3)
        st.seed_from(np.array([0, 0, 2]), np.array([1.0, 0.0, 1.0]))
        st.update(2, 0.0)
        np.testing.assert_allclose(st.means(), [0.5, 0.5, 0.5])
        st.update(0, 1.0)
        assert st.means()[0] == pytest.approx(2 / 3)


class TestAdaptivePolicy:
    def test_constructor_validation(self):
        with pytest.raises(ValueError):
            conjoint_adaptive_policy(0.0, n=100)
        with pytest.raises(ValueError):
            conjoint_adaptive_policy(0.5, n=1)
        with pytest.raises(ValueError):
            # floor(n * eps) = 0 leaves no exploration stage
            conjoint_adaptive_policy(0.05, n=10)

    def test_explore_stage_is_uniform(self):
        pol = conjoint_adaptive_policy(0.5, K=2, L=2, n=20)
        rng = np.random.default_rng(0)
        w = pol._stage_weights(np.arange(5), np.ones(5), 4, rng)
        np.testing.assert_allclose(w, 0.25)

    def test_reweighting_favors_decisive_arms(self):
        pol = conjoint_adaptive_policy(0.5, K=2, L=2, n=20)
        rng = np.random.default_rng(0)
        hist = np.array([0] * 6 + [1] * 6)
        ys = np.array([1.0] * 6 + [0.5] * 6)  # arm 0 decisive, arm 1 neutral
        w = pol._stage_weights(hist, ys, 4, rng)
        assert w.sum() == pytest.approx(1.0)
        assert w[0] > 0.5
        assert w[1] < 0.1

    def test_simulate_record_rejects_other_lengths(self):
        pol = conjoint_adaptive_policy(0.5, K=2, L=2, n=20)
        with pytest.raises(ValueError, match="n=20"):
            pol.simulate_record(MODEL, 12, np.random.default_rng(0))


class SmallModel(ConjointResponseModel):
    pass


class GenericResamplePolicy(ConjointAdaptivePolicy):
    narp_batch = None  # force the per-replication reference path


@pytest.fixture(scope="module")
def record():
    model = ConjointResponseModel(0.6, 0.6, 0.9, K=2, L=2)
    pol = conjoint_adaptive_policy(0.5, 2, 2, 24)
    return run_experiment(pol, model, 24, SeedPlan(21))


class TestResampleLaw:
    """The vectorized resampler must match the per-step reference path."""

    K = L = 2
    N = 24
    B = 4000

    def frequencies(self, record, policy):
        out = narp_resample(policy, record, self.B, SeedPlan(22))
        freq = np.empty((self.N, 4))
        for t in range(self.N):
            freq[t] = np.bincount(out.resamples[:, t], minlength=4) / self.B
        return out, freq

    def test_batch_agrees_with_reference(self, record):
        fast_pol = conjoint_adaptive_policy(0.5, self.K, self.L, self.N)
        slow_pol = GenericResamplePolicy(0.5, self.K, self.L, self.N)
        out_fast, freq_fast = self.frequencies(record, fast_pol)
        out_slow, freq_slow = self.frequencies(record, slow_pol)
        assert np.abs(freq_fast - freq_slow).max() < 0.04

        n1 = fast_pol.n_explore
        pooled = np.bincount(out_fast.resamples[:, :n1].ravel(), minlength=4)
        chi = sps.chisquare(pooled)
        assert chi.pvalue > 0.001  # exploration stage resamples uniformly

    def test_resamples_ignore_observed_treatments(self, record):
        pol = conjoint_adaptive_policy(0.5, self.K, self.L, self.N)
        twin = dataclasses.replace(record, x=(record.x + 1) % 4)
        a = narp_resample(pol, record, 50, SeedPlan(23))
        b = narp_resample(pol, twin, 50, SeedPlan(23))
        np.testing.assert_array_equal(a.resamples, b.resamples)


class TestFastSimulationLaw:
    """Batched record simulation must match the per-step path in law."""

    def test_stage_frequencies_agree(self):
        K = L = 2
        n, reps = 16, 400
        model = ConjointResponseModel(0.6, 0.6, 0.9, K=K, L=L)

        class GenericOnly(ConjointAdaptivePolicy):
            simulate_record = None

        counts = {}
        for name, builder in (
            ("fast", lambda: conjoint_adaptive_policy(0.5, K, L, n)),
            ("slow", lambda: GenericOnly(0.5, K, L, n)),
        ):
            explore = np.zeros(4)
            adapt = np.zeros(4)
            for i in range(reps):
                rec = run_experiment(builder(), model, n, SeedPlan(900 + i))
                explore += np.bincount(rec.x[:8], minlength=4)
                adapt += np.bincount(rec.x[8:], minlength=4)
            counts[name] = (explore / explore.sum(), adapt / adapt.sum())
        for stage in (0, 1):
            diff = np.abs(counts["fast"][stage] - counts["slow"][stage]).max()
            assert diff < 0.05
        # exploration is uniform; adaptation tilts away from it (the
        # horizon here is short, so the tilt is modest but real)
        assert np.abs(counts["fast"][0] - 0.25).max() < 0.05
        assert counts["fast"][1].max() > 0.28


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chose_left", "x_l", "x_r", "z_l", "z_r"])
        w.writerows(rows)


SCHEMA = {
    "y": "chose_left",
    "x": {"left": "x_l", "right": "x_r", "levels": {"A": 1, "B": 2}},
    "z": {"left": "z_l", "right": "z_r", "levels": {"c": 1, "d": 2}},
}


@pytest.fixture(scope="module")
def replay_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("replay") / "responses.csv"
    rng = np.random.default_rng(77)
    labels_x = np.array(["A", "B"])
    labels_z = np.array(["c", "d"])
    rows = [
        (
            str(int(rng.integers(0, 2))),
            labels_x[rng.integers(0, 2)], labels_x[rng.integers(0, 2)],
            labels_z[rng.integers(0, 2)], labels_z[rng.integers(0, 2)],
        )
        for _ in range(2000)
    ]
    write_rows(path, rows)
    return path


class TestIngest:
    def test_pools_account_for_every_row(self, replay_csv):
        ds = ingest_replay_dataset(replay_csv, SCHEMA)
        assert len(ds) == 2000
        assert ds.K == 2 and ds.L == 2
        sizes = ds.pool_sizes()
        assert sizes.shape == (4, 4)
        assert sizes.sum() == 2000
        assert sizes.min() >= 60
        xc, zc = 2, 1
        assert sizes[xc, zc] == int(((ds.x_codes == xc) & (ds.z_codes == zc)).sum())
        rows = ds.pools[(xc, zc)]
        assert (ds.x_codes[rows] == xc).all() and (ds.z_codes[rows] == zc).all()

    def test_schema_can_come_from_a_file(self, replay_csv, tmp_path):
        spath = tmp_path / "schema.json"
        spath.write_text(json.dumps(SCHEMA))
        ds = ingest_replay_dataset(replay_csv, spath)
        assert len(ds) == 2000

    def test_malformed_rows_reported_with_line_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_rows(path, [
            ("1", "A", "B", "c", "d"),
            ("1", "Q", "B", "c", "d"),   # line 3: unknown label
            ("2", "A", "B", "c", "d"),   # line 4: non-binary response
        ])
        with pytest.raises(ValueError) as err:
            ingest_replay_dataset(path, SCHEMA)
        msg = str(err.value)
        assert "2 malformed" in msg and "line 3" in msg and "line 4" in msg

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "cols.csv"
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows([["chose_left", "x_l"], ["1", "A"]])
        with pytest.raises(ValueError, match="missing columns"):
            ingest_replay_dataset(path, SCHEMA)

    def test_missing_schema_entry_rejected(self, tmp_path):
        path = tmp_path / "any.csv"
        write_rows(path, [("1", "A", "B", "c", "d")])
        with pytest.raises(ValueError, match="'z'"):
            ingest_replay_dataset(path, {"y": "chose_left", "x": SCHEMA["x"]})

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_rows(path, [])
        with pytest.raises(ValueError, match="no data rows"):
            ingest_replay_dataset(path, SCHEMA)


class TestReplayExperiment:
    def test_served_rows_are_faithful_and_unique(self, replay_csv):
        ds = ingest_replay_dataset(replay_csv, SCHEMA)
        pol = conjoint_adaptive_policy(0.5, 2, 2, 60)
        rec = replay_experiment(ds, pol, 60, SeedPlan(31))
        served = rec.diagnostics["served_rows"]
        assert len(np.unique(served)) == 60  # without replacement
        np.testing.assert_array_equal(ds.x_codes[served], rec.x)
        np.testing.assert_array_equal(ds.z_codes[served], rec.z)
        np.testing.assert_array_equal(ds.y[served], rec.y)

    def test_deterministic_given_plan(self, replay_csv):
        ds = ingest_replay_dataset(replay_csv, SCHEMA)
        pol = conjoint_iid_policy(2, 2)
        a = replay_experiment(ds, pol, 40, SeedPlan(32))
        b = replay_experiment(ds, pol, 40, SeedPlan(32))
        c = replay_experiment(ds, pol, 40, SeedPlan(32, stream_index=1))
        np.testing.assert_array_equal(
            a.diagnostics["served_rows"], b.diagnostics["served_rows"]
        )
        assert not np.array_equal(
            a.diagnostics["served_rows"], c.diagnostics["served_rows"]
        )

    def test_budget_and_arm_count_guards(self, replay_csv):
        ds = ingest_replay_dataset(replay_csv, SCHEMA)
        with pytest.raises(ValueError, match="exceeds dataset size"):
            replay_experiment(ds, conjoint_iid_policy(2, 2), 2001, SeedPlan(0))
        with pytest.raises(ValueError, match="arm counts"):
            replay_experiment(ds, conjoint_iid_policy(4, 4), 10, SeedPlan(0))

    def test_exhausted_pool_aborts(self, tmp_path):
        path = tmp_path / "one_pool.csv"
        write_rows(path, [("1", "A", "A", "c", "c"), ("0", "A", "A", "c", "c")])
        ds = ingest_replay_dataset(path, SCHEMA)
        pol = conjoint_iid_policy(2, 2)
        raised = 0
        for seed in range(30):
            try:
                replay_experiment(ds, pol, 2, SeedPlan(seed))
            except ReplayExhaustedError as exc:
                raised += 1
                assert "exhausted at step" in str(exc)
        assert raised >= 25  # only an all-(A,A,c,c) draw sequence survives


class TestStatisticFactory:
    def test_known_names(self):
        assert make_statistic("f_stat", 4, 4).config()["name"] == "f_stat"
        lasso = make_statistic("lasso_logistic", 4, 4)
        assert lasso.config()["name"] == "lasso_logistic"

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown conjoint statistic"):
            make_statistic("anova", 4, 4)


class TestPowerDrivers:
    def test_scenario_keys_are_strict(self):
        with pytest.raises(ValueError, match="n_reps"):
            simulate_conjoint_power({"n": 24, "n_reps": 5}, SeedPlan(0))
        with pytest.raises(ValueError, match="sampler"):
            simulate_conjoint_power({"n": 24, "sampler": "greedy"}, SeedPlan(0))

    def test_simulated_smoke(self):
        est = simulate_conjoint_power(
            {"n": 24, "K": 2, "L": 2, "beta_x": 0.0, "beta_z": 0.0,
             "beta_xz": 0.0, "sampler": "adaptive", "epsilon": 0.5,
             "stat": "f_stat", "B": 19, "n_mc": 6},
            SeedPlan(41),
        )
        assert est.n_mc == 6
        assert 0.0 <= est.power <= 1.0

    def test_replay_smoke_and_determinism(self, replay_csv):
        ds = ingest_replay_dataset(replay_csv, SCHEMA)
        kw = dict(n=30, sampler="iid", stat_name="f_stat", B=19, n_mc=6)
        a = replay_power(ds, plan=SeedPlan(42), **kw)
        b = replay_power(ds, plan=SeedPlan(42), **kw)
        assert a.power == b.power
        assert a.n_mc == 6
