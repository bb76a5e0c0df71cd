"""Forced-choice profile-pair experiments.

A respondent sees a left and a right profile, each carrying a level of the
factor of interest (X) and a level of a control factor (Z), and the binary
response records whether the left profile won. Treatment arms are flat
(left, right) level-pair codes: X over K*K arms, Z over L*L arms. The
module provides the logistic response model used in simulations, the
explore-then-reweight sampling policy, power scenario drivers, and a
replay engine that serves responses without replacement from an ingested
dataset instead of a parametric model.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import ExperimentRecord, SeedPlan, derive_seed, derive_stream
from .engine import PowerEstimate, art_p_value, crt_p_value, empirical_power
from .policies import (
    AdaptivePolicy,
    HistoryView,
    categorical,
    iid_policy,
    run_experiment,
)
from .stats import FStatistic, LassoLogistic, TestStatistic

log = logging.getLogger(__name__)

PERTURBATION_SD = 0.01
NEUTRAL_MEAN = 0.5


def pair_code(left, right, width: int):
    """Flat arm code of a (left, right) pair of 1-based levels."""
    return (np.asarray(left) - 1) * width + (np.asarray(right) - 1)


def pair_levels(code, width: int):
    """Inverse of pair_code: 1-based (left, right) levels."""
    code = np.asarray(code)
    return code // width + 1, code % width + 1


@dataclass(frozen=True)
class ProfilePair:
    """One displayed pair of profiles, levels 1-based."""

    x_left: int
    x_right: int
    z_left: int
    z_right: int

    def codes(self, K: int, L: int) -> tuple[int, int]:
        for name, v, hi in (
            ("x_left", self.x_left, K), ("x_right", self.x_right, K),
            ("z_left", self.z_left, L), ("z_right", self.z_right, L),
        ):
            if not 1 <= v <= hi:
                raise ValueError(f"{name}={v} outside 1..{hi}")
        return (
            int(pair_code(self.x_left, self.x_right, K)),
            int(pair_code(self.z_left, self.z_right, L)),
        )


@dataclass(frozen=True)
class ConjointResponseModel:
    """Logistic choice model with one signal level per factor.

    The log-odds of choosing the left profile gain beta_x when exactly one
    side shows X level 1 (sign by side), beta_z likewise for Z level 1,
    and beta_xz when exactly one side shows the (X, Z) = (1, 2)
    combination. "Exactly one side" is always a pairwise comparison of the
    relevant configuration, so swapping the two profiles maps the choice
    probability pi to 1 - pi and the model carries no profile-order
    effect.
    """

    beta_x: float
    beta_z: float
    beta_xz: float
    K: int = 4
    L: int = 4

    @cached_property
    def probability_table(self) -> np.ndarray:
        """Pr(Y=1) for every (x arm, z arm) combination, shape (K*K, L*L)."""
        x_codes = np.arange(self.K * self.K)[:, None]
        z_codes = np.arange(self.L * self.L)[None, :]
        return self.probability(x_codes, z_codes)

    def probability(self, x_code, z_code) -> np.ndarray:
        xl, xr = pair_levels(x_code, self.K)
        zl, zr = pair_levels(z_code, self.L)
        x_term = ((xl == 1) & (xr != 1)).astype(np.float64)
        x_term = x_term - ((xl != 1) & (xr == 1))
        z_term = ((zl == 1) & (zr != 1)).astype(np.float64)
        z_term = z_term - ((zl != 1) & (zr == 1))
        left_hit = (xl == 1) & (zl == 2)
        right_hit = (xr == 1) & (zr == 2)
        xz_term = (left_hit & ~right_hit).astype(np.float64)
        xz_term = xz_term - (~left_hit & right_hit)
        logit = self.beta_x * x_term + self.beta_z * z_term + self.beta_xz * xz_term
        return 1.0 / (1.0 + np.exp(-logit))

    def __call__(self, x, z, rng: np.random.Generator) -> float:
        return float(rng.random() < self.probability_table[x, z])

    def sample_batch(self, x, z, rng: np.random.Generator) -> np.ndarray:
        pr = self.probability_table[np.asarray(x), np.asarray(z)]
        return (rng.random(len(pr)) < pr).astype(np.float64)


class ArmState:
    """Running per-arm response means, with a neutral prior for empty arms."""

    def __init__(self, n_arms: int):
        self.counts = np.zeros(n_arms, dtype=np.float64)
        self.sums = np.zeros(n_arms, dtype=np.float64)

    def seed_from(self, arms, ys):
        np.add.at(self.counts, arms, 1.0)
        np.add.at(self.sums, arms, ys)

    def update(self, arm: int, y: float):
        self.counts[arm] += 1.0
        self.sums[arm] += y

    def means(self) -> np.ndarray:
        return np.where(
            self.counts > 0, self.sums / np.maximum(self.counts, 1.0), NEUTRAL_MEAN
        )


def _signal_weights(means: np.ndarray, rng, size=None) -> np.ndarray:
    """Weights favoring arms whose mean response strays from one half."""
    shape = means.shape if size is None else size
    pert = np.abs(rng.normal(0.0, PERTURBATION_SD, shape))
    raw = np.abs(means - NEUTRAL_MEAN) + pert
    return raw / raw.sum(axis=-1, keepdims=True)


class ConjointAdaptivePolicy(AdaptivePolicy):
    """Uniform exploration, then per-step reweighting toward decisive arms.

    For the first floor(n * epsilon) respondents both factors sample all
    pair arms uniformly. Afterwards each factor's arm weights are
    proportional to |running mean response - 0.5| plus an independent
    half-normal perturbation, refreshed per arm per step. The X side reads
    only X- and response-history, the Z side only Z- and
    response-history, so the two rules are separable by construction.
    """

    def __init__(self, epsilon: float, K: int = 4, L: int = 4, n: int = 0):
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie strictly inside (0, 1)")
        if n < 2:
            raise ValueError("the policy must know the experiment length n")
        self.epsilon = epsilon
        self.K = K
        self.L = L
        self.n = n
        self.n_explore = int(math.floor(n * epsilon))
        if not 1 <= self.n_explore < n:
            raise ValueError("floor(n * epsilon) must leave room for both stages")
        self.n_x_arms = K * K
        self.n_z_arms = L * L
        self.policy_id = f"conjoint-adaptive(n={n},eps={epsilon!r},K={K},L={L})"

    def _stage_weights(self, arms_hist, y_hist, n_arms: int, rng) -> np.ndarray:
        if len(arms_hist) < self.n_explore:
            return np.full(n_arms, 1.0 / n_arms)
        state = ArmState(n_arms)
        state.seed_from(np.asarray(arms_hist), np.asarray(y_hist)[: len(arms_hist)])
        return _signal_weights(state.means(), rng)

    def x_rule(self, view: HistoryView, rng) -> np.ndarray:
        return self._stage_weights(view.x_hist, view.y_hist, self.n_x_arms, rng)

    def z_rule(self, z_hist, y_hist, rng) -> np.ndarray:
        return self._stage_weights(z_hist, y_hist, self.n_z_arms, rng)

    # fast paths -----------------------------------------------------------
    def simulate_record(self, response, n, rng):
        if n != self.n:
            raise ValueError(f"policy was built for n={self.n}, asked to run n={n}")
        n1 = self.n_explore
        x = np.empty(n, dtype=np.int64)
        z = np.empty(n, dtype=np.int64)
        y = np.empty(n, dtype=np.float64)
        z[:n1] = categorical(rng, np.full(self.n_z_arms, 1.0 / self.n_z_arms), n1)
        x[:n1] = categorical(rng, np.full(self.n_x_arms, 1.0 / self.n_x_arms), n1)
        y[:n1] = response.sample_batch(x[:n1], z[:n1], rng)
        xs = ArmState(self.n_x_arms)
        zs = ArmState(self.n_z_arms)
        xs.seed_from(x[:n1], y[:n1])
        zs.seed_from(z[:n1], y[:n1])
        for t in range(n1, n):
            z[t] = categorical(rng, _signal_weights(zs.means(), rng))
            x[t] = categorical(rng, _signal_weights(xs.means(), rng))
            y[t] = response(x[t], z[t], rng)
            xs.update(x[t], y[t])
            zs.update(z[t], y[t])
        return x, z, y, {}

    def narp_batch(self, record: ExperimentRecord, B: int, rng):
        n, p = record.n, self.n_x_arms
        n1 = self.n_explore
        y = record.y
        xt = np.empty((B, n), dtype=np.int64)
        xt[:, :n1] = categorical(rng, np.full(p, 1.0 / p), (B, n1))
        flat = (xt[:, :n1] + p * np.arange(B)[:, None]).ravel()
        counts = np.bincount(flat, minlength=B * p).reshape(B, p).astype(np.float64)
        sums = np.bincount(
            flat, weights=np.broadcast_to(y[:n1], (B, n1)).ravel(), minlength=B * p
        ).reshape(B, p)
        rows = np.arange(B)
        for t in range(n1, n):
            means = np.where(counts > 0, sums / np.maximum(counts, 1.0), NEUTRAL_MEAN)
            w = _signal_weights(means, rng, size=(B, p))
            cdf = np.cumsum(w, axis=1)
            cdf[:, -1] = 1.0
            arm = np.sum(cdf < rng.random((B, 1)), axis=1)
            xt[:, t] = arm
            counts[rows, arm] += 1.0
            sums[rows, arm] += y[t]
        return xt, {}


def conjoint_adaptive_policy(
    epsilon: float, K: int = 4, L: int = 4, n: int = 0
) -> ConjointAdaptivePolicy:
    """Explore-then-reweight policy over K*K treatment and L*L context arms."""
    return ConjointAdaptivePolicy(epsilon, K=K, L=L, n=n)


def conjoint_iid_policy(K: int = 4, L: int = 4):
    """Uniform iid sampling over all pair arms, for CRT baselines."""
    return iid_policy(
        np.full(K * K, 1.0 / (K * K)), z_weights=np.full(L * L, 1.0 / (L * L))
    )


def make_statistic(name: str, K: int, L: int) -> TestStatistic:
    if name == "lasso_logistic":
        return LassoLogistic(K, L)
    if name == "f_stat":
        return FStatistic(K, L)
    raise ValueError(f"unknown conjoint statistic {name!r}")


@dataclass(frozen=True)
class ConjointScenario:
    """One replication of the simulated conjoint pipeline."""

    n: int
    model: ConjointResponseModel
    sampler: str  # "adaptive" or "iid"
    epsilon: float
    stat: TestStatistic
    B: int

    def run_one(self, plan: SeedPlan):
        K, L = self.model.K, self.model.L
        if self.sampler == "adaptive":
            policy = conjoint_adaptive_policy(self.epsilon, K, L, self.n)
            record = run_experiment(policy, self.model, self.n, plan)
            return art_p_value(record, policy, self.stat, self.B, plan)
        policy = conjoint_iid_policy(K, L)
        record = run_experiment(policy, self.model, self.n, plan)
        return crt_p_value(record, policy.q, self.stat, self.B, plan, z_weights=policy.zq)

    def config(self) -> dict:
        return {
            "kind": "conjoint",
            "n": self.n,
            "K": self.model.K,
            "L": self.model.L,
            "beta_x": self.model.beta_x,
            "beta_z": self.model.beta_z,
            "beta_xz": self.model.beta_xz,
            "sampler": self.sampler,
            "epsilon": self.epsilon if self.sampler == "adaptive" else None,
            "stat": self.stat.config(),
            "B": self.B,
        }


def simulate_conjoint_power(scenario: dict, plan: SeedPlan, workers: int = 1) -> PowerEstimate:
    """Empirical power of a simulated conjoint scenario.

    ``scenario`` keys: n, K, L, beta_x, beta_z, beta_xz, sampler
    ("adaptive" or "iid"), epsilon (adaptive only), stat ("lasso_logistic"
    or "f_stat"), B, n_mc, alpha.
    """
    s = dict(scenario)
    known = {
        "n", "K", "L", "beta_x", "beta_z", "beta_xz",
        "sampler", "epsilon", "stat", "B", "n_mc", "alpha",
    }
    unknown = set(s) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    sampler = s.get("sampler", "adaptive")
    if sampler not in ("adaptive", "iid"):
        raise ValueError("sampler must be 'adaptive' or 'iid'")
    K = int(s.get("K", 4))
    L = int(s.get("L", 4))
    model = ConjointResponseModel(
        beta_x=float(s.get("beta_x", 0.0)),
        beta_z=float(s.get("beta_z", 0.0)),
        beta_xz=float(s.get("beta_xz", 0.0)),
        K=K,
        L=L,
    )
    built = ConjointScenario(
        n=int(s["n"]),
        model=model,
        sampler=sampler,
        epsilon=float(s.get("epsilon", 0.5)),
        stat=make_statistic(s.get("stat", "lasso_logistic"), K, L),
        B=int(s.get("B", 300)),
    )
    return empirical_power(
        built, int(s.get("n_mc", 1000)), float(s.get("alpha", 0.05)), plan, workers=workers
    )


# --- replay on an ingested dataset ------------------------------------------


class ReplayExhaustedError(RuntimeError):
    """A matching response pool ran out mid-replication."""


@dataclass(frozen=True)
class ReplayDataset:
    """Immutable response pools keyed by (X arm, Z arm)."""

    x_codes: np.ndarray
    z_codes: np.ndarray
    y: np.ndarray
    K: int
    L: int
    source: str
    pools: dict = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.y)

    def pool_sizes(self) -> np.ndarray:
        """Row counts per (X arm, Z arm), shape (K*K, L*L)."""
        sizes = np.zeros((self.K * self.K, self.L * self.L), dtype=np.int64)
        for (xc, zc), rows in self.pools.items():
            sizes[xc, zc] = len(rows)
        return sizes


def _build_pools(x_codes: np.ndarray, z_codes: np.ndarray) -> dict:
    pools: dict = {}
    order = np.lexsort((z_codes, x_codes))
    key = x_codes[order] * (z_codes.max() + 1 if len(z_codes) else 1) + z_codes[order]
    starts = np.flatnonzero(np.r_[True, np.diff(key) != 0])
    bounds = np.r_[starts, len(order)]
    for s, e in zip(bounds[:-1], bounds[1:]):
        rows = order[s:e]
        pools[(int(x_codes[rows[0]]), int(z_codes[rows[0]]))] = rows
    return pools


def ingest_replay_dataset(path, schema) -> ReplayDataset:
    """Load a delimited response file into keyed replay pools.

    ``schema`` is a mapping (or path to a JSON file) of the form::

        {"y": "chose_left",
         "x": {"left": "x_l", "right": "x_r", "levels": {"Male": 1, "Female": 2}},
         "z": {"left": "z_l", "right": "z_r", "levels": {"Dem": 1, "Rep": 2}}}

    Level dictionaries map raw labels to 1-based level indices. Malformed
    rows (unknown labels, non-binary responses, missing fields) fail the
    ingest with their line numbers. Combinations with no rows are only
    warned about; they become failures at replay time if a policy ever
    requests them.
    """
    if not isinstance(schema, dict):
        schema = json.loads(Path(schema).read_text())
    for key in ("y", "x", "z"):
        if key not in schema:
            raise ValueError(f"schema is missing the {key!r} entry")
    x_levels = {str(k): int(v) for k, v in schema["x"]["levels"].items()}
    z_levels = {str(k): int(v) for k, v in schema["z"]["levels"].items()}
    K = max(x_levels.values())
    L = max(z_levels.values())
    cols = [
        schema["y"], schema["x"]["left"], schema["x"]["right"],
        schema["z"]["left"], schema["z"]["right"],
    ]

    xs, zs, ys = [], [], []
    errors = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in cols if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                yv = row[schema["y"]].strip()
                if yv not in ("0", "1"):
                    raise ValueError(f"response {yv!r} is not 0/1")
                xl = x_levels[row[schema["x"]["left"]].strip()]
                xr = x_levels[row[schema["x"]["right"]].strip()]
                zl = z_levels[row[schema["z"]["left"]].strip()]
                zr = z_levels[row[schema["z"]["right"]].strip()]
            except KeyError as exc:
                errors.append(f"line {lineno}: unknown level label {exc}")
                continue
            except ValueError as exc:
                errors.append(f"line {lineno}: {exc}")
                continue
            xs.append((xl - 1) * K + (xr - 1))
            zs.append((zl - 1) * L + (zr - 1))
            ys.append(int(yv))
    if errors:
        head = "; ".join(errors[:5])
        raise ValueError(f"{path}: {len(errors)} malformed rows ({head})")
    if not ys:
        raise ValueError(f"{path}: no data rows")

    x_codes = np.asarray(xs, dtype=np.int64)
    z_codes = np.asarray(zs, dtype=np.int64)
    ds = ReplayDataset(
        x_codes=x_codes,
        z_codes=z_codes,
        y=np.asarray(ys, dtype=np.float64),
        K=K,
        L=L,
        source=str(path),
        pools=_build_pools(x_codes, z_codes),
    )
    sizes = ds.pool_sizes()
    n_empty = int((sizes == 0).sum())
    if n_empty:
        log.warning(
            "%s: %d of %d (X, Z) combinations have no rows; smallest nonzero pool %d",
            path, n_empty, sizes.size, int(sizes[sizes > 0].min()),
        )
    log.info("%s: %d rows across %d pools", path, len(ds), int((sizes > 0).sum()))
    return ds


def replay_experiment(
    dataset: ReplayDataset, policy: AdaptivePolicy, n: int, plan: SeedPlan
) -> ExperimentRecord:
    """Run the policy against dataset responses served without replacement.

    The policy draws (Z_t, X_t) as in a live experiment; the response is
    the next unserved row of the matching (X, Z) pool, in a per-replication
    random order. An exhausted pool aborts the replication
    (``ReplayExhaustedError``): substituting a different row would change
    the sampling law the resampler later has to reproduce.
    """
    if n > len(dataset):
        raise ValueError(f"budget {n} exceeds dataset size {len(dataset)}")
    if policy.n_x_arms != dataset.K**2 or policy.n_z_arms != dataset.L**2:
        raise ValueError("policy arm counts do not match the dataset's factors")
    pool_rng = derive_stream(plan, "replay-pools")
    cursors = {key: 0 for key in dataset.pools}
    shuffled = {key: pool_rng.permutation(rows) for key, rows in dataset.pools.items()}

    rng = derive_stream(plan, "experiment")
    x = np.empty(n, dtype=np.int64)
    z = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.float64)
    served = np.empty(n, dtype=np.int64)
    for t in range(n):
        z[t] = categorical(rng, policy.z_rule(z[:t], y[:t], rng))
        view = HistoryView(x_hist=x[:t], z_hist=z[: t + 1], y_hist=y[:t])
        x[t] = categorical(rng, policy.x_rule(view, rng))
        key = (int(x[t]), int(z[t]))
        pool = shuffled.get(key)
        cur = cursors.get(key, 0)
        if pool is None or cur >= len(pool):
            raise ReplayExhaustedError(
                f"pool for X arm {key[0]}, Z arm {key[1]} exhausted at step {t + 1} "
                f"(size {0 if pool is None else len(pool)})"
            )
        row = int(pool[cur])
        cursors[key] = cur + 1
        served[t] = row
        y[t] = dataset.y[row]
    return ExperimentRecord(
        x=x, z=z, y=y, n=n,
        policy_id=policy.policy_id,
        seed=derive_seed(plan, "record"),
        diagnostics={"served_rows": served},
    )


@dataclass(frozen=True)
class ReplayScenario:
    """One replication of the replay pipeline on a fixed dataset."""

    dataset: ReplayDataset
    n: int
    sampler: str
    epsilon: float
    stat: TestStatistic
    B: int

    def _policy(self):
        if self.sampler == "adaptive":
            return conjoint_adaptive_policy(
                self.epsilon, self.dataset.K, self.dataset.L, self.n
            )
        return conjoint_iid_policy(self.dataset.K, self.dataset.L)

    def run_one(self, plan: SeedPlan):
        policy = self._policy()
        record = replay_experiment(self.dataset, policy, self.n, plan)
        if self.sampler == "adaptive":
            return art_p_value(record, policy, self.stat, self.B, plan)
        return crt_p_value(record, policy.q, self.stat, self.B, plan, z_weights=policy.zq)

    def config(self) -> dict:
        return {
            "kind": "conjoint-replay",
            "source": self.dataset.source,
            "rows": len(self.dataset),
            "n": self.n,
            "sampler": self.sampler,
            "epsilon": self.epsilon if self.sampler == "adaptive" else None,
            "stat": self.stat.config(),
            "B": self.B,
        }


def replay_power(
    dataset: ReplayDataset,
    n: int,
    sampler: str,
    plan: SeedPlan,
    epsilon: float = 0.5,
    stat_name: str = "lasso_logistic",
    B: int = 300,
    n_mc: int = 1000,
    alpha: float = 0.1,
    workers: int = 1,
) -> PowerEstimate:
    """Empirical replay power at one budget for one sampling procedure."""
    scenario = ReplayScenario(
        dataset=dataset,
        n=n,
        sampler=sampler,
        epsilon=epsilon,
        stat=make_statistic(stat_name, dataset.K, dataset.L),
        B=B,
    )
    return empirical_power(scenario, n_mc, alpha, plan, workers=workers)
