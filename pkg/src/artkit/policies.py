"""Sequential adaptive sampling policies.

A policy exposes, for every time step and admissible history, the exact
conditional distribution of the next treatment draw. That conditional is
what the resampler replays, so policies must compute their adaptive state
purely from the history view handed to them (no hidden mutable caches).

The context rule (``z_rule``) is structurally restricted to the context and
response history: there is no way to hand it past treatments, which is the
validity condition for adaptive resampling.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .core import (
    WEIGHT_FLOOR,
    ExperimentRecord,
    SeedPlan,
    WeightVector,
    check_weights,
    derive_seed,
    derive_stream,
    normalize,
)


class PolicyError(ValueError):
    """A policy emitted an unusable weight vector."""


@dataclass(frozen=True, slots=True)
class HistoryView:
    """Read-only prefix of an experiment as seen when drawing X at time t.

    ``x_hist`` and ``y_hist`` cover times 1..t-1; ``z_hist`` covers times
    1..t because the context for the current step is drawn first.
    """

    x_hist: np.ndarray
    z_hist: np.ndarray | None
    y_hist: np.ndarray


def _weights_id(w: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(w, dtype=np.float64).tobytes()).hexdigest()[:8]


def categorical(rng: np.random.Generator, w: np.ndarray, size=None):
    """Draw arm indices from a weight vector by inverse CDF."""
    cdf = np.cumsum(w)
    cdf[-1] = 1.0
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    return int(idx) if size is None else idx.astype(np.int64)


class AdaptivePolicy:
    """Base class: next-sample distributions for X (and optionally Z).

    Subclasses set ``n_x_arms``, ``n_z_arms`` (None when the design has no
    context variable) and ``policy_id`` (a stable string identifying the
    policy kind and parameters), and implement ``x_rule``. All stochasticity
    in a rule must come from the generator passed in, so the rule is a
    deterministic function of (history, stream state).
    """

    n_x_arms: int
    n_z_arms: int | None = None
    policy_id: str = "policy"

    def x_rule(self, view: HistoryView, rng: np.random.Generator) -> WeightVector:
        raise NotImplementedError

    def z_rule(self, z_hist, y_hist, rng: np.random.Generator) -> WeightVector | None:
        return None

    def record_diagnostics(self, record: ExperimentRecord) -> dict:
        return {}


class IidPolicy(AdaptivePolicy):
    """History-independent sampling: every draw is from the same weights."""

    def __init__(self, q, z_weights=None):
        self.q = check_weights(normalize(q))
        self.n_x_arms = len(self.q)
        if z_weights is not None:
            self.zq = check_weights(normalize(z_weights))
            self.n_z_arms = len(self.zq)
            zid = f",zq={_weights_id(self.zq)}"
        else:
            self.zq = None
            zid = ""
        self.policy_id = f"iid(p={self.n_x_arms},q={_weights_id(self.q)}{zid})"

    def x_rule(self, view, rng):
        return self.q

    def z_rule(self, z_hist, y_hist, rng):
        return self.zq

    # fast paths -----------------------------------------------------------
    def simulate_record(self, response, n, rng):
        z = categorical(rng, self.zq, n) if self.zq is not None else None
        x = categorical(rng, self.q, n)
        y = response.sample_batch(x, z, rng)
        return x, z, y, {}

    def narp_batch(self, record: ExperimentRecord, B: int, rng) -> tuple[np.ndarray, dict]:
        return categorical(rng, self.q, (B, record.n)), {}


def iid_policy(q, z_weights=None) -> IidPolicy:
    """Policy drawing every X (and optionally Z) iid from fixed weights."""
    return IidPolicy(q, z_weights=z_weights)


REWEIGHT_FNS = ("exp", "identity-positive")


def apply_reweight(fn: str, values: np.ndarray) -> np.ndarray:
    """Map reweighting inputs to raw non-negative weights, numerically safely."""
    if fn == "exp":
        # shifting by the max leaves the normalized weights unchanged
        v = values - np.max(values, axis=-1, keepdims=True)
        return np.exp(v)
    if fn == "identity-positive":
        return np.maximum(values, 0.0)
    raise ValueError(f"unknown reweight_fn {fn!r}")


@dataclass(frozen=True)
class TwoStageConfig:
    """Parameters of the explore-then-reweight procedure."""

    n: int
    epsilon: float
    q: np.ndarray
    t_scale: float
    reweight_fn: str = "exp"

    def __post_init__(self):
        object.__setattr__(self, "q", check_weights(normalize(self.q)))
        n1 = int(np.floor(self.n * self.epsilon))
        if not (1 <= n1 <= self.n - 1):
            raise ValueError(
                f"need 1 <= floor(n*epsilon) <= n-1, got n={self.n}, epsilon={self.epsilon}"
            )
        if self.reweight_fn not in REWEIGHT_FNS:
            raise ValueError(f"reweight_fn must be one of {REWEIGHT_FNS}")

    @property
    def n_explore(self) -> int:
        return int(np.floor(self.n * self.epsilon))


def arm_means(x: np.ndarray, y: np.ndarray, p: int, fill: float = 0.0):
    """Per-arm response means; arms with zero pulls get ``fill``.

    Returns (means, counts).
    """
    counts = np.bincount(x, minlength=p).astype(np.float64)
    sums = np.bincount(x, weights=y, minlength=p)
    means = np.full(p, fill, dtype=np.float64)
    pulled = counts > 0
    means[pulled] = sums[pulled] / counts[pulled]
    return means, counts


class TwoStagePolicy(AdaptivePolicy):
    """Stage 1 samples iid from q; stage 2 reweights by first-stage arm means.

    The second-stage weights are a pure function of the first ``n_explore``
    steps of whatever history is supplied, so a replay on counterfactual
    histories reproduces exactly the counterfactual weights.
    """

    def __init__(self, cfg: TwoStageConfig):
        self.cfg = cfg
        self.n_x_arms = len(cfg.q)
        self.policy_id = (
            f"two-stage(n={cfg.n},eps={cfg.epsilon!r},t={cfg.t_scale!r},"
            f"f={cfg.reweight_fn},q={_weights_id(cfg.q)})"
        )

    def reweight(self, x_first: np.ndarray, y_first: np.ndarray):
        """Second-stage weights from first-stage data. Returns (Q, n_empty)."""
        cfg = self.cfg
        means, counts = arm_means(x_first, y_first, self.n_x_arms, fill=0.0)
        raw = apply_reweight(cfg.reweight_fn, cfg.t_scale * np.sqrt(cfg.n) * means)
        if raw.sum() <= 0:  # identity-positive can zero everything out
            raw = np.ones(self.n_x_arms)
        return normalize(raw), int((counts == 0).sum())

    def x_rule(self, view, rng):
        n1 = self.cfg.n_explore
        if len(view.x_hist) < n1:
            return self.cfg.q
        Q, _ = self.reweight(view.x_hist[:n1], view.y_hist[:n1])
        return Q

    def record_diagnostics(self, record):
        n1 = self.cfg.n_explore
        _, n_empty = self.reweight(record.x[:n1], record.y[:n1])
        return {"empty_first_stage_arms": n_empty} if n_empty else {}

    # fast paths -----------------------------------------------------------
    def simulate_record(self, response, n, rng):
        if n != self.cfg.n:
            raise ValueError(f"policy was built for n={self.cfg.n}, asked to run n={n}")
        n1 = self.cfg.n_explore
        x = np.empty(n, dtype=np.int64)
        x[:n1] = categorical(rng, self.cfg.q, n1)
        y = np.empty(n, dtype=np.float64)
        y[:n1] = response.sample_batch(x[:n1], None, rng)
        Q, n_empty = self.reweight(x[:n1], y[:n1])
        x[n1:] = categorical(rng, Q, n - n1)
        y[n1:] = response.sample_batch(x[n1:], None, rng)
        diag = {"empty_first_stage_arms": n_empty} if n_empty else {}
        return x, None, y, diag

    def narp_batch(self, record, B, rng):
        cfg = self.cfg
        n, p = record.n, self.n_x_arms
        n1 = cfg.n_explore
        xt = np.empty((B, n), dtype=np.int64)
        xt[:, :n1] = categorical(rng, cfg.q, (B, n1))
        # per-resample reweighting from resampled stage-1 arms + observed responses
        flat = (xt[:, :n1] + p * np.arange(B)[:, None]).ravel()
        counts = np.bincount(flat, minlength=B * p).reshape(B, p).astype(np.float64)
        sums = np.bincount(
            flat, weights=np.broadcast_to(record.y[:n1], (B, n1)).ravel(), minlength=B * p
        ).reshape(B, p)
        means = np.where(counts > 0, sums / np.maximum(counts, 1.0), 0.0)
        raw = apply_reweight(cfg.reweight_fn, cfg.t_scale * np.sqrt(cfg.n) * means)
        bad = raw.sum(axis=1) <= 0
        if bad.any():
            raw[bad] = 1.0
        Q = raw / raw.sum(axis=1, keepdims=True)
        Q = np.maximum(Q, WEIGHT_FLOOR)
        Q /= Q.sum(axis=1, keepdims=True)
        cdf = np.cumsum(Q, axis=1)
        cdf[:, -1] = 1.0
        u = rng.random((B, n - n1))
        for b in range(B):
            xt[b, n1:] = np.searchsorted(cdf[b], u[b], side="right")
        n_empty = int((counts == 0).any(axis=1).sum())
        diag = {"resamples_with_empty_first_stage_arm": n_empty} if n_empty else {}
        return xt, diag


def two_stage_policy(cfg: TwoStageConfig) -> TwoStagePolicy:
    """Explore-then-reweight policy over ``len(cfg.q)`` arms."""
    return TwoStagePolicy(cfg)


class ProductPolicy(AdaptivePolicy):
    """Several treatment variables, each adapting only to its own history.

    The joint arm index flattens the component arms in row-major order
    (first component slowest), and the joint next-sample distribution is
    the outer product of the component distributions.
    """

    def __init__(self, policies):
        policies = list(policies)
        if not policies:
            raise ValueError("need at least one component policy")
        for pol in policies:
            if pol.n_z_arms is not None:
                raise ValueError(
                    "component policies must not carry a context rule; "
                    "they may only read their own history"
                )
        self.components = policies
        self.dims = [pol.n_x_arms for pol in policies]
        self.n_x_arms = int(np.prod(self.dims))
        self.policy_id = "product(" + ",".join(p.policy_id for p in policies) + ")"

    def split_arm(self, joint: np.ndarray) -> list[np.ndarray]:
        """Decode joint arm indices into per-component indices."""
        out = []
        rest = np.asarray(joint)
        for d in reversed(self.dims):
            out.append(rest % d)
            rest = rest // d
        return out[::-1]

    def x_rule(self, view, rng):
        comps = self.split_arm(view.x_hist)
        w = np.ones(1)
        for pol, hist in zip(self.components, comps):
            sub = HistoryView(x_hist=hist, z_hist=None, y_hist=view.y_hist)
            w = np.multiply.outer(w, pol.x_rule(sub, rng)).ravel()
        return w


def product_policy(policies) -> ProductPolicy:
    """Combine per-variable policies into one policy over the product domain."""
    return ProductPolicy(policies)


def run_experiment(policy: AdaptivePolicy, response, n: int, plan: SeedPlan) -> ExperimentRecord:
    """Collect an experiment of length n under the policy.

    At each step the context (if any) is drawn from the context rule, then
    the treatment from the treatment rule, then the response from
    ``response(x, z, rng)``. The response model must be a pure stochastic
    function of the current (x, z) pair.

    Policies that implement ``simulate_record`` take a vectorized path with
    the same law; both paths derive every draw from the plan's streams.
    """
    rng = derive_stream(plan, "experiment")
    seed = derive_seed(plan, "record")
    fast = getattr(policy, "simulate_record", None)
    if callable(fast) and callable(getattr(response, "sample_batch", None)):
        try:
            x, z, y, diag = fast(response, n, rng)
        except ValueError as exc:
            raise PolicyError(str(exc)) from exc
        return ExperimentRecord(
            x=x, z=z, y=y, n=n, policy_id=policy.policy_id, seed=seed, diagnostics=diag
        )

    has_z = policy.n_z_arms is not None
    x = np.empty(n, dtype=np.int64)
    z = np.empty(n, dtype=np.int64) if has_z else None
    y = np.empty(n, dtype=np.float64)
    for t in range(n):
        if has_z:
            wz = policy.z_rule(z[:t], y[:t], rng)
            try:
                check_weights(wz)
            except ValueError as exc:
                raise PolicyError(f"invalid context weights at step {t + 1}: {exc}") from exc
            z[t] = categorical(rng, wz)
        view = HistoryView(
            x_hist=x[:t], z_hist=z[: t + 1] if has_z else None, y_hist=y[:t]
        )
        w = policy.x_rule(view, rng)
        try:
            check_weights(w)
        except ValueError as exc:
            raise PolicyError(f"invalid treatment weights at step {t + 1}: {exc}") from exc
        if len(w) != policy.n_x_arms:
            raise PolicyError(f"weight length {len(w)} != domain size at step {t + 1}")
        x[t] = categorical(rng, w)
        y[t] = response(x[t], z[t] if has_z else None, rng)
    record = ExperimentRecord(
        x=x, z=z, y=y, n=n, policy_id=policy.policy_id, seed=seed, diagnostics={}
    )
    diag = policy.record_diagnostics(record)
    if diag:
        record.diagnostics.update(diag)
    return record
