"""Randomization p-values and Monte Carlo power estimation.

``art_p_value`` scores a record against resampled treatment sequences drawn
from the record's own adaptive assignment law; ``crt_p_value`` is the same
computation restricted to non-adaptive (iid) assignment. ``empirical_power``
repeats a caller-supplied scenario across independent replications, with an
optional worker pool whose output is byte-identical to the serial path.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ExperimentRecord,
    PolicyMismatchError,
    SeedPlan,
    config_fingerprint,
    derive_seed,
)
from .narp import ResampleBundle, narp_resample
from .policies import AdaptivePolicy, iid_policy
from .stats import TestStatistic

log = logging.getLogger(__name__)

# resampled statistics within this relative distance of the observed one
# count as ties; they are already included in b_used through >=
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PValue:
    """Randomization p-value with its exceedance bookkeeping."""

    p: float
    b_used: int
    t_obs: float
    tie_count: int

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p-value {self.p} outside (0, 1]")


def _p_from_stats(t_obs: float, t_resampled: np.ndarray) -> PValue:
    B = len(t_resampled)
    exceed = int(np.count_nonzero(t_resampled >= t_obs))
    ties = int(np.count_nonzero(
        np.isclose(t_resampled, t_obs, rtol=TIE_RTOL, atol=0.0)
    ))
    return PValue(
        p=(1 + exceed) / (B + 1),
        b_used=B,
        t_obs=float(t_obs),
        tie_count=ties,
    )


def art_p_value(
    record: ExperimentRecord,
    policy: AdaptivePolicy,
    statistic: TestStatistic,
    B: int,
    plan: SeedPlan,
    bundle: ResampleBundle | None = None,
) -> PValue:
    """Adaptive randomization test p-value for one experiment record.

    Draws ``B`` treatment resamples under the record's assignment law
    (holding context and responses fixed), evaluates the statistic on the
    observed and resampled data, and returns the exceedance p-value
    (1 + #{resampled >= observed}) / (B + 1). Ties count toward exceedance.

    A precomputed ``bundle`` skips the resampling step; it must come from
    the same policy/record pair.
    """
    if bundle is None:
        bundle = narp_resample(policy, record, B, plan)
    elif bundle.b_count != B:
        raise ValueError(f"bundle holds {bundle.b_count} resamples, expected {B}")
    t_obs = statistic.evaluate(record.x, record.z, record.y, seed=record.seed)
    t_res = statistic.evaluate_many(bundle.resamples, record.z, record.y, seed=record.seed)
    return _p_from_stats(t_obs, t_res)


def crt_p_value(
    record: ExperimentRecord,
    q,
    statistic: TestStatistic,
    B: int,
    plan: SeedPlan,
    z_weights=None,
) -> PValue:
    """Conditional randomization test p-value under fixed iid assignment.

    Equivalent to ``art_p_value`` with ``iid_policy(q, z_weights)``:
    resamples are iid draws from the stated assignment weights. Records
    collected by any other policy are rejected (``PolicyMismatchError``);
    adaptively collected data must be tested with ``art_p_value``, which
    replays the actual assignment law.
    """
    policy = iid_policy(q, z_weights=z_weights)
    if record.policy_id != policy.policy_id:
        raise PolicyMismatchError(
            "record was not collected by this iid assignment "
            f"({record.policy_id!r}); use art_p_value with the collecting policy"
        )
    return art_p_value(record, policy, statistic, B, plan)


@dataclass(frozen=True)
class PowerEstimate:
    """Rejection-rate estimate over independent replications."""

    power: float
    se: float
    n_mc: int
    alpha: float
    config_fingerprint: str
    n_failed: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)


def _run_rep(args):
    scenario, rep_seed, rep = args
    try:
        return scenario.run_one(SeedPlan(rep_seed, stream_index=rep)).p
    except RuntimeError as exc:
        log.warning("replication %d failed: %s", rep, exc)
        return None


def empirical_power(
    scenario,
    n_reps: int,
    alpha: float,
    plan: SeedPlan,
    workers: int = 1,
) -> PowerEstimate:
    """Monte Carlo rejection rate of a scenario at level ``alpha``.

    ``scenario`` must expose ``run_one(plan) -> PValue`` and ``config() ->
    dict``. Replication ``i`` always runs under the same derived plan
    regardless of worker count or completion order, so the estimate is a
    pure function of (scenario, n_reps, alpha, plan). Replications that
    raise ``RuntimeError`` (for example an exhausted replay pool) are
    dropped from the denominator, never counted as rejections.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    rep_seed = derive_seed(plan, "power-reps")
    jobs = [(scenario, rep_seed, rep) for rep in range(n_reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pvals = list(pool.map(_run_rep, jobs, chunksize=max(1, n_reps // (8 * workers))))
    else:
        pvals = [_run_rep(job) for job in jobs]
    ok = np.array([p for p in pvals if p is not None])
    n_failed = n_reps - len(ok)
    if len(ok) == 0:
        raise RuntimeError(f"all {n_reps} replications failed")
    if n_failed:
        log.warning("%d of %d replications failed and were dropped", n_failed, n_reps)
    power = float(np.mean(ok <= alpha))
    se = float(np.sqrt(power * (1.0 - power) / len(ok)))
    return PowerEstimate(
        power=power,
        se=se,
        n_mc=int(len(ok)),
        alpha=alpha,
        config_fingerprint=config_fingerprint(
            scenario.config()
            | {"n_reps": n_reps, "alpha": alpha, "seed": plan.master_seed}
        ),
        n_failed=n_failed,
    )


def default_workers() -> int:
    """Worker count from ART_KIT_WORKERS, else 1."""
    raw = os.environ.get("ART_KIT_WORKERS", "")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        log.warning("ignoring non-integer ART_KIT_WORKERS=%r", raw)
        return 1
    return max(1, value)
