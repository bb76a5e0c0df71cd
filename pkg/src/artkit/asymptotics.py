"""Monte Carlo evaluation of limiting power for the normal-means design.

The limiting rejection probability of the randomization test exists only
as an expectation over a coupled pair of Gaussian vectors: one generating
the observed test statistic, one generating its resampled null
counterpart. This module evaluates those expectations by simulation for
fixed iid sampling weights, for the two-stage reweighting procedure, and
for an oracle that optimizes the signal arm's weight, plus grid drivers
(heatmaps, parameter sweeps) and a finite-sample simulator used to
validate the limits against the real pipeline.

All samplers share one trick: a mean-zero Gaussian vector whose first p-1
coordinates have covariance Sigma(q), extended so the q-weighted sum over
all p coordinates vanishes, is obtained by rescaling iid normals (see
``sample_fluctuation``). Evaluators therefore operate on full p-vectors
and never factor a covariance matrix. It also means two evaluations with
the same seed plan but different weights consume identical normals, which
is what makes grid differences low-variance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    WEIGHT_FLOOR,
    SeedPlan,
    check_weights,
    config_fingerprint,
    derive_stream,
    normalize,
)
from .engine import PowerEstimate, art_p_value, empirical_power
from .policies import AdaptivePolicy, apply_reweight, run_experiment
from .stats import MaxArmMean, TestStatistic

log = logging.getLogger(__name__)

N_MC_IID = 200_000
N_OUTER = 20_000
N_INNER = 1_000
# the null-quantile phase uses this multiple of n_mc so that quantile noise
# is a small fraction of the reported binomial standard error
QUANTILE_FACTOR = 8

HEATMAP_H0_GRID = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0)
HEATMAP_P_GRID = (5, 10, 15, 20, 30, 40, 50)


def uniform_weights(p: int) -> np.ndarray:
    return np.full(p, 1.0 / p)


def q_from_q1(q1: float, p: int) -> np.ndarray:
    """Weights placing q1 on the signal arm, the rest split equally."""
    if not 0.0 < q1 < 1.0:
        raise ValueError("q1 must lie strictly inside (0, 1)")
    q = np.full(p, (1.0 - q1) / (p - 1))
    q[0] = q1
    return q


@dataclass(frozen=True)
class GaussianSpec:
    """Covariance structure of centered arm-mean fluctuations.

    ``sigma0`` is the multinomial covariance of arm frequencies (diagonal
    q_j(1-q_j), off-diagonal -q_i q_j) restricted to the first p-1 arms,
    ``d`` the diagonal of weights, and ``sigma = d^-1 sigma0 d^-1`` the
    covariance of the normalized fluctuations ((1-q_j)/q_j on the
    diagonal, -1 everywhere off it).
    """

    q: np.ndarray
    sigma0: np.ndarray
    d: np.ndarray
    sigma: np.ndarray


def gaussian_spec(q) -> GaussianSpec:
    q = check_weights(normalize(q))
    p = len(q)
    if p < 2:
        raise ValueError("need at least two arms")
    head = q[: p - 1]
    sigma0 = -np.outer(head, head)
    np.fill_diagonal(sigma0, head * (1.0 - head))
    d = np.diag(head)
    inv = np.diag(1.0 / head)
    sigma = inv @ sigma0 @ inv
    floor = float(np.linalg.eigvalsh(sigma).min())
    if floor < -1e-10:
        raise ValueError(f"fluctuation covariance not PSD (min eigenvalue {floor:.3e})")
    return GaussianSpec(q=q, sigma0=sigma0, d=d, sigma=sigma)


def fluctuation_from_normals(eps: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Map iid standard normals to arm-mean fluctuations.

    ``q`` broadcasts against ``eps`` over the last axis. The output M
    satisfies Cov(M_i, M_j) = Sigma(q)_ij on the first p-1 coordinates and
    sum_j q_j M_j = 0 exactly, so M_p is the linear completion of the rest.
    """
    sq = np.sqrt(q)
    dot = (eps * sq).sum(axis=-1, keepdims=True)
    return (sq * eps - q * dot) / q


def sample_fluctuation(rng: np.random.Generator, q: np.ndarray, shape) -> np.ndarray:
    eps = rng.standard_normal(tuple(shape) + (np.shape(q)[-1],))
    return fluctuation_from_normals(eps, q)


def _weights_from_scores(f: str, scores: np.ndarray):
    """Row-normalized sampling weights from reweighting scores.

    Rows whose raw weights sum to zero (possible for the clipped-identity
    function) fall back to uniform; all rows are floored at WEIGHT_FLOOR.
    Returns (weights, degenerate-row count).
    """
    raw = apply_reweight(f, scores)
    s = raw.sum(axis=-1, keepdims=True)
    bad = ~(s > 0)
    n_bad = int(np.count_nonzero(bad))
    if n_bad:
        raw = np.where(bad, 1.0, raw)
        s = raw.sum(axis=-1, keepdims=True)
    w = raw / s
    w = np.maximum(w, WEIGHT_FLOOR)
    w /= w.sum(axis=-1, keepdims=True)
    return w, n_bad


def _order_stat_index(alpha: float, m: int) -> int:
    """0-based index of the ceil((1-alpha)*m)-th smallest of m values."""
    k = math.ceil((1.0 - alpha) * m)
    return min(max(k, 1), m) - 1


def power_iid(
    q,
    h0: float,
    alpha: float = 0.05,
    n_mc: int = N_MC_IID,
    plan: SeedPlan = SeedPlan(0),
    n_quantile: int | None = None,
) -> PowerEstimate:
    """Limiting power of the randomization test under iid sampling.

    Phase one simulates the resampled-statistic limit (signal enters only
    through the constant h0*q_1 drift) and takes its (1-alpha) quantile;
    phase two simulates the observed-statistic limit, where the signal arm
    gains the full h0 shift, and reports the exceedance rate. The quantile
    phase defaults to QUANTILE_FACTOR * n_mc draws so that quantile noise
    is negligible next to the reported binomial standard error.
    """
    q = check_weights(normalize(q))
    p = len(q)
    if h0 < 0:
        raise ValueError("signal strength must be non-negative")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if n_quantile is None:
        n_quantile = QUANTILE_FACTOR * n_mc

    g = sample_fluctuation(derive_stream(plan, "iid-null"), q, (n_quantile,))
    t_null = h0 * q[0] + g.max(axis=1)
    zhat = np.partition(t_null, _order_stat_index(alpha, n_quantile))[
        _order_stat_index(alpha, n_quantile)
    ]

    h = sample_fluctuation(derive_stream(plan, "iid-alt"), q, (n_mc,))
    h[:, 0] += h0
    power = float(np.mean(h.max(axis=1) >= zhat))
    return PowerEstimate(
        power=power,
        se=float(np.sqrt(power * (1.0 - power) / n_mc)),
        n_mc=n_mc,
        alpha=alpha,
        config_fingerprint=config_fingerprint(
            {"op": "power_iid", "q": q, "h0": h0, "alpha": alpha, "n_mc": n_mc}
        ),
        diagnostics={"z_quantile": float(zhat)},
    )


@dataclass(frozen=True)
class AsymptoticDraw:
    """One fully materialized draw of the coupled two-stage limit.

    Exposes every intermediate quantity of a single outer draw and a
    single inner draw so tests can check the construction algebraically
    (completion identities, t=0 collapse, weight normalization).
    """

    r_f: float
    r_s: float
    h_f: np.ndarray
    g_f: np.ndarray
    w: np.ndarray
    w_tilde: np.ndarray
    q_second: np.ndarray
    q_tilde: np.ndarray
    h_s: np.ndarray
    g_s: np.ndarray
    t_adap: float
    t_tilde: float


def _second_stage_stat(q, eps_, w, q_second, bracket):
    num = q * math.sqrt(eps_) * w + q_second * math.sqrt(1.0 - eps_) * bracket
    den = eps_ * q + (1.0 - eps_) * q_second
    return (num / den).max(axis=-1)


def _w_shift(q, eps_, h0):
    """Drift of the observed-path first-stage vector W."""
    p = len(q)
    s = np.zeros(p)
    s[0] = math.sqrt(eps_) * h0
    s[p - 1] = math.sqrt(eps_) * h0 * q[0] * (1.0 - q[0])
    return s


def asymptotic_draw(
    eps_: float, t: float, f: str, q, h0: float, plan: SeedPlan = SeedPlan(0)
) -> AsymptoticDraw:
    """Materialize one coupled draw of the two-stage limiting quantities."""
    q = check_weights(normalize(q))
    rng = derive_stream(plan, "asymptotic-draw")
    r_f = float(rng.standard_normal())
    h_f = sample_fluctuation(rng, q, ())
    g_f = sample_fluctuation(rng, q, ())
    w = h_f + r_f + _w_shift(q, eps_, h0)
    w_tilde = g_f + r_f + math.sqrt(eps_) * h0 * q[0]
    q_second, _ = _weights_from_scores(f, t * w[None, :] / math.sqrt(eps_))
    q_tilde, _ = _weights_from_scores(f, t * w_tilde[None, :] / math.sqrt(eps_))
    q_second, q_tilde = q_second[0], q_tilde[0]
    r_s = float(rng.standard_normal())
    h_s = sample_fluctuation(rng, q_second, ())
    g_s = sample_fluctuation(rng, q_tilde, ())
    shift_obs = np.zeros(len(q))
    shift_obs[0] = math.sqrt(1.0 - eps_) * h0
    t_adap = _second_stage_stat(q, eps_, w, q_second, h_s + r_s + shift_obs)
    t_tilde = _second_stage_stat(
        q, eps_, w_tilde, q_tilde, g_s + r_s + math.sqrt(1.0 - eps_) * h0 * q_second[0]
    )
    return AsymptoticDraw(
        r_f=r_f, r_s=r_s, h_f=h_f, g_f=g_f, w=w, w_tilde=w_tilde,
        q_second=q_second, q_tilde=q_tilde, h_s=h_s, g_s=g_s,
        t_adap=float(t_adap), t_tilde=float(t_tilde),
    )


def power_adaptive(
    eps_: float,
    t: float,
    f: str,
    q,
    h0: float,
    alpha: float = 0.05,
    n_outer: int = N_OUTER,
    n_inner: int = N_INNER,
    plan: SeedPlan = SeedPlan(0),
) -> PowerEstimate:
    """Limiting power of the randomization test under two-stage sampling.

    Nested Monte Carlo. Each outer draw realizes the observed path: shared
    noise R_F, first-stage fluctuation H_F, drifted scores W, realized
    second-stage weights Q = normalize(f(t W / sqrt(eps))), then R_S, a
    second-stage fluctuation with covariance Sigma(Q), and the observed
    statistic T. The inner loop, holding (R_F, R_S, Q_1) fixed, redraws
    the resampled path (G_F, G_S and its own reweighting Q-tilde) n_inner
    times and estimates the conditional (1-alpha) quantile by the order
    statistic at ceil((1-alpha) n_inner). The returned power is the outer
    fraction of observed statistics at or above their conditional
    quantile.

    The resampled path's drift terms use the data-collection weights (q
    in stage one, the outer draw's Q_1 in stage two): the resamples see
    the signal only through the observed responses.
    """
    q = check_weights(normalize(q))
    p = len(q)
    if not 0.0 < eps_ < 1.0:
        raise ValueError("exploration fraction must lie strictly inside (0, 1)")
    if n_inner < 200:
        raise ValueError("need at least 200 inner draws per quantile")
    if h0 < 0:
        raise ValueError("signal strength must be non-negative")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")

    se_ = math.sqrt(eps_)
    sc_ = math.sqrt(1.0 - eps_)
    w_shift = _w_shift(q, eps_, h0)
    shift_obs = np.zeros(p)
    shift_obs[0] = sc_ * h0
    k_inner = _order_stat_index(alpha, n_inner)

    inner_block = 200
    outer_chunk = int(max(8, min(512, 2_000_000 // (inner_block * p))))
    hits = 0
    n_degenerate = 0
    n_chunks = math.ceil(n_outer / outer_chunk)
    for ci in range(n_chunks):
        c = min(outer_chunk, n_outer - ci * outer_chunk)
        rng = derive_stream(plan, "adaptive-outer", sub_index=ci)
        r_f = rng.standard_normal((c, 1))
        h_f = sample_fluctuation(rng, q, (c,))
        w = h_f + r_f + w_shift
        q2, bad = _weights_from_scores(f, t * w / se_)
        n_degenerate += bad
        r_s = rng.standard_normal((c, 1))
        h_s = fluctuation_from_normals(rng.standard_normal((c, p)), q2)
        t_obs = _second_stage_stat(q, eps_, w, q2, h_s + r_s + shift_obs)

        q1_outer = q2[:, :1]
        rng_in = derive_stream(plan, "adaptive-inner", sub_index=ci)
        t_tilde = np.empty((c, n_inner))
        done = 0
        while done < n_inner:
            m = min(inner_block, n_inner - done)
            g_f = fluctuation_from_normals(rng_in.standard_normal((c, m, p)), q)
            w_t = g_f + r_f[:, :, None] + se_ * h0 * q[0]
            qt, bad = _weights_from_scores(f, t * w_t / se_)
            n_degenerate += bad
            g_s = fluctuation_from_normals(rng_in.standard_normal((c, m, p)), qt)
            bracket = g_s + r_s[:, :, None] + sc_ * h0 * q1_outer[:, :, None]
            t_tilde[:, done : done + m] = _second_stage_stat(q, eps_, w_t, qt, bracket)
            done += m
        zhat = np.partition(t_tilde, k_inner, axis=1)[:, k_inner]
        hits += int(np.count_nonzero(t_obs >= zhat))

    power = hits / n_outer
    diag = {}
    if n_degenerate:
        diag["degenerate_weight_rows"] = n_degenerate
        log.debug("%d degenerate weight rows fell back to uniform", n_degenerate)
    return PowerEstimate(
        power=power,
        se=float(np.sqrt(power * (1.0 - power) / n_outer)),
        n_mc=n_outer,
        alpha=alpha,
        config_fingerprint=config_fingerprint(
            {
                "op": "power_adaptive", "eps": eps_, "t": t, "f": f, "q": q,
                "h0": h0, "alpha": alpha, "n_outer": n_outer, "n_inner": n_inner,
            }
        ),
        diagnostics=diag,
    )


@dataclass(frozen=True)
class OracleResult:
    """Grid maximizer of iid power over the signal arm's weight."""

    q1_star: float
    power_star: float
    flat: bool
    q1_grid: np.ndarray
    power_grid: np.ndarray
    se_grid: np.ndarray

    def __iter__(self):
        return iter((self.q1_star, self.power_star))


def oracle_q_star(
    p: int,
    h0: float,
    alpha: float = 0.05,
    grid_resolution: int = 41,
    n_mc: int = N_MC_IID,
    plan: SeedPlan = SeedPlan(0),
) -> OracleResult:
    """Best signal-arm weight for iid sampling, by grid search.

    Evaluates power_iid over an open grid of signal-arm weights (the other
    arms share the remainder equally) with common random numbers, so the
    argmax is stable at fine resolutions. ``flat`` is set when the whole
    profile lies within twice the largest standard error, as happens at
    h0=0 where every weight is equally (un)powerful.
    """
    if grid_resolution < 11:
        raise ValueError("grid must have at least 11 points")
    q1s = np.linspace(0.0, 1.0, grid_resolution + 2)[1:-1]
    powers = np.empty(grid_resolution)
    ses = np.empty(grid_resolution)
    for i, q1 in enumerate(q1s):
        est = power_iid(q_from_q1(float(q1), p), h0, alpha, n_mc, plan)
        powers[i] = est.power
        ses[i] = est.se
    best = int(np.argmax(powers))
    flat = bool(powers.max() - powers.min() <= 2.0 * ses.max())
    if flat:
        log.info("oracle profile is flat at h0=%g; argmax is arbitrary", h0)
    return OracleResult(
        q1_star=float(q1s[best]),
        power_star=float(powers[best]),
        flat=flat,
        q1_grid=q1s,
        power_grid=powers,
        se_grid=ses,
    )


HEATMAP_MODES = ("adaptive_vs_uniform", "adaptive_vs_oracle", "oracle_q1")


@dataclass(frozen=True)
class PowerGrid:
    """Power (and difference) surfaces over a (h0, p) grid."""

    h0_grid: np.ndarray
    p_grid: np.ndarray
    mode: str
    label_a: str
    label_b: str
    power_a: np.ndarray
    se_a: np.ndarray
    power_b: np.ndarray
    se_b: np.ndarray
    extra: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def rows(self):
        for i, h0 in enumerate(self.h0_grid):
            for j, p in enumerate(self.p_grid):
                row = {
                    "h0": float(h0),
                    "p": int(p),
                    "power_a": float(self.power_a[i, j]),
                    "se_a": float(self.se_a[i, j]),
                    "power_b": float(self.power_b[i, j]),
                    "se_b": float(self.se_b[i, j]),
                    "diff": float(self.power_a[i, j] - self.power_b[i, j]),
                    "diff_se": float(
                        math.hypot(self.se_a[i, j], self.se_b[i, j])
                    ),
                }
                for name, arr in self.extra.items():
                    row[name] = float(arr[i, j])
                yield row


def _bridge_t(t0: float, h0: float) -> float:
    # the reweighting scale is expressed per unit signal; no signal, no tilt
    return t0 / h0 if h0 > 0 else 0.0


def power_heatmap(
    h0_grid=HEATMAP_H0_GRID,
    p_grid=HEATMAP_P_GRID,
    mode: str = "adaptive_vs_uniform",
    params: dict | None = None,
    plan: SeedPlan = SeedPlan(0),
) -> PowerGrid:
    """Grid of limiting powers and their differences over (h0, p) cells.

    Modes: ``adaptive_vs_uniform`` compares the two-stage procedure
    against uniform iid sampling; ``adaptive_vs_oracle`` against the best
    iid weighting of the signal arm; ``oracle_q1`` reports the oracle
    weight itself (as ``q1_star``) next to the uniform baseline. Every
    cell reuses the same seed plan, so differences across cells ride on
    common random numbers. Cells that fail are NaN-filled and listed in
    ``failures``; the grid always completes.
    """
    if mode not in HEATMAP_MODES:
        raise ValueError(f"mode must be one of {HEATMAP_MODES}")
    h0_grid = np.asarray(h0_grid, dtype=np.float64)
    p_grid = np.asarray(p_grid, dtype=np.int64)
    if h0_grid.size == 0 or p_grid.size == 0:
        raise ValueError("grids must be non-empty")
    prm = {
        "alpha": 0.05, "eps": 0.5, "t0": math.log(2.0), "f": "exp",
        "n_mc": N_MC_IID, "n_outer": N_OUTER, "n_inner": N_INNER,
        "oracle_resolution": 41,
    }
    prm.update(params or {})

    shape = (len(h0_grid), len(p_grid))
    power_a = np.full(shape, np.nan)
    se_a = np.full(shape, np.nan)
    power_b = np.full(shape, np.nan)
    se_b = np.full(shape, np.nan)
    extra = {"q1_star": np.full(shape, np.nan)} if mode == "oracle_q1" else {}
    failures: list = []

    for i, h0 in enumerate(h0_grid):
        for j, p in enumerate(p_grid):
            p = int(p)
            try:
                if mode == "oracle_q1":
                    orc = oracle_q_star(
                        p, float(h0), prm["alpha"], prm["oracle_resolution"],
                        prm["n_mc"], plan,
                    )
                    a = PowerEstimate(
                        power=orc.power_star,
                        se=float(np.sqrt(orc.power_star * (1 - orc.power_star) / prm["n_mc"])),
                        n_mc=prm["n_mc"], alpha=prm["alpha"], config_fingerprint="",
                    )
                    extra["q1_star"][i, j] = orc.q1_star
                else:
                    a = power_adaptive(
                        prm["eps"], _bridge_t(prm["t0"], float(h0)), prm["f"],
                        uniform_weights(p), float(h0), prm["alpha"],
                        prm["n_outer"], prm["n_inner"], plan,
                    )
                if mode == "adaptive_vs_oracle":
                    orc = oracle_q_star(
                        p, float(h0), prm["alpha"], prm["oracle_resolution"],
                        prm["n_mc"], plan,
                    )
                    b = power_iid(q_from_q1(orc.q1_star, p), float(h0),
                                  prm["alpha"], prm["n_mc"], plan)
                else:
                    b = power_iid(uniform_weights(p), float(h0),
                                  prm["alpha"], prm["n_mc"], plan)
            except (ValueError, FloatingPointError) as exc:
                failures.append({"h0": float(h0), "p": p, "error": str(exc)})
                log.warning("heatmap cell (h0=%g, p=%d) failed: %s", h0, p, exc)
                continue
            power_a[i, j], se_a[i, j] = a.power, a.se
            power_b[i, j], se_b[i, j] = b.power, b.se

    label_b = {
        "adaptive_vs_uniform": "uniform_iid",
        "adaptive_vs_oracle": "oracle_iid",
        "oracle_q1": "uniform_iid",
    }[mode]
    label_a = "oracle_iid" if mode == "oracle_q1" else "two_stage"
    return PowerGrid(
        h0_grid=h0_grid, p_grid=p_grid, mode=mode,
        label_a=label_a, label_b=label_b,
        power_a=power_a, se_a=se_a, power_b=power_b, se_b=se_b,
        extra=extra, failures=failures,
    )


def sweep_epsilon_t(
    p: int,
    h0_list,
    eps_list,
    t0_list,
    alpha: float = 0.05,
    n_mc: int = N_OUTER,
    plan: SeedPlan = SeedPlan(0),
) -> list[dict]:
    """Two-stage power across exploration fractions and reweighting scales.

    Returns one row per (h0, eps, t0) combination at fixed p, each with
    the uniform-iid baseline computed under the same plan for reference.
    ``n_mc`` sets the outer sample size of the two-stage evaluator.
    """
    if not (len(list(h0_list)) and len(list(eps_list)) and len(list(t0_list))):
        raise ValueError("all sweep lists must be non-empty")
    rows = []
    for h0 in h0_list:
        base = power_iid(uniform_weights(p), float(h0), alpha, n_mc=N_MC_IID, plan=plan)
        for eps_ in eps_list:
            for t0 in t0_list:
                est = power_adaptive(
                    float(eps_), _bridge_t(float(t0), float(h0)), "exp",
                    uniform_weights(p), float(h0), alpha,
                    n_outer=n_mc, plan=plan,
                )
                rows.append(
                    {
                        "p": p, "h0": float(h0), "eps": float(eps_), "t0": float(t0),
                        "power": est.power, "se": est.se,
                        "power_uniform": base.power, "se_uniform": base.se,
                        "diff": est.power - base.power,
                    }
                )
    return rows


# --- finite-sample validation ----------------------------------------------


@dataclass(frozen=True)
class NormalMeansResponse:
    """Unit-variance Gaussian response with one mean per arm."""

    theta: np.ndarray

    def __call__(self, x, z, rng: np.random.Generator) -> float:
        return float(self.theta[x] + rng.standard_normal())

    def sample_batch(self, x, z, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(x)
        return self.theta[x] + rng.standard_normal(len(x))


@dataclass(frozen=True)
class NmmScenario:
    """One replication of the normal-means pipeline: collect, resample, test."""

    policy: AdaptivePolicy
    response: NormalMeansResponse
    stat: TestStatistic
    B: int
    n: int

    def run_one(self, plan: SeedPlan):
        record = run_experiment(self.policy, self.response, self.n, plan)
        return art_p_value(record, self.policy, self.stat, self.B, plan)

    def config(self) -> dict:
        return {
            "kind": "normal-means",
            "n": self.n,
            "policy": self.policy.policy_id,
            "theta": self.response.theta,
            "stat": self.stat.config(),
            "B": self.B,
        }


def finite_n_nmm_power(
    n: int,
    p: int,
    h0_abs: float,
    policy: AdaptivePolicy,
    stat: TestStatistic | None = None,
    B: int = 199,
    n_mc: int = 2000,
    alpha: float = 0.05,
    plan: SeedPlan = SeedPlan(0),
    workers: int = 1,
) -> PowerEstimate:
    """Finite-sample power of the full test pipeline in the arm model.

    Runs ``n_mc`` complete replications (collection under ``policy``,
    resampling, p-value) with the signal arm's mean set to h0_abs/sqrt(n),
    the scaling under which the limiting evaluators above are exact as n
    grows. This is the ground truth those evaluators are validated
    against.
    """
    if n < p:
        raise ValueError("need at least one sample per arm on average")
    theta = np.zeros(p)
    theta[0] = h0_abs / math.sqrt(n)
    scenario = NmmScenario(
        policy=policy,
        response=NormalMeansResponse(theta=theta),
        stat=stat if stat is not None else MaxArmMean(p),
        B=B,
        n=n,
    )
    return empirical_power(scenario, n_mc, alpha, plan, workers=workers)
