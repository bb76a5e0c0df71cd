"""Test statistics for randomization p-values.

Three statistics are provided: the maximum per-arm response mean, a
cross-validated L1-penalized logistic coefficient sum on the profile-order-
free augmented design, and the one-way F statistic on the same design.
Each comes in two forms: a plain function operating on explicit arrays
(the reference form) and a ``TestStatistic`` wrapper the p-value engine
evaluates on a record and on whole resample bundles at once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _lasso
from .core import SeedPlan, derive_stream

log = logging.getLogger(__name__)


def stat_max_arm_mean(x, y, p: int) -> float:
    """Largest per-arm mean response; arms with zero pulls are excluded."""
    x = np.asarray(x)
    y = np.asarray(y, dtype=np.float64)
    counts = np.bincount(x, minlength=p)
    sums = np.bincount(x, weights=y, minlength=p)
    pulled = counts > 0
    return float(np.max(sums[pulled] / counts[pulled]))


@dataclass(frozen=True)
class AugmentedDesign:
    """Stacked left/right profile rows with the response flipped on the right.

    Row t and row n+t come from the same original sample; the response of
    the right-profile row is 1-y so that profile order carries no signal.
    Levels are 1-based.
    """

    x_levels: np.ndarray
    z_levels: np.ndarray
    y: np.ndarray
    n: int

    def __post_init__(self):
        if not (len(self.x_levels) == len(self.z_levels) == len(self.y) == 2 * self.n):
            raise ValueError("augmented design must have exactly 2n rows")


def augment_no_profile_order(x, z, y) -> AugmentedDesign:
    """Stack (left, right) profile pairs into a 2n-row design.

    ``x`` and ``z`` are (n, 2) integer arrays of 1-based (left, right)
    levels; ``y`` is binary with 1 meaning the left profile was chosen.
    """
    x = np.asarray(x)
    z = np.asarray(z)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[1] != 2 or z.shape != x.shape:
        raise ValueError("x and z must be (n, 2) level-pair arrays")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("responses must be binary")
    n = x.shape[0]
    return AugmentedDesign(
        x_levels=np.concatenate([x[:, 0], x[:, 1]]),
        z_levels=np.concatenate([z[:, 0], z[:, 1]]),
        y=np.concatenate([y, 1 - y]).astype(np.float64),
        n=n,
    )


# --- cell collapsing -------------------------------------------------------
#
# Every augmented row's feature vector is determined by its (x level,
# z level) pair, so fits run on <= K*L weighted cells instead of 2n rows.


def cell_features(K: int, L: int) -> np.ndarray:
    """Feature rows for each (x level, z level) cell, original scale.

    Columns: x main-effect dummies for levels 2..K, z main-effect dummies
    for levels 2..L, then (x, z) interaction dummies in row-major (x outer)
    order. Level 1 is the baseline for both factors.
    """
    d = (K - 1) + (L - 1) + (K - 1) * (L - 1)
    feats = np.zeros((K * L, d))
    for xl in range(1, K + 1):
        for zl in range(1, L + 1):
            row = feats[(xl - 1) * L + (zl - 1)]
            if xl > 1:
                row[xl - 2] = 1.0
            if zl > 1:
                row[K - 1 + zl - 2] = 1.0
            if xl > 1 and zl > 1:
                row[(K - 1) + (L - 1) + (xl - 2) * (L - 1) + (zl - 2)] = 1.0
    return feats


def _cell_index(x_levels, z_levels, L: int) -> np.ndarray:
    return (np.asarray(x_levels) - 1) * L + (np.asarray(z_levels) - 1)


def _aggregate(cells, y, n_cells: int):
    nc = np.bincount(cells, minlength=n_cells).astype(np.float64)
    sc = np.bincount(cells, weights=y, minlength=n_cells)
    return nc, sc


def cv_fold_ids(n_rows: int, n_folds: int, seed: int) -> np.ndarray:
    """Balanced random fold assignment, a pure function of the seed."""
    rng = derive_stream(SeedPlan(seed), "cv-folds")
    return rng.permutation(n_rows) % n_folds


def stat_lasso_logistic(
    design: AugmentedDesign,
    levels: tuple[int, int],
    seed: int = 0,
    n_folds: int = 5,
    n_lambda: int = 50,
    lambda_min_ratio: float = 0.01,
) -> float:
    """Cross-validated L1-logistic coefficient sum on the augmented design.

    Fits response on x main-effect dummies, z main-effect dummies, and
    their interactions (baseline level 1 each, intercept unpenalized,
    features standardized per fit). The penalty grid has ``n_lambda``
    log-spaced points from lambda_max down to
    ``lambda_min_ratio * lambda_max`` and is shared by the fold fits; the
    selected penalty minimizes summed held-out deviance. The statistic is
    the sum of |coefficient| over x main effects and interactions on the
    original scale; z main effects are penalized nuisance columns and do
    not enter the sum.

    ``seed`` fixes the fold assignment so the statistic is a deterministic
    function of (design, seed).
    """
    K, L = levels
    y = design.y
    if np.all(y == y[0]):
        log.debug("single-class response; degenerate fit returns 0")
        return 0.0
    cells = _cell_index(design.x_levels, design.z_levels, L)
    fold = cv_fold_ids(len(y), n_folds, seed)
    return _lasso_from_cells(cells, y, fold, K, L, n_folds, n_lambda, lambda_min_ratio)


def _lasso_from_cells(cells, y, fold, K, L, n_folds, n_lambda, lambda_min_ratio) -> float:
    n_cells = K * L
    feats = cell_features(K, L)
    nc_all, sc_all = _aggregate(cells, y, n_cells)
    lambdas = _lasso.lambda_grid(feats, nc_all, sc_all, n_lambda, lambda_min_ratio)
    if lambdas.size == 0:
        log.debug("flat score at the intercept-only fit; statistic is 0")
        return 0.0

    # per-(fold, cell) aggregates; train aggregates are totals minus the fold
    nc_fold = np.zeros((n_folds, n_cells))
    sc_fold = np.zeros((n_folds, n_cells))
    flat = fold * n_cells + cells
    nc_flat = np.bincount(flat, minlength=n_folds * n_cells)
    sc_flat = np.bincount(flat, weights=y, minlength=n_folds * n_cells)
    nc_fold += nc_flat.reshape(n_folds, n_cells)
    sc_fold += sc_flat.reshape(n_folds, n_cells)

    cv_dev = np.zeros(len(lambdas))
    for v in range(n_folds):
        nc_tr = nc_all - nc_fold[v]
        sc_tr = sc_all - sc_fold[v]
        b0p, betap = _lasso.logistic_lasso_path(feats, nc_tr, sc_tr, lambdas)
        cv_dev += _lasso.held_out_deviance(feats, nc_fold[v], sc_fold[v], b0p, betap)
    pick = int(np.argmin(cv_dev))  # ties resolve to the largest penalty

    _, beta_full = _lasso.logistic_lasso_path(feats, nc_all, sc_all, lambdas)
    beta = beta_full[pick]
    x_main = np.abs(beta[: K - 1]).sum()
    inter = np.abs(beta[(K - 1) + (L - 1):]).sum()
    return float(x_main + inter)


def stat_f(design: AugmentedDesign, levels: int) -> float:
    """One-way F statistic for the x factor on the augmented design.

    Equals the F-test of joint nullity of all x-level dummies in an OLS of
    response on those dummies. Levels absent from the data drop out (the
    collinear-column drop), shrinking the numerator degrees of freedom.
    """
    y = design.y
    counts = np.bincount(design.x_levels - 1, minlength=levels).astype(np.float64)
    sums = np.bincount(design.x_levels - 1, weights=y, minlength=levels)
    return _f_from_groups(counts, sums, float((y * y).sum()))


def _f_from_groups(counts, sums, ss_total_raw) -> float:
    present = counts > 0
    g = int(present.sum())
    n_tot = counts.sum()
    if g < 2 or n_tot <= g:
        log.debug("degenerate one-way layout (%d groups, %d rows)", g, int(n_tot))
        return 0.0
    grand = sums.sum() / n_tot
    means = sums[present] / counts[present]
    ssb = float((counts[present] * (means - grand) ** 2).sum())
    sst = ss_total_raw - n_tot * grand * grand
    ssw = max(sst - ssb, 0.0)
    df1 = g - 1
    df2 = n_tot - g
    if ssw <= 0.0:
        return float("inf") if ssb > 0 else 0.0
    return float((ssb / df1) / (ssw / df2))


# --- engine-facing wrappers -------------------------------------------------


class TestStatistic:
    """Named statistic with single and batched evaluation over records.

    ``evaluate`` consumes one (x, z, y) triple; ``evaluate_many`` consumes a
    (B, n) matrix of treatment sequences sharing the observed (z, y).
    Internal randomness (CV folds) is derived from the record seed passed
    in, never from ambient state.
    """

    name: str = "stat"

    def evaluate(self, x, z, y, seed: int = 0) -> float:
        raise NotImplementedError

    def evaluate_many(self, xs, z, y, seed: int = 0) -> np.ndarray:
        return np.array([self.evaluate(x, z, y, seed=seed) for x in xs])

    def config(self) -> dict:
        return {"name": self.name}


class MaxArmMean(TestStatistic):
    """Maximum per-arm mean response over p arms."""

    def __init__(self, p: int):
        self.p = p
        self.name = "max_arm_mean"

    def evaluate(self, x, z, y, seed: int = 0) -> float:
        return stat_max_arm_mean(x, y, self.p)

    def evaluate_many(self, xs, z, y, seed: int = 0) -> np.ndarray:
        xs = np.asarray(xs)
        B, n = xs.shape
        flat = (xs + self.p * np.arange(B)[:, None]).ravel()
        counts = np.bincount(flat, minlength=B * self.p).reshape(B, self.p)
        sums = np.bincount(
            flat, weights=np.broadcast_to(y, (B, n)).ravel(), minlength=B * self.p
        ).reshape(B, self.p)
        means = np.where(counts > 0, sums / np.maximum(counts, 1), -np.inf)
        return means.max(axis=1)

    def config(self) -> dict:
        return {"name": self.name, "p": self.p}


def _decode_pairs(codes, width: int) -> np.ndarray:
    """Flat pair codes -> (n, 2) of 1-based (left, right) levels."""
    codes = np.asarray(codes)
    return np.stack([codes // width + 1, codes % width + 1], axis=1)


class PairedStatistic(TestStatistic):
    """Base for statistics on flattened (left, right) pair records."""

    def __init__(self, K: int, L: int):
        self.K = K
        self.L = L

    def _design(self, x, z, y) -> AugmentedDesign:
        return augment_no_profile_order(
            _decode_pairs(x, self.K), _decode_pairs(z, self.L), np.asarray(y, dtype=np.int64)
        )

    def _cells(self, x, z) -> np.ndarray:
        # augmented cell index per row: left rows then right rows
        x = np.asarray(x)
        z = np.asarray(z)
        left = (x // self.K) * self.L + z // self.L
        right = (x % self.K) * self.L + z % self.L
        return np.concatenate([left, right])

    def config(self) -> dict:
        return {"name": self.name, "K": self.K, "L": self.L}


class LassoLogistic(PairedStatistic):
    """Cross-validated L1-logistic coefficient sum for pair records."""

    def __init__(self, K: int, L: int, n_folds: int = 5, n_lambda: int = 50,
                 lambda_min_ratio: float = 0.01):
        super().__init__(K, L)
        self.n_folds = n_folds
        self.n_lambda = n_lambda
        self.lambda_min_ratio = lambda_min_ratio
        self.name = "lasso_logistic"

    def evaluate(self, x, z, y, seed: int = 0) -> float:
        y = np.asarray(y, dtype=np.float64)
        y_aug = np.concatenate([y, 1.0 - y])
        fold = cv_fold_ids(len(y_aug), self.n_folds, seed)
        return _lasso_from_cells(
            self._cells(x, z), y_aug, fold, self.K, self.L,
            self.n_folds, self.n_lambda, self.lambda_min_ratio,
        )

    def evaluate_many(self, xs, z, y, seed: int = 0) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        y_aug = np.concatenate([y, 1.0 - y])
        fold = cv_fold_ids(len(y_aug), self.n_folds, seed)
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            out[i] = _lasso_from_cells(
                self._cells(x, z), y_aug, fold, self.K, self.L,
                self.n_folds, self.n_lambda, self.lambda_min_ratio,
            )
        return out

    def config(self) -> dict:
        return super().config() | {
            "n_folds": self.n_folds,
            "n_lambda": self.n_lambda,
            "lambda_min_ratio": self.lambda_min_ratio,
        }


class FStatistic(PairedStatistic):
    """One-way F statistic for the x factor on pair records."""

    def __init__(self, K: int, L: int):
        super().__init__(K, L)
        self.name = "f_stat"

    def evaluate(self, x, z, y, seed: int = 0) -> float:
        return stat_f(self._design(x, z, y), self.K)

    def evaluate_many(self, xs, z, y, seed: int = 0) -> np.ndarray:
        xs = np.asarray(xs)
        B, n = xs.shape
        y = np.asarray(y, dtype=np.float64)
        y_aug = np.concatenate([y, 1.0 - y])
        lvls = np.concatenate([xs // self.K, xs % self.K], axis=1)  # (B, 2n), 0-based
        flat = (lvls + self.K * np.arange(B)[:, None]).ravel()
        counts = np.bincount(flat, minlength=B * self.K).reshape(B, self.K).astype(np.float64)
        sums = np.bincount(
            flat, weights=np.broadcast_to(y_aug, (B, 2 * n)).ravel(), minlength=B * self.K
        ).reshape(B, self.K)
        ss_raw = float((y_aug * y_aug).sum())
        return np.array([
            _f_from_groups(counts[b], sums[b], ss_raw) for b in range(B)
        ])


STATISTICS = {"max_arm_mean": MaxArmMean, "lasso_logistic": LassoLogistic, "f_stat": FStatistic}
