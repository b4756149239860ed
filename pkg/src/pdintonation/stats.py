"""Rank statistics, log-feature regression and detection curves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import DegenerateDataError

EXACT_MAX_SMALL = 12
EXACT_MAX_TOTAL = 25


@dataclass(frozen=True)
class CorrelationResult:
    rho_s: float
    p_value: float
    n: int

    @property
    def z(self):
        return self.rho_s * math.sqrt(self.n - 1)


@dataclass(frozen=True)
class RegressionModel:
    coefficients: np.ndarray
    feature_names: tuple
    r_squared: float

    def predict(self, features):
        x = _log_design(features)
        return x @ self.coefficients


@dataclass
class DetectionCurves:
    ecdf_pos: np.ndarray
    ecdf_neg: np.ndarray
    band_epsilon_pos: float
    band_epsilon_neg: float
    eer: float
    eer_pessimistic: float
    roc_points: np.ndarray
    roc_smoothed: np.ndarray
    auc: float
    extras: dict = field(default_factory=dict)


def midranks(x):
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("midranks of an empty sequence")
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    start = 0
    for i in range(1, x.size + 1):
        if i == x.size or xs[i] != xs[start]:
            ranks[order[start:i]] = 0.5 * (start + 1 + i)
            start = i
    return ranks


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    return float(np.dot(a, b)) / denom


def spearman(x, y) -> CorrelationResult:
    """Tie-corrected Spearman coefficient with a one-sided normal p-value.

    The coefficient is the Pearson correlation of the midranks. The p-value
    refers Z = rho * sqrt(n - 1) to the standard normal, on the side of the
    observed sign.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise ValueError("spearman needs at least 3 pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateDataError("constant input; rank correlation undefined")
    rho = _pearson(midranks(x), midranks(y))
    rho = min(1.0, max(-1.0, rho))
    z = rho * math.sqrt(x.size - 1)
    p = norm.sf(z) if rho >= 0 else norm.cdf(z)
    return CorrelationResult(rho, float(p), int(x.size))


def _ranksum_counts(doubled_ranks, k):
    """Number of k-subsets of the (integer) doubled ranks reaching each sum."""
    total = int(sum(doubled_ranks))
    # table[j][s]: subsets of size j with doubled rank sum s
    table = [np.zeros(total + 1, dtype=object) for _ in range(k + 1)]
    table[0][0] = 1
    for r in doubled_ranks:
        r = int(r)
        for j in range(min(k, len(doubled_ranks)), 0, -1):
            prev = table[j - 1]
            if r:
                table[j][r:] = table[j][r:] + prev[:-r]
            else:
                table[j] = table[j] + prev
    return table[k]


def wilcoxon_ranksum(a, b, method="auto") -> float:
    """Two-sided p-value of the Wilcoxon rank-sum test.

    ``method`` is ``"exact"`` (enumerate the permutation distribution of the
    rank sum, ties kept as midranks), ``"normal"`` (tie-corrected variance,
    continuity correction) or ``"auto"``, which picks the exact path when the
    smaller group has at most 12 members and both together at most 25.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    n1, n2 = a.size, b.size
    n = n1 + n2
    if n < 3:
        raise ValueError("combined sample size must be at least 3")
    ranks = midranks(np.concatenate([a, b]))
    if method == "auto":
        method = "exact" if min(n1, n2) <= EXACT_MAX_SMALL and n <= EXACT_MAX_TOTAL else "normal"
    if method == "exact":
        doubled = np.rint(2.0 * ranks).astype(int)
        w_obs = int(doubled[:n1].sum())
        counts = _ranksum_counts(doubled, n1)
        total = math.comb(n, n1)
        lower = int(sum(counts[: w_obs + 1]))
        upper = int(sum(counts[w_obs:]))
        return min(1.0, 2.0 * min(lower, upper) / total)
    if method != "normal":
        raise ValueError(f"unknown method {method!r}")
    w = ranks[:n1].sum()
    mean = n1 * (n + 1) / 2.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return 1.0
    diff = abs(w - mean)
    z = max(diff - 0.5, 0.0) / math.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(z)))


def _log_design(features):
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("regression features must be finite and strictly positive")
    return np.column_stack([np.ones(x.shape[0]), np.log(x)])


def r_squared(predicted, labels):
    """1 - Var[pred - labels] / Var[labels] with population variances."""
    predicted = np.asarray(predicted, dtype=float)
    labels = np.asarray(labels, dtype=float)
    var_y = np.var(labels)
    if var_y == 0.0:
        raise DegenerateDataError("labels have zero variance")
    return float(1.0 - np.var(predicted - labels) / var_y)


def fit_regression(features, labels, feature_names=None) -> RegressionModel:
    """Least-squares fit of labels on the natural logs of positive features.

    Coefficients come from the normal equations (X^T X) r = X^T y, with X the
    log features preceded by a column of ones.
    """
    x = _log_design(features)
    y = np.asarray(labels, dtype=float)
    if y.shape != (x.shape[0],):
        raise ValueError("one label per feature row required")
    if x.shape[0] < x.shape[1] + 1:
        raise DegenerateDataError(
            f"{x.shape[0]} rows cannot support {x.shape[1]} coefficients plus a residual"
        )
    if np.var(y) == 0.0:
        raise DegenerateDataError("labels have zero variance")
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise DegenerateDataError("design matrix is rank deficient")
    coef = np.linalg.solve(x.T @ x, x.T @ y)
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(1, x.shape[1]))
    return RegressionModel(coef, tuple(feature_names), r_squared(x @ coef, y))


def ecdf(values):
    """Step ECDF as (sorted unique values, fraction <= value) pairs."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("ECDF of an empty sample")
    uniq = np.unique(v)
    frac = np.searchsorted(v, uniq, side="right") / v.size
    return np.column_stack([uniq, frac])


def ecdf_at(values, q):
    v = np.sort(np.asarray(values, dtype=float))
    return np.searchsorted(v, q, side="right") / v.size


def dkw_epsilon(n, alpha):
    """Half-width sqrt(ln(2/alpha) / (2n)) of the distribution-free band."""
    if n <= 0:
        raise ValueError("band needs at least one sample")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def ecdf_with_band(values, alpha=0.01):
    """ECDF points with lower/upper band columns and the band half-width."""
    pts = ecdf(values)
    eps = dkw_epsilon(len(np.atleast_1d(values)), alpha)
    lo = np.maximum(pts[:, 1] - eps, 0.0)
    hi = np.minimum(pts[:, 1] + eps, 1.0)
    return np.column_stack([pts, lo, hi]), eps


def error_rates(scores_pos, scores_neg, thresholds=None):
    """False-negative and false-positive rates of the rule ``score >= t``.

    Thresholds default to the sorted union of scores followed by +inf.
    """
    pos = np.sort(np.asarray(scores_pos, dtype=float))
    neg = np.sort(np.asarray(scores_neg, dtype=float))
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both classes need at least one score")
    if thresholds is None:
        thresholds = np.append(np.unique(np.concatenate([pos, neg])), np.inf)
    fnr = np.searchsorted(pos, thresholds, side="left") / pos.size
    fpr = 1.0 - np.searchsorted(neg, thresholds, side="left") / neg.size
    return thresholds, fnr, fpr


def _crossing(fnr, fpr):
    # fnr - fpr is nondecreasing in the threshold and changes sign once.
    d = fnr - fpr
    j = int(np.argmax(d >= 0.0))
    if d[j] == 0.0 or j == 0:
        return float(fnr[j])
    lam = -d[j - 1] / (d[j] - d[j - 1])
    return float(fnr[j - 1] + lam * (fnr[j] - fnr[j - 1]))


def eer(scores_pos, scores_neg, use_band=False, alpha=0.01):
    """Equal error rate of the detector ``score >= t`` for the positive class.

    With ``use_band`` the rates are replaced by their pessimistic band edges
    (rate + epsilon, clipped at 1) before locating the crossing.
    """
    _, fnr, fpr = error_rates(scores_pos, scores_neg)
    if use_band:
        fnr = np.minimum(fnr + dkw_epsilon(len(scores_pos), alpha), 1.0)
        fpr = np.minimum(fpr + dkw_epsilon(len(scores_neg), alpha), 1.0)
    return _crossing(fnr, fpr)


def smooth_curve(points, window):
    """Centred moving average of consecutive points; ends use shrunken windows."""
    if window < 1 or window % 2 == 0:
        raise ValueError("smoothing window must be a positive odd integer")
    pts = np.asarray(points, dtype=float)
    half = window // 2
    out = np.empty_like(pts)
    n = pts.shape[0]
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = pts[i - h: i + h + 1].mean(axis=0)
    return out


def roc_points(scores_pos, scores_neg):
    _, fnr, fpr = error_rates(scores_pos, scores_neg)
    pts = np.column_stack([fpr, 1.0 - fnr])
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    return pts[order]


def trapezoid_auc(points):
    x, y = points[:, 0], points[:, 1]
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) * 0.5))


def roc_auc(scores_pos, scores_neg, smooth_window=5, alpha=0.01) -> DetectionCurves:
    """ROC from the full threshold sweep, AUC by the trapezoidal rule.

    The AUC is computed on the raw points; the smoothed curve is for
    plotting only. The returned curves also carry ECDFs with confidence
    bands and both EER estimates.
    """
    pos = np.asarray(scores_pos, dtype=float)
    neg = np.asarray(scores_neg, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both classes need at least one score")
    raw = roc_points(pos, neg)
    ecdf_pos, eps_pos = ecdf_with_band(pos, alpha)
    ecdf_neg, eps_neg = ecdf_with_band(neg, alpha)
    return DetectionCurves(
        ecdf_pos=ecdf_pos,
        ecdf_neg=ecdf_neg,
        band_epsilon_pos=eps_pos,
        band_epsilon_neg=eps_neg,
        eer=eer(pos, neg),
        eer_pessimistic=eer(pos, neg, use_band=True, alpha=alpha),
        roc_points=raw,
        roc_smoothed=smooth_curve(raw, smooth_window),
        auc=trapezoid_auc(raw),
    )


def pairwise_auc(scores_pos, scores_neg):
    """P(positive outscores negative), ties counted as one half."""
    pos = np.asarray(scores_pos, dtype=float)[:, None]
    neg = np.asarray(scores_neg, dtype=float)[None, :]
    return float(np.mean((pos > neg) + 0.5 * (pos == neg)))
