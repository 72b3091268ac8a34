"""Weighted Monte Carlo summaries: self-normalized means, ESS, ECDFs and KS tests."""
import math

import numpy as np

__all__ = [
    "normalize_log_weights", "ess", "weighted_mean", "weighted_var", "weighted_ecdf",
    "weighted_ks", "ks_critical", "ks_distance", "KS_C",
]

# asymptotic two-sample Kolmogorov-Smirnov coefficients c(alpha)
KS_C = {0.1: 1.224, 0.05: 1.358, 0.01: 1.628, 0.001: 1.949}


def normalize_log_weights(log_w):
    log_w = np.asarray(log_w, dtype=float)
    if not np.all(np.isfinite(log_w)):
        raise FloatingPointError("non-finite log weight")
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def ess(w):
    """Kish effective sample size of normalized weights."""
    w = np.asarray(w, dtype=float)
    return float(1.0 / np.sum(w * w))


def weighted_mean(values, w):
    """Self-normalized mean and its delta-method standard error."""
    values = np.asarray(values, dtype=float)
    m = float(w @ values)
    se = math.sqrt(float(np.sum(w * w * (values - m) ** 2)))
    return m, se


def weighted_var(values, w):
    """Weighted variance with a delta-method standard error."""
    values = np.asarray(values, dtype=float)
    m = float(w @ values)
    c2 = (values - m) ** 2
    var = float(w @ c2)
    se = math.sqrt(float(np.sum(w * w * (c2 - var) ** 2)))
    return var, se


def weighted_ecdf(values, w, z):
    """F(z) = sum w_i 1{v_i <= z} with pointwise standard errors."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    v = values[order]
    cw = np.concatenate([[0.0], np.cumsum(w[order])])
    z = np.atleast_1d(z)
    F = cw[np.searchsorted(v, z, side="right")]
    w2 = w[order] ** 2
    cw2 = np.concatenate([[0.0], np.cumsum(w2)])
    k = np.searchsorted(v, z, side="right")
    # sum w_i^2 (1{v_i<=z} - F)^2 split over the two sides
    below = cw2[k]
    above = cw2[-1] - below
    se = np.sqrt(below * (1 - F) ** 2 + above * F ** 2)
    return F, se


def ks_critical(n1, n2, alpha=0.01):
    return KS_C[alpha] * math.sqrt((n1 + n2) / (n1 * n2))


def weighted_ks(x1, w1, x2, w2, alpha=0.01):
    """Two-sample KS statistic on weighted ECDFs; critical value uses the ESS of each side.

    Returns (D, critical, passed).
    """
    z = np.concatenate([x1, x2])
    F1, _ = weighted_ecdf(x1, w1, z)
    F2, _ = weighted_ecdf(x2, w2, z)
    D = float(np.max(np.abs(F1 - F2)))
    crit = ks_critical(ess(w1), ess(w2), alpha)
    return D, crit, D < crit


def _sorted_cdf(x, w):
    order = np.argsort(x, kind="stable")
    return np.asarray(x, dtype=float)[order], np.concatenate([[0.0], np.cumsum(np.asarray(w)[order])])


def ks_distance(x1, w1, x2=None, w2=None, cdf=None):
    """sup_z |F1(z) - F2(z)| including left limits, so atoms on either side are handled.

    Pass either a second weighted sample or a continuous reference ``cdf``.
    """
    v1, c1 = _sorted_cdf(x1, w1)
    if cdf is not None:
        ref = cdf(v1)
        hi = c1[np.searchsorted(v1, v1, side="right")]
        lo = c1[np.searchsorted(v1, v1, side="left")]
        return float(max(np.max(np.abs(hi - ref)), np.max(np.abs(lo - ref))))
    v2, c2 = _sorted_cdf(x2, w2)
    z = np.concatenate([v1, v2])
    best = 0.0
    for side in ("right", "left"):
        F1 = c1[np.searchsorted(v1, z, side=side)]
        F2 = c2[np.searchsorted(v2, z, side=side)]
        best = max(best, float(np.max(np.abs(F1 - F2))))
    return best
