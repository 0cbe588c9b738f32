"""Small statistical helpers shared by the walk and harness layers."""

from __future__ import annotations

import math

import numpy as np

from .errors import InsufficientEvents


def wilson_ci(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials <= 0:
        raise InsufficientEvents("no trials")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = (
        z
        * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
        / denom
    )
    return (max(0.0, center - half), min(1.0, center + half))


def ks_distance(sample, cdf) -> float:
    """sup_x |F_n(x) - F(x)| against a callable CDF."""
    xs = np.sort(np.asarray(sample, dtype=np.float64))
    m = len(xs)
    if m == 0:
        raise InsufficientEvents("empty sample")
    fx = np.asarray([cdf(x) for x in xs])
    upper = np.abs(np.arange(1, m + 1) / m - fx).max()
    lower = np.abs(fx - np.arange(0, m) / m).max()
    return float(max(upper, lower))


def fit_wls_loglog(ns, p_hats, weights=None):
    """Weighted least-squares slope/intercept of log p against log n.

    Weights default to inverse squared relative standard errors when a
    (p_hat, trials) description is not available; callers pass explicit
    weights for binomial estimates. Returns (slope, intercept, stderr).
    """
    ns = np.asarray(ns, dtype=np.float64)
    ps = np.asarray(p_hats, dtype=np.float64)
    if np.any(ps <= 0):
        raise InsufficientEvents("nonpositive probability estimate")
    x = np.log(ns)
    y = np.log(ps)
    w = np.ones_like(x) if weights is None else np.asarray(weights, np.float64)
    wsum = w.sum()
    xbar = (w * x).sum() / wsum
    ybar = (w * y).sum() / wsum
    sxx = (w * (x - xbar) ** 2).sum()
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    intercept = ybar - slope * xbar
    resid = y - intercept - slope * x
    dof = max(len(x) - 2, 1)
    s2 = (w * resid**2).sum() / dof
    stderr = math.sqrt(s2 / sxx)
    return slope, intercept, stderr


def rank_test_less(sample_a, sample_b) -> float:
    """One-sided Mann-Whitney p-value for the tendency a < b."""
    from scipy.stats import mannwhitneyu

    res = mannwhitneyu(sample_a, sample_b, alternative="less", method="asymptotic")
    return float(res.pvalue)


def ks_test_pvalue(sample, cdf) -> float:
    from scipy.stats import kstest

    return float(kstest(sample, cdf).pvalue)
