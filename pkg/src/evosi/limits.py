"""Limit constants and barrier-crossing formulas for the critical window.

This layer carries the diffusion-limit objects attached to a degree model
at criticality: the constants built from the first three moments, the
parabolic-barrier survival function F1 together with its Airy-series
representation, the auxiliary Laplace-type integral F2, the Brownian
meander endpoint law, and a path-simulation oracle used to cross-check
the series against the probabilistic definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .airy import AiryTable, airy_ai, airy_ai_prime
from .degrees import DegreeModel, model_constants
from .errors import InvalidRegime, OutOfRange, SeriesDivergence

# The q -> 0 closed form needs at least this many exact zeros before the
# analytic tail estimate takes over.
DEFAULT_ZERO_COUNT = 50

_MAX_SERIES_TERMS = 200


class SeriesValue(NamedTuple):
    value: float
    truncation_bound: float


class OracleEstimate(NamedTuple):
    estimate: float
    std_error: float
    bias_bound: float


@dataclass(frozen=True)
class LimitConstants:
    """Closed-form constants of a (model, rho) pair at the critical rate."""

    m1: float
    sigma: float
    rho_over_lambda: float
    delta: float
    c_diff: float
    c_par: float
    c_prime: float
    c_f1lim: float
    c_main: float


_AIRY_CACHE: dict = {"table": None}


def _airy_table(count):
    table = _AIRY_CACHE["table"]
    if table is None or len(table.zeros) < count:
        table = AiryTable.build(max(64, count))
        _AIRY_CACHE["table"] = table
    return table


def f2(x, q, constants):
    """The Laplace-type integral

        (2 c_par^2)^(1/3) * Int_0^inf exp(x t (2 c_par^2)^(1/3)
            - (2/3) c_par^2 t^3 - 2 c_par^2 q t^2 - 2 c_par^2 q^2 t) dt,

    evaluated by adaptive quadrature after a log-domain shift, with the
    upper cutoff chosen where the integrand has decayed below 1e-16."""
    x = float(x)
    q = float(q)
    if not math.isfinite(x) or not math.isfinite(q) or q < 0.0:
        raise OutOfRange(f"f2 requires finite x and q >= 0, got x={x!r}, q={q!r}")
    c2 = constants.c_par * constants.c_par
    a = (2.0 * c2) ** (1.0 / 3.0)

    def exponent(t):
        return a * x * t - (2.0 / 3.0) * c2 * t ** 3 - 2.0 * c2 * q * t * t - 2.0 * c2 * q * q * t

    # Stationary point of the exponent, when one exists at positive t.
    t_peak = 0.0
    slope0 = a * x - 2.0 * c2 * q * q
    if slope0 > 0.0:
        t_peak = (-2.0 * q + math.sqrt(4.0 * q * q + 2.0 * slope0 / c2)) / 2.0
    shift = exponent(t_peak) if t_peak > 0.0 else 0.0

    floor = math.log(1e-16) - 9.0
    cutoff = max(1.0, 2.0 * t_peak)
    while exponent(cutoff) - shift > floor:
        cutoff *= 1.5

    points = [t_peak] if 0.0 < t_peak < cutoff else None
    value, _ = quad(
        lambda t: math.exp(exponent(t) - shift),
        0.0,
        cutoff,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
        points=points,
    )
    log_result = math.log(a) + shift + math.log(value) if value > 0.0 else -math.inf
    if log_result >= math.log(np.finfo(float).max):
        return math.inf
    return a * math.exp(shift) * value


def f1_series(x, q, constants, tol=1e-10, max_terms=_MAX_SERIES_TERMS):
    """Survival probability of the parabolic-barrier event via the Airy
    series

        1 - exp(-2 c_par sigma q^(3/2) x sqrt((1+rho/lambda) m1) / c_diff)
          * ( Ai(c' sqrt(q) x)/Ai(0)
              + sum_k (F2(z_k, q) + 1/z_k) Ai(z_k + c' sqrt(q) x)/Ai'(z_k) ),

    truncated once the running term bound drops below `tol`, clamped to
    [0, 1].  Models with delta < 0 have no supercritical window and the
    function is identically zero for them."""
    x = float(x)
    q = float(q)
    if not math.isfinite(x) or x < 0.0:
        raise OutOfRange(f"f1_series requires x >= 0, got {x!r}")
    if not math.isfinite(q) or q <= 0.0:
        raise OutOfRange(f"f1_series requires q > 0, got {q!r}")
    if constants.delta <= 0.0:
        return 0.0

    shift = constants.c_prime * math.sqrt(q) * x
    rate = (
        2.0
        * constants.c_par
        * constants.sigma
        * q ** 1.5
        * x
        * math.sqrt((1.0 + constants.rho_over_lambda) * constants.m1)
        / constants.c_diff
    )
    prefactor = math.exp(-rate)

    table = _airy_table(min(max_terms, 64))
    series = table.ai(shift) / airy_ai(0.0)
    small_streak = 0
    converged = False
    for k in range(1, max_terms + 1):
        if k > len(table.zeros):
            table = _airy_table(min(max_terms, max(64, 2 * k)))
        z = table.zeros[k - 1]
        aip = table.ai_prime_at_zeros[k - 1]
        term = (f2(z, q, constants) + 1.0 / z) * table.ai(z + shift) / aip
        series += term
        # Terms oscillate with k, so an isolated small term does not end
        # the tail; require two consecutive hits of the bound.
        small_streak = small_streak + 1 if abs(term) < tol else 0
        if small_streak >= 2:
            converged = True
            break
    if not converged:
        raise SeriesDivergence(
            f"Airy series for F1(x={x}, q={q}) did not meet the term bound "
            f"{tol} within {max_terms} terms"
        )
    return min(1.0, max(0.0, 1.0 - prefactor * series))


def _zero_asymptotic(indices):
    """Large-index approximation of the k-th negative zero of Ai."""
    t = 3.0 * math.pi * (4.0 * indices - 1.0) / 8.0
    return -(t ** (2.0 / 3.0)) * (1.0 + 5.0 / (48.0 * t * t))


def c_f1lim_detail(constants, zero_count=DEFAULT_ZERO_COUNT):
    """The q -> 0 slope of E[F1(meander, q)]/sqrt(q), with its truncation
    bound:

        -c' (Ai'(0)/Ai(0) + sum_k (F2(z_k, 0) + 1/z_k)) * sqrt(pi/2),

    summing `zero_count` exact zeros and closing the series with the
    analytic tail F2(z,0) + 1/z = -2/z^4 - 40/z^7 - O(z^-10) over the
    asymptotic zero locations."""
    if constants.delta <= 0.0:
        raise InvalidRegime("the q -> 0 slope requires delta > 0")
    if zero_count < 10:
        raise OutOfRange(f"zero_count must be at least 10, got {zero_count!r}")
    table = _airy_table(zero_count)
    core = airy_ai_prime(0.0) / airy_ai(0.0)
    for k in range(zero_count):
        z = table.zeros[k]
        core += f2(z, 0.0, constants) + 1.0 / z
    tail_indices = np.arange(zero_count + 1, 500_001, dtype=float)
    z_tail = _zero_asymptotic(tail_indices)
    core += float(np.sum(-2.0 / z_tail ** 4 - 40.0 / z_tail ** 7))
    value = -constants.c_prime * core * math.sqrt(math.pi / 2.0)
    bound = abs(constants.c_prime) * (
        zero_count * 1e-10
        + float(np.sum(2240.0 / np.abs(z_tail) ** 10))
        + 1e-9
    )
    return SeriesValue(value=value, truncation_bound=bound)


def c_f1lim(constants, zero_count=DEFAULT_ZERO_COUNT):
    """Value-only form of :func:`c_f1lim_detail`."""
    return c_f1lim_detail(constants, zero_count=zero_count).value


def meander_limit_factor_from(m1, sigma_sq, rho_over_lambda):
    """(pi sigma^2 (1 + rho/lambda_c) / (2 m1))^(-1/2): the q -> 0 limit of
    q^(1/2) times the scaled walk survival constants."""
    return (math.pi * sigma_sq * (1.0 + rho_over_lambda) / (2.0 * m1)) ** -0.5


def c_main(constants):
    """The outbreak-probability constant: the meander limit factor times
    the q -> 0 slope of the conditional survival functional."""
    if constants.delta <= 0.0:
        raise InvalidRegime("the outbreak constant requires delta > 0")
    factor = meander_limit_factor_from(
        constants.m1, constants.sigma ** 2, constants.rho_over_lambda
    )
    return factor * constants.c_f1lim


def limit_constants(model: DegreeModel, rho: float, zero_count=DEFAULT_ZERO_COUNT) -> LimitConstants:
    """All diffusion-limit constants of (model, rho) at the critical rate."""
    mc = model_constants(model, rho)
    c_diff = float(mc.diffusion_coef)
    c_par = float(mc.m1) * float(mc.delta) / (2.0 * c_diff)
    rho_over_lambda = rho / float(mc.lambda_c)
    sigma = math.sqrt(mc.sigma_sq)
    partial = LimitConstants(
        m1=float(mc.m1),
        sigma=sigma,
        rho_over_lambda=rho_over_lambda,
        delta=float(mc.delta),
        c_diff=c_diff,
        c_par=c_par,
        c_prime=math.nan,
        c_f1lim=0.0,
        c_main=0.0,
    )
    if mc.delta <= 0.0:
        return partial
    c_prime = (
        (4.0 * c_par) ** (1.0 / 3.0)
        * sigma
        * math.sqrt((1.0 + rho_over_lambda) * mc.m1)
        / c_diff
    )
    partial = replace(partial, c_prime=c_prime)
    slope = float(c_f1lim(partial, zero_count=zero_count))
    partial = replace(partial, c_f1lim=slope)
    return replace(partial, c_main=float(c_main(partial)))


def meander_cdf(x):
    """CDF 1 - exp(-x^2/2) of the Brownian meander endpoint."""
    x = float(x)
    if math.isnan(x):
        raise OutOfRange("meander_cdf requires a real argument")
    if x <= 0.0:
        return 0.0
    return -math.expm1(-0.5 * x * x)


def meander_sample(rng, size=None):
    """Inverse-transform sample(s) sqrt(-2 log U) of the meander endpoint."""
    u = rng.random(size)
    return np.sqrt(-2.0 * np.log1p(-u)) if size is not None else math.sqrt(-2.0 * math.log1p(-u))


def _horizon(h, q, constants, bound=1e-4):
    """Shortest horizon U with post-horizon ruin bound below `bound`.

    Beyond U the barrier level exceeds L(u) = h + (drift/2)(u^2 + 2qu),
    and ruin in the dyadic block [U 2^j, U 2^(j+1)] is dominated by the
    reflection bound exp(-L(U 2^j)^2 / (2 c_diff^2 U 2^(j+1)))."""
    drift = constants.m1 * constants.delta
    var = constants.c_diff ** 2

    def ruin_bound(horizon):
        total = 0.0
        for j in range(50):
            u = horizon * 2.0 ** j
            level = h + 0.5 * drift * (u * u + 2.0 * q * u)
            exponent = level * level / (2.0 * var * horizon * 2.0 ** (j + 1))
            if exponent > 745.0:
                break
            total += math.exp(-exponent)
        return total

    horizon = 0.5
    while ruin_bound(horizon) >= bound:
        horizon *= 1.25
        if horizon > 64.0:
            raise InvalidRegime("no finite simulation horizon meets the ruin bound")
    return horizon, ruin_bound(horizon)


def f1_mc_oracle(x, q, constants, rng, paths=20000, dt=1e-3):
    """Euler path simulation of the barrier event behind F1:

        stay positive: h + (m1 delta / 2)(u^2 + 2qu) + c_diff B_u,  u >= 0,

    with h = sigma x sqrt((1+rho/lambda) m1 q).  Between grid points a
    Brownian-bridge crossing test removes the discretization bias; the
    horizon is cut where the analytic post-horizon ruin bound is below
    1e-4.  Returns (estimate, binomial std error, truncation-bias bound)."""
    x = float(x)
    q = float(q)
    if dt > 1e-3 or dt <= 0.0:
        raise OutOfRange(f"dt must lie in (0, 1e-3], got {dt!r}")
    if x < 0.0 or q < 0.0:
        raise OutOfRange(f"f1_mc_oracle requires x >= 0 and q >= 0, got {x!r}, {q!r}")
    if paths < 1:
        raise OutOfRange(f"paths must be positive, got {paths!r}")
    if constants.delta <= 0.0:
        # The parabola opens downward: ruin is certain.
        return OracleEstimate(estimate=0.0, std_error=0.0, bias_bound=0.0)

    h = constants.sigma * x * math.sqrt((1.0 + constants.rho_over_lambda) * constants.m1 * q)
    if h <= 0.0:
        # Started on the barrier: the Brownian fluctuation crosses at once.
        return OracleEstimate(estimate=0.0, std_error=0.0, bias_bound=0.0)

    horizon, ruin = _horizon(h, q, constants)
    steps = int(math.ceil(horizon / dt))
    drift = constants.m1 * constants.delta
    grid = dt * np.arange(steps + 1)
    level = h + 0.5 * drift * (grid * grid + 2.0 * q * grid)
    c = constants.c_diff
    scale = c * math.sqrt(dt)
    bridge_denom = c * c * dt

    survived = 0
    chunk = 4096
    for start in range(0, paths, chunk):
        width = min(chunk, paths - start)
        walk = np.zeros(width)
        alive = np.ones(width, dtype=bool)
        position = np.full(width, level[0])
        for j in range(1, steps + 1):
            walk += scale * rng.standard_normal(width)
            kill_draw = rng.random(width)
            new_position = level[j] + walk
            crossed = new_position <= 0.0
            with np.errstate(over="ignore"):
                bridge = np.exp(-2.0 * np.maximum(position, 0.0) * np.maximum(new_position, 0.0) / bridge_denom)
            alive &= ~crossed
            alive &= kill_draw >= bridge
            position = new_position
        survived += int(np.count_nonzero(alive))

    estimate = survived / paths
    std_error = math.sqrt(max(estimate * (1.0 - estimate), 1.0 / paths) / paths)
    return OracleEstimate(estimate=estimate, std_error=std_error, bias_bound=ruin)
