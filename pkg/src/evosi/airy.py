"""Airy function Ai, its derivative, and its negative real zeros.

Evaluation combines the Maclaurin series in 80-bit extended precision
near the origin with Poincare-type asymptotic expansions beyond.  The
extended-precision series absorbs the cancellation on the oscillatory
side, and the expansions are used only where their optimal-truncation
floor sits below the accuracy target, so every value carries a relative
error of at most 1e-10 without arbitrary-precision arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, OutOfRange

# Public evaluation domain.
DOMAIN_LIMIT = 50.0

# Internal evaluators reach further so that zero refinement and series
# summation over many zeros stay inside the supported range.
_RAW_LIMIT = 128.0

# The Maclaurin series is exact-to-rounding on [-7, 7] in 80-bit
# arithmetic; the asymptotic optimal-truncation floor drops below the
# 1e-10 target only for |x| above roughly 6.5, so the handover sits at 7
# where both branches hold comfortable margin.
_SERIES_LIMIT = 7.0

_MAX_ZEROS = 256

# Ai(0) = 3^(-2/3)/Gamma(2/3) and Ai'(0) = -3^(-1/3)/Gamma(1/3).
_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)

_SQRT_PI = math.sqrt(math.pi)


def _asymptotic_coefficients(count):
    """Coefficients u_k, v_k of the large-argument expansions.

    u_0 = v_0 = 1, u_k = u_{k-1}(6k-5)(6k-3)(6k-1)/(216 k (2k-1)),
    v_k = u_k (6k+1)/(1-6k).
    """
    u = np.empty(count + 1)
    v = np.empty(count + 1)
    u[0] = v[0] = 1.0
    uk = np.longdouble(1.0)
    for k in range(1, count + 1):
        uk = uk * np.longdouble((6 * k - 5) * (6 * k - 3) * (6 * k - 1))
        uk = uk / np.longdouble(216 * k * (2 * k - 1))
        u[k] = float(uk)
        v[k] = float(uk * np.longdouble(6 * k + 1) / np.longdouble(1 - 6 * k))
    return u, v


_U, _V = _asymptotic_coefficients(64)


def _maclaurin(x):
    """(Ai(x), Ai'(x)) by the power series, summed in extended precision."""
    xl = np.longdouble(x)
    x3 = xl * xl * xl
    # Ai = Ai(0) f + Ai'(0) g with f'' = x f, g'' = x g, f(0)=g'(0)=1.
    tf = np.longdouble(1.0)
    f = tf
    tg = xl
    g = tg
    tfp = xl * xl / np.longdouble(2.0)
    fp = tfp
    tgp = np.longdouble(1.0)
    gp = tgp
    for k in range(1, 120):
        tf = tf * x3 / np.longdouble(3 * k * (3 * k - 1))
        f += tf
        tg = tg * x3 / np.longdouble(3 * k * (3 * k + 1))
        g += tg
        if k >= 2:
            tfp = tfp * x3 / np.longdouble((3 * k - 1) * (3 * k - 3))
            fp += tfp
        tgp = tgp * x3 / np.longdouble(3 * k * (3 * k - 2))
        gp += tgp
        if abs(tf) + abs(tg) < np.longdouble(1e-26) * (abs(f) + abs(g) + 1.0):
            break
    c1 = np.longdouble(_AI0)
    c2 = np.longdouble(_AIP0)
    return float(c1 * f + c2 * g), float(c1 * fp + c2 * gp)


def _asymptotic_sum(coeff, zeta, sign):
    """Sum coeff_k * sign^k / zeta^k to its optimal truncation point."""
    total = coeff[0]
    power = 1.0
    previous = math.inf
    for k in range(1, len(coeff)):
        power *= sign / zeta
        term = coeff[k] * power
        if abs(term) >= previous:
            break
        total += term
        previous = abs(term)
        if previous < 1e-19 * abs(total):
            break
    return total


def _asymptotic_pair(coeff, zeta):
    """Even/odd split sums P = sum (-1)^k c_{2k} zeta^{-2k} and
    Q = sum (-1)^k c_{2k+1} zeta^{-2k-1} for the oscillatory regime."""
    inv2 = 1.0 / (zeta * zeta)
    p = coeff[0]
    q = coeff[1] / zeta
    pk = 1.0
    qk = 1.0 / zeta
    prev_p = math.inf
    prev_q = math.inf
    for k in range(1, (len(coeff) - 1) // 2):
        pk *= -inv2
        qk *= -inv2
        tp = coeff[2 * k] * pk
        tq = coeff[2 * k + 1] * qk
        if abs(tp) >= prev_p or abs(tq) >= prev_q:
            break
        p += tp
        q += tq
        prev_p = abs(tp)
        prev_q = abs(tq)
        if prev_p + prev_q < 1e-19 * (abs(p) + abs(q)):
            break
    return p, q


def _asymptotic_positive(x):
    zeta = (2.0 / 3.0) * x ** 1.5
    damp = math.exp(-zeta)
    root4 = x ** 0.25
    ai = damp / (2.0 * _SQRT_PI * root4) * _asymptotic_sum(_U, zeta, -1.0)
    aip = -root4 * damp / (2.0 * _SQRT_PI) * _asymptotic_sum(_V, zeta, -1.0)
    return ai, aip


def _asymptotic_negative(x):
    t = -x
    zeta = (2.0 / 3.0) * t ** 1.5
    root4 = t ** 0.25
    cosz = math.cos(zeta - 0.25 * math.pi)
    sinz = math.sin(zeta - 0.25 * math.pi)
    pu, qu = _asymptotic_pair(_U, zeta)
    pv, qv = _asymptotic_pair(_V, zeta)
    ai = (cosz * pu + sinz * qu) / (_SQRT_PI * root4)
    aip = (sinz * pv - cosz * qv) * root4 / _SQRT_PI
    return ai, aip


def _evaluate_raw(x):
    if not math.isfinite(x) or abs(x) > _RAW_LIMIT:
        raise OutOfRange(f"Airy evaluation supports |x| <= {_RAW_LIMIT}, got {x!r}")
    if abs(x) <= _SERIES_LIMIT:
        return _maclaurin(x)
    if x > 0:
        return _asymptotic_positive(x)
    return _asymptotic_negative(x)


def _ai_raw(x):
    return _evaluate_raw(x)[0]


def _aip_raw(x):
    return _evaluate_raw(x)[1]


def _check_domain(x):
    if not (isinstance(x, (int, float)) or isinstance(x, np.floating)):
        raise OutOfRange(f"Airy argument must be a real number, got {type(x).__name__}")
    x = float(x)
    if not math.isfinite(x) or abs(x) > DOMAIN_LIMIT:
        raise OutOfRange(f"Airy argument must satisfy |x| <= {DOMAIN_LIMIT}, got {x!r}")
    return x


def airy_ai(x):
    """Ai(x) for real |x| <= 50 with relative error at most 1e-10."""
    return _ai_raw(_check_domain(x))


def airy_ai_prime(x):
    """Ai'(x) for real |x| <= 50 with relative error at most 1e-10."""
    return _aip_raw(_check_domain(x))


def _zeros_raw(count):
    """First `count` negative zeros of Ai, largest (closest to 0) first."""
    if not isinstance(count, int) or not 1 <= count <= _MAX_ZEROS:
        raise OutOfRange(f"zero count must be an integer in [1, {_MAX_ZEROS}], got {count!r}")
    zeros = []
    for k in range(1, count + 1):
        t = 3.0 * math.pi * (4 * k - 1) / 8.0
        z = -(t ** (2.0 / 3.0))
        for _ in range(60):
            ai, aip = _evaluate_raw(z)
            step = ai / aip
            z -= step
            if abs(step) <= 1e-14 * abs(z):
                break
        if abs(_ai_raw(z)) > 1e-12:
            raise ConvergenceFailure(f"Newton refinement of Airy zero {k} stalled at {z!r}")
        if zeros and z >= zeros[-1]:
            raise ConvergenceFailure(f"Airy zero {k} failed to separate from zero {k - 1}")
        zeros.append(z)
    return zeros


def airy_zeros(count):
    """First `count` (<= 100) negative zeros z_1 > z_2 > ... of Ai."""
    if not isinstance(count, int) or not 1 <= count <= 100:
        raise OutOfRange(f"zero count must be an integer in [1, 100], got {count!r}")
    return _zeros_raw(count)


@dataclass(frozen=True)
class AiryTable:
    """Negative zeros of Ai with evaluators for Ai and Ai' at shifted points."""

    zeros: tuple
    ai_prime_at_zeros: tuple

    def __post_init__(self):
        if len(self.zeros) != len(self.ai_prime_at_zeros) or not self.zeros:
            raise OutOfRange("AiryTable requires matching, non-empty zero tables")
        previous = 0.0
        for z in self.zeros:
            if z >= previous:
                raise OutOfRange("AiryTable zeros must be negative and strictly decreasing")
            previous = z
        for z in self.zeros:
            if abs(_ai_raw(z)) > 1e-12:
                raise OutOfRange("AiryTable zeros must satisfy |Ai(z)| <= 1e-12")

    @classmethod
    def build(cls, count):
        zeros = _zeros_raw(count)
        return cls(zeros=tuple(zeros), ai_prime_at_zeros=tuple(_aip_raw(z) for z in zeros))

    def ai(self, x):
        return _ai_raw(x)

    def ai_prime(self, x):
        return _aip_raw(x)
