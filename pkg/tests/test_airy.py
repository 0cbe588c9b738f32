"""Tests for the Airy evaluator against a high-precision summation oracle."""

import math

import numpy as np
import pytest

from evosi.airy import AiryTable, airy_ai, airy_ai_prime, airy_zeros, _ai_raw, _aip_raw
from evosi.errors import OutOfRange

# Frozen from tests/oracles.py::mp_airy (mpmath at 40 significant digits).
ORACLE_AI = {
    -49.5: 0.098753963510335829,
    -38.25: 0.22408557991337517,
    -20.0: -0.17640612707798469,
    -12.0: -0.066555175054373129,
    -7.5: 0.32177571638064788,
    -7.1: 0.25403632856197815,
    -7.0: 0.18428083525050564,
    -6.9: 0.10168799773976483,
    -6.5: -0.23802030199711580,
    -6.1: -0.35351167612096483,
    -6.0: -0.32914517362982311,
    -5.9: -0.28512277955518009,
    -4.0: -0.070265532949289515,
    -2.0: 0.22740742820168558,
    -1.0: 0.53556088329235212,
    -0.5: 0.47572809161053959,
    0.0: 0.35502805388781724,
    0.5: 0.23169360648083349,
    1.0: 0.13529241631288142,
    2.0: 0.034924130423274379,
    5.0: 0.00010834442813607442,
    6.0: 9.9476943602528896e-6,
    6.5: 2.7958823432049136e-6,
    7.0: 7.4921288639971671e-7,
    7.1: 5.7253228858776627e-7,
    10.0: 1.1047532552898686e-10,
    20.0: 1.6916728686705403e-27,
    50.0: 4.5849417240748285e-104,
}

ORACLE_AIP = {
    -49.5: -1.3249329151788826,
    -38.25: -0.21747357203177414,
    -20.0: 0.89286285673647124,
    -12.0: 1.0231104533679707,
    -7.5: 0.31880950669855460,
    -7.1: -0.61552878754022881,
    -7.0: -0.77100816841012655,
    -6.9: -0.87103105868638741,
    -6.5: -0.67495249251320217,
    -6.1: 0.13836393725271761,
    -6.0: 0.34593548728134289,
    -5.9: 0.52962857256300178,
    -4.0: -0.79062857536858138,
    -2.0: 0.61825902074169104,
    -1.0: -0.010160567116645209,
    -0.5: -0.20408167033954739,
    0.0: -0.25881940379280680,
    0.5: -0.22491053266468389,
    1.0: -0.15914744129679321,
    2.0: -0.053090384433653632,
    5.0: -0.00024741389086846248,
    6.0: -2.4765200397034955e-5,
    6.5: -7.2319314666017926e-6,
    7.0: -2.0081508947387920e-6,
    7.1: -1.5451003667897704e-6,
    10.0: -3.5206336767389236e-10,
    20.0: -7.5863916257483550e-27,
    50.0: -3.2443318198287993e-103,
}

# Frozen from tests/oracles.py::mp_airy_zero.
ORACLE_ZEROS = {
    1: -2.338107410459767,
    2: -4.0879494441309706,
    3: -5.5205598280955511,
    10: -12.828776752865757,
    50: -38.021008677255254,
    100: -60.455557274116699,
}


class TestValues:
    def test_origin_closed_forms(self):
        assert airy_ai(0.0) == pytest.approx(3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0), rel=1e-14)
        assert airy_ai_prime(0.0) == pytest.approx(-(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0), rel=1e-14)

    def test_matches_oracle_grid(self):
        for x, expected in ORACLE_AI.items():
            assert airy_ai(x) == pytest.approx(expected, rel=1e-10), x

    def test_prime_matches_oracle_grid(self):
        for x, expected in ORACLE_AIP.items():
            assert airy_ai_prime(x) == pytest.approx(expected, rel=1e-10), x

    def test_no_positive_zeros(self):
        for x in np.arange(0.0, 50.25, 0.25):
            assert airy_ai(float(x)) > 0.0

    def test_domain_enforced(self):
        for bad in (50.0001, -50.0001, math.inf, -math.inf, math.nan):
            with pytest.raises(OutOfRange):
                airy_ai(bad)
            with pytest.raises(OutOfRange):
                airy_ai_prime(bad)

    def test_raw_evaluators_extend_past_public_domain(self):
        assert _ai_raw(-60.455557274116699) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(OutOfRange):
            _ai_raw(-130.0)

    def test_differential_relation(self):
        # Central-difference second derivative of Ai against x*Ai(x) away
        # from the points where the right side vanishes.
        h = 2e-4
        for x in np.arange(-10.0, 5.0, 0.37):
            x = float(x)
            rhs = x * _ai_raw(x)
            if abs(rhs) < 1e-2:
                continue
            lhs = (_ai_raw(x + h) - 2.0 * _ai_raw(x) + _ai_raw(x - h)) / (h * h)
            assert lhs == pytest.approx(rhs, rel=1e-6), x


class TestZeros:
    def test_matches_oracle(self):
        zeros = airy_zeros(100)
        for k, expected in ORACLE_ZEROS.items():
            assert zeros[k - 1] == pytest.approx(expected, rel=1e-13, abs=1e-13), k

    def test_residual_and_ordering(self):
        zeros = airy_zeros(60)
        assert all(abs(airy_ai(z)) <= 1e-12 for z in zeros if abs(z) <= 50.0)
        assert all(b < a for a, b in zip(zeros, zeros[1:]))

    def test_prime_alternates_in_sign(self):
        zeros = airy_zeros(40)
        signs = [math.copysign(1.0, _aip_raw(z)) for z in zeros]
        assert signs[0] > 0.0
        assert all(a == -b for a, b in zip(signs, signs[1:]))

    def test_close_to_asymptotic_initializer(self):
        zeros = airy_zeros(30)
        for k, z in enumerate(zeros, start=1):
            init = -((3.0 * math.pi * (4 * k - 1) / 8.0) ** (2.0 / 3.0))
            assert abs(z - init) < 0.02

    def test_count_bounds(self):
        with pytest.raises(OutOfRange):
            airy_zeros(0)
        with pytest.raises(OutOfRange):
            airy_zeros(101)
        with pytest.raises(OutOfRange):
            airy_zeros(2.0)


class TestTable:
    def test_build_and_evaluate(self):
        table = AiryTable.build(100)
        assert len(table.zeros) == 100
        assert table.zeros[0] == pytest.approx(ORACLE_ZEROS[1], rel=1e-13)
        assert table.zeros[99] == pytest.approx(ORACLE_ZEROS[100], rel=1e-13)
        assert table.ai(-2.0) == pytest.approx(ORACLE_AI[-2.0], rel=1e-10)
        assert table.ai_prime(-2.0) == pytest.approx(ORACLE_AIP[-2.0], rel=1e-10)
        for z, aip in zip(table.zeros, table.ai_prime_at_zeros):
            assert aip == pytest.approx(_aip_raw(z), rel=0.0, abs=0.0)

    def test_rejects_non_zero_table(self):
        with pytest.raises(OutOfRange):
            AiryTable(zeros=(-2.0, -4.0), ai_prime_at_zeros=(0.7, -0.8))
