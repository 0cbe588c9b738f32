import math
from fractions import Fraction

import numpy as np
import pytest

from evosi import degrees as dg
from evosi.errors import SubcriticalStructure
from evosi.rng import TrialRandom, TAG_DEGREES

# frozen from tests/oracles.py (mp_poisson_moment, high-precision summation)
POISSON3_MOMENTS = {1: 3.0, 2: 12.0, 3: 57.0, 4: 309.0}
POISSON125_MOMENTS = {1: 1.25, 2: 2.8125, 3: 7.890625}


def test_poisson_moments_closed_matches_oracle_and_pmf_path():
    model = dg.DegreeModel.poisson(3.0)
    for r, want in POISSON3_MOMENTS.items():
        closed = dg.moments(model, r, "closed")
        summed = dg.moments(model, r, "pmf")
        assert closed == pytest.approx(want, abs=1e-10)
        assert abs(closed - summed) < 1e-10
    model = dg.DegreeModel.poisson(1.25)
    for r, want in POISSON125_MOMENTS.items():
        assert dg.moments(model, r) == pytest.approx(want, abs=1e-12)


def test_regular_moments():
    model = dg.DegreeModel.regular(3)
    assert dg.moments(model, 1) == 3
    assert dg.moments(model, 2) == 9
    assert dg.moments(model, 3) == 27
    assert abs(dg.moments(model, 2, "pmf") - 9) < 1e-12


def test_pmf_truncation_mass():
    for mu in (0.3, 1.25, 3.0, 7.5):
        model = dg.DegreeModel.poisson(mu)
        assert abs(sum(model.pmf.values()) - 1.0) <= 1e-12
        # tail certificate covers every retained atom
        for k, p in model.pmf.items():
            assert p <= model.tail_c * math.exp(-model.tail_eta * k) * (1 + 1e-9)


def test_critical_rate_values_and_homogeneity():
    assert dg.critical_rate(dg.DegreeModel.poisson(3.0), 1.0) == pytest.approx(
        0.5, abs=1e-12
    )
    assert dg.critical_rate(dg.DegreeModel.regular(3), 1.0) == pytest.approx(
        1.0, abs=1e-12
    )
    model = dg.DegreeModel.poisson(2.0)
    a = 3.7
    assert dg.critical_rate(model, a * 1.0) == pytest.approx(
        a * dg.critical_rate(model, 1.0), rel=1e-12
    )


def test_critical_rate_subcritical_structure():
    with pytest.raises(SubcriticalStructure):
        dg.critical_rate(dg.DegreeModel.regular(2), 1.0)


def test_delta_values():
    assert dg.delta(dg.DegreeModel.poisson(3.0)) == pytest.approx(9.0, abs=1e-10)
    assert dg.delta(dg.DegreeModel.poisson(1.25)) == pytest.approx(-0.625, abs=1e-10)
    assert dg.delta(dg.DegreeModel.regular(3)) == pytest.approx(7.0, abs=1e-12)


def test_delta_poisson_closed_form_2mu2_minus_3mu():
    for mu in (1.1, 1.5, 2.0, 3.0, 5.0):
        model = dg.DegreeModel.poisson(mu)
        want = 2.0 * mu**2 - 3.0 * mu
        assert dg.delta(model, "closed") == pytest.approx(want, abs=1e-10)
        assert dg.delta(model, "pmf") == pytest.approx(want, abs=1e-10)


def test_sigma_sq_values_and_rho_independence():
    assert dg.sigma_sq(dg.DegreeModel.poisson(3.0), 1.0) == pytest.approx(
        3.0, abs=1e-10
    )
    assert dg.sigma_sq(dg.DegreeModel.regular(3), 1.0) == pytest.approx(
        1.0, abs=1e-12
    )
    for model in (dg.DegreeModel.poisson(3.0), dg.DegreeModel.regular(3)):
        assert abs(dg.sigma_sq(model, 1.0) - dg.sigma_sq(model, 7.0)) <= 1e-12


def test_model_constants_bundle():
    mc = dg.model_constants(dg.DegreeModel.regular(3), 1.0)
    assert mc.lambda_c == pytest.approx(1.0)
    assert mc.delta == pytest.approx(7.0)
    assert mc.sigma_sq == pytest.approx(1.0)
    assert mc.drift_coef == pytest.approx(21.0)
    assert mc.diffusion_coef == pytest.approx(math.sqrt(6.0), abs=1e-12)
    assert mc.diffusion_coef**2 == pytest.approx(mc.m3 - 3 * mc.m2 + 2 * mc.m1)


def test_sample_regular_and_parity_fix():
    rng = TrialRandom(11, 0).stream(TAG_DEGREES)
    seq = dg.sample_iid_degrees(dg.DegreeModel.regular(3), 4, rng)
    assert list(seq.degrees) == [3, 3, 3, 3]
    rng = TrialRandom(11, 1).stream(TAG_DEGREES)
    seq = dg.sample_iid_degrees(dg.DegreeModel.regular(3), 3, rng)
    assert list(seq.degrees) == [4, 3, 3]
    assert int(seq.degrees.sum()) % 2 == 0


def test_sample_poisson_mean_and_determinism():
    model = dg.DegreeModel.poisson(3.0)
    n = 10**5
    rng = TrialRandom(42, 0).stream(TAG_DEGREES)
    seq = dg.sample_iid_degrees(model, n, rng)
    assert abs(seq.degrees.mean() - 3.0) <= 3.0 * math.sqrt(3.0 / n)
    rng2 = TrialRandom(42, 0).stream(TAG_DEGREES)
    seq2 = dg.sample_iid_degrees(model, n, rng2)
    assert np.array_equal(seq.degrees, seq2.degrees)
    assert sum(seq.empirical_pmf.values()) == Fraction(1)


def test_audit_exact_match_sequence():
    model = dg.DegreeModel.regular(3)
    seq = dg.DegreeSequence.from_degrees([3] * 1000)
    audit = dg.audit_assumptions(seq, model, eta=0.5)
    assert audit.h2_sup_distance == 0.0
    assert audit.h3_statistic == 0.0
    assert audit.h1_pass and audit.h3_pass and audit.remark12_pass
    assert audit.max_degree <= audit.max_degree_bound


def test_audit_poisson_sample():
    model = dg.DegreeModel.poisson(3.0)
    rng = TrialRandom(7, 0).stream(TAG_DEGREES)
    seq = dg.sample_iid_degrees(model, 10**5, rng)
    audit = dg.audit_assumptions(seq, model, eta=0.5, exponent=0.62)
    # E[exp(0.5 D)] = exp(3(e^0.5 - 1)) ~ 6.994; threshold 2 sqrt(E[exp(D)])
    assert audit.h1_observed == pytest.approx(
        math.exp(3.0 * (math.exp(0.5) - 1.0)), rel=0.05
    )
    assert audit.h1_threshold == pytest.approx(
        2.0 * math.sqrt(math.exp(3.0 * (math.e - 1.0))), rel=1e-9
    )
    assert audit.h1_pass
    assert audit.max_degree <= audit.max_degree_bound


def test_audit_own_model_pass_rate():
    # a sequence sampled from its own model should pass h1 and the
    # per-degree concentration bands at least 97/100 times
    model = dg.DegreeModel.poisson(3.0)
    passes = 0
    for i in range(100):
        rng = TrialRandom(1234, i).stream(TAG_DEGREES)
        seq = dg.sample_iid_degrees(model, 10**5, rng)
        audit = dg.audit_assumptions(seq, model, eta=0.5)
        passes += audit.h1_pass and audit.remark12_pass
    assert passes >= 97


def test_audit_h3_tail_has_no_phantom_terms():
    model = dg.DegreeModel.regular(3)
    seq = dg.DegreeSequence.from_degrees([3] * 50 + [2] * 50)
    audit = dg.audit_assumptions(seq, model, eta=0.5)
    # only k=2 and k=3 disagree: 81*50 + 625*0 ... k=2: (3)^4*50, k=3: (4)^4*50
    assert audit.h3_statistic == pytest.approx(3**4 * 50 + 4**4 * 50)


def test_parse_model_spec_and_files(tmp_path):
    assert dg.parse_model_spec("poisson:3").kind == "poisson"
    assert dg.parse_model_spec("regular:3").param == 3.0
    pmf_file = tmp_path / "pmf.txt"
    pmf_file.write_text("1 0.25\n3 0.75\n")
    model = dg.parse_model_spec(f"pmf:{pmf_file}")
    assert model.pmf[3] == 0.75
    with pytest.raises(ValueError):
        dg.parse_model_spec("weird:1")
    seq_file = tmp_path / "degs.txt"
    seq_file.write_text("3\n2\n1\n")
    seq = dg.load_degree_sequence(str(seq_file))
    assert list(seq.degrees) == [3, 2, 1]
    assert seq.empirical_pmf[2] == Fraction(1, 3)
