import math

import numpy as np

from evosi import rng


def test_outputs_are_64_bit_and_deterministic():
    a = rng.splitmix_at(12345, 0)
    b = rng.splitmix_at(12345, 0)
    assert a == b
    assert 0 <= a <= 0xFFFFFFFFFFFFFFFF
    assert rng.splitmix_at(12345, 1) != a
    assert rng.splitmix_at(12346, 0) != a


def test_reference_sequence_from_zero_seed():
    # splitmix64 reference outputs for seed 0 (first three values).
    seq = [rng.splitmix_at(0, k) for k in range(3)]
    assert seq == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_uniforms_in_unit_interval_and_well_spread():
    s = rng.Stream(987654321)
    us = [s.uniform() for _ in range(2000)]
    assert all(0.0 <= u < 1.0 for u in us)
    assert abs(sum(us) / len(us) - 0.5) < 0.03


def test_scalar_vector_parity():
    seeds = np.array([rng.derive(99, i) for i in range(50)], dtype=np.uint64)
    ctrs = np.arange(50, dtype=np.uint64)
    vec = rng.bulk_u53(seeds, ctrs)
    ref = np.array([rng.u53(int(seeds[i]), i) for i in range(50)])
    assert np.array_equal(vec, ref)

    vec_out = rng.bulk_outputs(seeds, ctrs)
    ref_out = np.array(
        [rng.splitmix_at(int(seeds[i]), i) for i in range(50)], dtype=np.uint64
    )
    assert np.array_equal(vec_out, ref_out)


def test_trial_bases_match_scalar_derivation():
    bases = rng.trial_bases(2024, 3, 10)
    ref = [rng.derive(2024, i) for i in range(3, 13)]
    assert [int(b) for b in bases] == ref


def test_substreams_are_distinct():
    tr = rng.TrialRandom(7, 0)
    a = tr.stream(rng.TAG_JUMPS)
    b = tr.stream(rng.TAG_CLOCK)
    assert a.seed != b.seed
    assert a.uniform() != b.uniform()


def test_exponential_and_randint():
    s = rng.Stream(5)
    xs = [s.exponential(2.0) for _ in range(4000)]
    assert abs(sum(xs) / len(xs) - 0.5) < 0.05
    assert s.exponential(0.0) == math.inf
    s2 = rng.Stream(6)
    draws = [s2.randint_below(7) for _ in range(700)]
    assert set(draws) == set(range(7))
