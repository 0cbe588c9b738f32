"""Deterministic counter-based random streams (splitmix64).

Every trial draws from substreams derived from (master seed, trial index, tag),
so results are reproducible and independent of scheduling or worker count.
The scalar and the numpy-vectorized paths produce bit-identical uniforms.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15

# substream tags (one namespace per consumer, fixed forever)
TAG_INIT = 0      # initial-state draws: seed-vertex degree, NSW class counts
TAG_JUMPS = 1     # jump-chain selections (2 uniforms per jump)
TAG_CLOCK = 2     # holding times (1 uniform per jump, only when clocked)
TAG_GRAPH = 3     # configuration-model pairing
TAG_DEGREES = 4   # i.i.d. degree sampling
TAG_WALK = 5      # comparison-walk increments (1 uniform per step)
TAG_EVENTS = 6    # evoSI Gillespie event selections


def _finalize(z: int) -> int:
    z &= _MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return z


def splitmix_at(seed: int, k: int) -> int:
    """k-th 64-bit output of the splitmix64 stream started at `seed`."""
    return _finalize((seed + (k + 1) * GOLDEN) & _MASK)


def derive(seed: int, index: int) -> int:
    """Child seed: used both for (master, trial) and (trial, tag) derivation."""
    return splitmix_at(seed, index)


def u53(seed: int, k: int) -> float:
    """k-th uniform in [0, 1) of the stream, with 53 random bits."""
    return (splitmix_at(seed, k) >> 11) * 2.0**-53


class Stream:
    """Sequential view over one counter-mode substream."""

    __slots__ = ("seed", "ctr")

    def __init__(self, seed: int, start: int = 0):
        self.seed = seed & _MASK
        self.ctr = start

    def uniform(self) -> float:
        u = u53(self.seed, self.ctr)
        self.ctr += 1
        return u

    def exponential(self, rate: float) -> float:
        """Exp(rate) holding time; rate 0 gives +inf (absorbing state)."""
        u = self.uniform()
        if rate <= 0.0:
            return math.inf
        return -math.log1p(-u) / rate

    def randint_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return min(int(self.uniform() * n), n - 1)

    def uniform_block(self, count: int) -> np.ndarray:
        """`count` uniforms at once; bit-identical to repeated uniform()."""
        ctrs = np.arange(self.ctr, self.ctr + count, dtype=np.uint64)
        self.ctr += count
        return bulk_u53(np.uint64(self.seed), ctrs)


class TrialRandom:
    """All randomness of one trial, addressable by substream tag."""

    __slots__ = ("master_seed", "trial_index", "base")

    def __init__(self, master_seed: int, trial_index: int):
        self.master_seed = master_seed
        self.trial_index = trial_index
        self.base = derive(master_seed, trial_index)

    def stream(self, tag: int) -> Stream:
        return Stream(derive(self.base, tag))


# ---------------------------------------------------------------------------
# vectorized path (numpy uint64, wrap-around semantics match the scalar code)

_NP_GOLDEN = np.uint64(GOLDEN)
_NP_M1 = np.uint64(0xBF58476D1CE4E5B9)
_NP_M2 = np.uint64(0x94D049BB133111EB)


def _finalize_np(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _NP_M1
    z ^= z >> np.uint64(27)
    z *= _NP_M2
    z ^= z >> np.uint64(31)
    return z


def bulk_outputs(seeds: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Vectorized splitmix_at: seeds and counters broadcast elementwise."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):  # modular 2^64 arithmetic is intended
        return _finalize_np(seeds + (counters + np.uint64(1)) * _NP_GOLDEN)


def bulk_u53(seeds: np.ndarray, counters: np.ndarray) -> np.ndarray:
    return (bulk_outputs(seeds, counters) >> np.uint64(11)) * 2.0**-53


def bulk_derive(seeds: np.ndarray, index) -> np.ndarray:
    return bulk_outputs(seeds, index)


def trial_bases(master_seed: int, start: int, count: int) -> np.ndarray:
    """Per-trial base seeds for trials start .. start+count-1."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    return bulk_outputs(np.uint64(master_seed & _MASK), idx)
