"""Vectorized batch execution of the avoSI jump chain and comparison walks.

Trials run in lockstep lanes over numpy arrays; finished lanes retire their
results into per-trial output slots and are replaced by pending trials, so
the output is a pure function of (master seed, trial index) and independent
of lane scheduling, batch size, or worker count. The scalar simulators in
`epidemic` consume the same per-trial substreams, uniform for uniform, so
scalar and vectorized runs agree trial by trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .degrees import DegreeModel, DegreeSequence
from .epidemic import EpidemicParams
from .errors import InvalidRegime
from .rng import (
    TAG_CLOCK,
    TAG_INIT,
    TAG_JUMPS,
    TAG_WALK,
    TrialRandom,
    bulk_derive,
    bulk_u53,
    trial_bases,
)


# ---------------------------------------------------------------------------
# initial conditions

def nsw_initial_counts(model: DegreeModel, n: int, rng) -> tuple[int, np.ndarray]:
    """Sample the class-count form of an i.i.d. degree sequence, scalar path.

    Consumes, from the given init stream, one uniform for the first vertex's
    degree and one per remaining pmf class for the conditional binomial
    counts of the other n-1 vertices; applies the parity fix (+1 on the
    first vertex). Returns (d1, counts_by_degree) with counts over the model
    support (excluding vertex 1). Exchangeability makes the class counts a
    sufficient description for the exploration dynamics.
    """
    from scipy.stats import binom

    support = np.array(sorted(model.pmf), dtype=np.int64)
    probs = np.array([model.pmf[int(k)] for k in support])
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    d1 = int(support[np.searchsorted(cdf, rng.uniform(), side="right")])
    counts = np.zeros(len(support), dtype=np.int64)
    remaining = n - 1
    rem_p = 1.0
    for j in range(len(support) - 1):
        p = min(max(probs[j] / rem_p, 0.0), 1.0)
        u = rng.uniform()
        counts[j] = int(binom.ppf(u, remaining, p)) if remaining > 0 else 0
        remaining -= int(counts[j])
        rem_p -= probs[j]
    counts[-1] = remaining
    total = d1 + int((support * counts).sum())
    if total % 2 == 1:
        d1 += 1
    return d1, counts


def _nsw_prepare(model: DegreeModel, n: int, bases: np.ndarray):
    """Vectorized nsw_initial_counts + seed-vertex draw for many trials."""
    from scipy.stats import binom

    support = np.array(sorted(model.pmf), dtype=np.int64)
    probs = np.array([model.pmf[int(k)] for k in support])
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    m = len(bases)
    init_seeds = bulk_derive(bases, TAG_INIT)
    u_seed = bulk_u53(init_seeds, np.uint64(0))
    u_d1 = bulk_u53(init_seeds, np.uint64(1))
    d1 = support[np.searchsorted(cdf, u_d1, side="right")].astype(np.int64)
    counts = np.zeros((m, len(support)), dtype=np.int64)
    remaining = np.full(m, n - 1, dtype=np.int64)
    rem_p = 1.0
    for j in range(len(support) - 1):
        u = bulk_u53(init_seeds, np.uint64(2 + j))
        p = min(max(probs[j] / rem_p, 0.0), 1.0)
        drawn = binom.ppf(u, np.maximum(remaining, 1), p)
        counts[:, j] = np.where(remaining > 0, drawn, 0.0).astype(np.int64)
        remaining -= counts[:, j]
        rem_p -= probs[j]
    counts[:, -1] = remaining
    total = d1 + (counts * support[None, :]).sum(axis=1)
    d1 = np.where(total % 2 == 1, d1 + 1, d1)

    # seed vertex uniform over n: index 0 is the parity-fixed vertex,
    # indices 1..n-1 map through the class counts
    j_seed = np.minimum((u_seed * n).astype(np.int64), n - 1)
    kmax = int(max(support.max(), d1.max()))
    s0 = np.zeros((m, kmax + 1), dtype=np.int64)
    for col, k in enumerate(support):
        s0[:, int(k)] += counts[:, col]
    seed_is_first = j_seed == 0
    ccum = np.cumsum(counts, axis=1)
    pos = (j_seed - 1)[:, None] >= ccum
    seed_col = pos.sum(axis=1)
    seed_class = np.where(
        seed_is_first, d1, support[np.minimum(seed_col, len(support) - 1)]
    ).astype(np.int64)
    # remove the seed from the susceptible side; vertex 1 stays susceptible
    # (with its parity-fixed degree) unless it is the seed itself
    rows = np.arange(m)
    s0[rows, np.where(seed_is_first, 0, seed_class)] -= ~seed_is_first
    s0[rows, np.where(seed_is_first, 0, d1)] += ~seed_is_first
    x0 = d1 + (counts * support[None, :]).sum(axis=1)
    return s0, seed_class.astype(np.int64), x0.astype(np.int64)


def _fixed_prepare(degrees: np.ndarray, n: int, bases: np.ndarray):
    """Seed-vertex draw against a fixed degree sequence."""
    init_seeds = bulk_derive(bases, TAG_INIT)
    u_seed = bulk_u53(init_seeds, np.uint64(0))
    j_seed = np.minimum((u_seed * n).astype(np.int64), n - 1)
    seed_class = degrees[j_seed].astype(np.int64)
    base = np.bincount(degrees, minlength=int(degrees.max()) + 1).astype(np.int64)
    m = len(bases)
    s0 = np.repeat(base[None, :], m, axis=0)
    s0[np.arange(m), seed_class] -= 1
    x0 = np.full(m, int(degrees.sum()), dtype=np.int64)
    return s0, seed_class, x0


def run_avosi_model(
    model: DegreeModel,
    params: EpidemicParams,
    rng: TrialRandom,
    clocked: bool | None = None,
    ledger_check: bool = False,
):
    """Scalar avoSI trial on a freshly sampled degree sequence.

    Consumes the init stream in the same order as the batch engine: seed
    vertex, first-vertex degree, then one conditional binomial per pmf
    class. Matches run_avosi_batch(NswInit(model), ...) trial for trial.
    """
    from .epidemic import EpidemicState, run_avosi_from_state

    n = params.n
    init = rng.stream(TAG_INIT)
    j_seed = init.randint_below(n)
    d1, counts = nsw_initial_counts(model, n, init)
    support = np.array(sorted(model.pmf), dtype=np.int64)

    kmax = int(max(support.max(), d1))
    s_k = np.zeros(kmax + 5, dtype=np.int64)
    for col, k in enumerate(support):
        s_k[int(k)] += counts[col]
    if j_seed == 0:
        seed_class = d1
    else:
        ccum = np.cumsum(counts)
        col = int(np.searchsorted(ccum, j_seed - 1, side="right"))
        seed_class = int(support[min(col, len(support) - 1)])
        s_k[seed_class] -= 1
        s_k[d1] += 1
    x0 = int(d1 + (support * counts).sum())
    state = EpidemicState(
        x=x0, x_i=int(seed_class), s_k=s_k, i_count=1, s_count=n - 1
    )
    return run_avosi_from_state(state, params, rng, clocked, ledger_check)


@dataclass(frozen=True)
class FixedInit:
    """All trials share one concrete degree sequence."""

    seq: DegreeSequence

    def prepare(self, n, bases):
        return _fixed_prepare(np.asarray(self.seq.degrees, np.int64), n, bases)


@dataclass(frozen=True)
class NswInit:
    """Each trial draws a fresh i.i.d. (parity-fixed) degree sequence."""

    model: DegreeModel

    def prepare(self, n, bases):
        return _nsw_prepare(self.model, n, bases)


@dataclass
class BatchResult:
    final_size: np.ndarray
    jumps: np.ndarray
    gamma: np.ndarray
    outbreak: np.ndarray
    checkpoints: tuple = ()
    x_i_at: np.ndarray | None = None          # (trials, n_checkpoints)
    jump_count_at: np.ndarray | None = None
    i_count_at: np.ndarray | None = None


# ---------------------------------------------------------------------------
# avoSI batch engine

def run_avosi_batch(
    init,
    params: EpidemicParams,
    master_seed: int,
    start: int,
    count: int,
    batch: int = 16384,
    clocked: bool | None = None,
    horizon: float | None = None,
) -> BatchResult:
    """Run trials [start, start+count) of the avoSI chain in lockstep.

    With a horizon, lanes still alive when the clock would pass it stop
    there instead of running to absorption: they report gamma = nan,
    final_size equal to the infected count at the horizon, and outbreak
    evaluated on that count. The horizon must not precede the last
    checkpoint, and requires the clocked chain.
    """
    n = params.n
    a_frac = params.infect_fraction
    cps = np.asarray(sorted(params.checkpoints), dtype=np.float64)
    ncp = len(cps)
    if clocked is None:
        clocked = ncp > 0
    if horizon is not None:
        if not clocked:
            raise InvalidRegime("a horizon needs the clocked chain")
        if ncp and horizon < cps[-1]:
            raise InvalidRegime("the horizon must not precede the last checkpoint")
    trf = params.total_rate_factor

    res = BatchResult(
        final_size=np.zeros(count, np.int64),
        jumps=np.zeros(count, np.int64),
        gamma=np.full(count, np.nan),
        outbreak=np.zeros(count, bool),
        checkpoints=tuple(cps),
    )
    if ncp:
        res.x_i_at = np.zeros((count, ncp), np.int64)
        res.jump_count_at = np.zeros((count, ncp), np.int64)
        res.i_count_at = np.zeros((count, ncp), np.int64)

    bases = trial_bases(master_seed, start, count)
    s0, seed_class, x0 = init.prepare(n, bases)
    jseeds_all = bulk_derive(bases, TAG_JUMPS)
    cseeds_all = bulk_derive(bases, TAG_CLOCK) if clocked else None

    width = s0.shape[1] + 4
    B = min(batch, count)

    # lane arrays, densely packed in [0, active)
    S = np.zeros((B, width), np.int64)
    X = np.zeros(B, np.int64)
    XI = np.zeros(B, np.int64)
    IC = np.zeros(B, np.int64)
    JP = np.zeros(B, np.int64)
    T = np.zeros(B, np.float64)
    CPI = np.zeros(B, np.int64)
    JSEED = np.zeros(B, np.uint64)
    JCTR = np.zeros(B, np.uint64)
    CSEED = np.zeros(B, np.uint64)
    TIDX = np.zeros(B, np.int64)

    def load(slots, tr):
        S[slots, :] = 0
        S[slots, : s0.shape[1]] = s0[tr]
        X[slots] = x0[tr]
        XI[slots] = seed_class[tr]
        IC[slots] = 1
        JP[slots] = 0
        T[slots] = 0.0
        CPI[slots] = 0
        JSEED[slots] = jseeds_all[tr]
        JCTR[slots] = 0
        if clocked:
            CSEED[slots] = cseeds_all[tr]
        TIDX[slots] = tr

    def retire(local_mask, truncated=False):
        idx = np.nonzero(local_mask)[0]
        tr = TIDX[idx]
        res.final_size[tr] = IC[idx]
        res.jumps[tr] = JP[idx]
        res.outbreak[tr] = IC[idx] / n > params.epsilon
        if truncated:
            res.gamma[tr] = np.nan
        elif clocked:
            res.gamma[tr] = np.where(XI[idx] == 0, T[idx], math.inf)
        else:
            res.gamma[tr] = np.where(XI[idx] == 0, np.nan, math.inf)
        if ncp:
            # absorbed lanes keep their absorbed state forever; truncated
            # lanes hold their current state up to the horizon, and the
            # entry check keeps every checkpoint at or before it
            for row, lane in zip(tr, idx):
                for c in range(int(CPI[lane]), ncp):
                    res.x_i_at[row, c] = XI[lane]
                    res.jump_count_at[row, c] = JP[lane]
                    res.i_count_at[row, c] = IC[lane]

    next_trial = 0
    active = 0
    kvec = np.arange(width, dtype=np.int64)

    def compact(done_mask):
        nonlocal active
        keep = np.nonzero(~done_mask)[0]
        nkeep = len(keep)
        S[:nkeep] = S[keep]
        for arr in (X, XI, IC, JP, T, CPI, JSEED, JCTR, CSEED, TIDX):
            arr[:nkeep] = arr[keep]
        active = nkeep

    while True:
        fill = min(B - active, count - next_trial)
        if fill:
            tr = np.arange(next_trial, next_trial + fill)
            load(np.arange(active, active + fill), tr)
            next_trial += fill
            active += fill
        if not active:
            break

        a = slice(0, active)
        done = (XI[a] == 0) | (X[a] <= 1)
        if done.any():
            retire(done)
            compact(done)
            # re-run the absorption check on any freshly loaded lanes
            continue

        if clocked:
            uc = bulk_u53(CSEED[a], JCTR[a])
            tn = T[a] - np.log1p(-uc) / (trf * (X[a] - 1))
            if horizon is not None:
                # the jump at tn falls past the horizon: freeze the lane in
                # its pre-jump state; retire backfills its checkpoints
                frozen = tn > horizon
                if frozen.any():
                    retire(frozen, truncated=True)
                    tn = tn[~frozen]
                    compact(frozen)
                    if not active:
                        continue
                    a = slice(0, active)
            if ncp:
                while True:
                    crossing = (CPI[a] < ncp) & (
                        cps[np.minimum(CPI[a], ncp - 1)] <= tn
                    )
                    if not crossing.any():
                        break
                    lanes = np.nonzero(crossing)[0]
                    rows = TIDX[lanes]
                    cols = CPI[lanes]
                    res.x_i_at[rows, cols] = XI[lanes]
                    res.jump_count_at[rows, cols] = JP[lanes]
                    res.i_count_at[rows, cols] = IC[lanes]
                    CPI[lanes] += 1
            T[:active] = tn
        xm1 = X[a] - 1

        r1 = bulk_u53(JSEED[a], JCTR[a] * np.uint64(2))
        r2 = bulk_u53(JSEED[a], JCTR[a] * np.uint64(2) + np.uint64(1))
        JCTR[:active] += 1

        pairing = r1 < a_frac
        m = np.minimum((r2 * xm1).astype(np.int64), xm1 - 1)
        pair_ii = pairing & (m < XI[a] - 1)
        infect = pairing & ~pair_ii

        if infect.any():
            mp = m - (XI[a] - 1)
            cw = np.cumsum(S[a] * kvec[None, :], axis=1)
            kcls = (cw <= mp[:, None]).sum(axis=1)
            lanes = np.nonzero(infect)[0]
            cols = kcls[lanes]
            S[lanes, cols] -= 1
            X[lanes] -= 2
            XI[lanes] += cols - 2
            IC[lanes] += 1

        if pair_ii.any():
            lanes = np.nonzero(pair_ii)[0]
            X[lanes] -= 2
            XI[lanes] -= 2

        rewire = ~pairing
        if rewire.any():
            j = np.minimum((r2 * n).astype(np.int64), n - 1)
            to_s = rewire & (j >= IC[a])
            if to_s.any():
                jp = j - IC[a]
                cs = np.cumsum(S[a], axis=1)
                ccls = (cs <= jp[:, None]).sum(axis=1)
                lanes = np.nonzero(to_s)[0]
                cols = ccls[lanes]
                if cols.size and cols.max() + 1 >= width:
                    extra = 8
                    S = np.concatenate(
                        [S, np.zeros((B, extra), np.int64)], axis=1
                    )
                    width += extra
                    kvec = np.arange(width, dtype=np.int64)
                S[lanes, cols] -= 1
                S[lanes, cols + 1] += 1
                XI[lanes] -= 1

        JP[:active] += 1

    return res


# ---------------------------------------------------------------------------
# comparison-walk batch engine

def run_walk_batch(
    increments: np.ndarray,
    probabilities: np.ndarray,
    start: int | np.ndarray,
    steps: int,
    master_seed: int,
    first_trial: int,
    count: int,
    batch: int = 65536,
    counter_base: int = 0,
):
    """Simulate `count` walks; returns (survived, endpoint, min_level).

    A walk survives when its level stays strictly positive through all
    `steps` increments. Endpoints are the raw integer levels at the horizon
    (0 for walks that died). One uniform per step from the walk substream,
    at counters counter_base, counter_base+1, ... (the offset lets callers
    spend earlier counters on drawing the start level).
    """
    increments = np.asarray(increments, dtype=np.int64)
    cdf = np.cumsum(np.asarray(probabilities, dtype=np.float64))
    cdf[-1] = 1.0

    survived = np.zeros(count, bool)
    endpoint = np.zeros(count, np.int64)
    min_level = np.zeros(count, np.int64)

    bases = trial_bases(master_seed, first_trial, count)
    wseeds_all = bulk_derive(bases, TAG_WALK)
    starts_all = np.broadcast_to(
        np.asarray(start, dtype=np.int64), (count,)
    ).copy()

    B = min(batch, count)
    LVL = np.zeros(B, np.int64)
    MIN = np.zeros(B, np.int64)
    CTR = np.zeros(B, np.uint64)
    SEED = np.zeros(B, np.uint64)
    TIDX = np.zeros(B, np.int64)

    def load(slots, tr):
        LVL[slots] = starts_all[tr]
        MIN[slots] = starts_all[tr]
        CTR[slots] = 0
        SEED[slots] = wseeds_all[tr]
        TIDX[slots] = tr

    next_trial = min(B, count)
    load(np.arange(next_trial), np.arange(next_trial))
    active = next_trial

    while active:
        a = slice(0, active)
        dead = LVL[a] <= 0
        finished = ~dead & (CTR[a] >= steps)
        done = dead | finished
        if done.any():
            idx = np.nonzero(done)[0]
            tr = TIDX[idx]
            survived[tr] = finished[idx]
            endpoint[tr] = np.where(finished[idx], LVL[idx], 0)
            min_level[tr] = MIN[idx]
            keep = np.nonzero(~done)[0]
            nkeep = len(keep)
            for arr in (LVL, MIN, CTR, SEED, TIDX):
                arr[:nkeep] = arr[keep]
            active = nkeep
            fill = min(B - active, count - next_trial)
            if fill:
                tr = np.arange(next_trial, next_trial + fill)
                load(np.arange(active, active + fill), tr)
                next_trial += fill
                active += fill
                continue
            if active == 0:
                break
            a = slice(0, active)

        u = bulk_u53(SEED[a], CTR[a] + np.uint64(counter_base))
        LVL[:active] += increments[np.searchsorted(cdf, u, side="right")]
        MIN[:active] = np.minimum(MIN[:active], LVL[:active])
        CTR[:active] += 1

    return survived, endpoint, min_level
