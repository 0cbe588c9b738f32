"""Event-driven simulators: evoSI on an explicit multigraph, and the
avoSI / AB-avoSI exploration processes as embedded jump chains of the
time-changed dynamics.

Conventions shared by all simulators:
- the initially infected vertex is uniform over all n vertices and always
  consumes the first uniform of the trial's init stream;
- jump selections consume exactly two uniforms per event from the jump
  stream (plus, for AB-avoSI with rho > 0, lazily drawn index uniforms);
- holding times, when requested, come from a separate clock stream so that
  clocked and unclocked runs share the same jump trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .degrees import DegreeSequence
from .errors import DegenerateState
from .graphs import MultiGraph
from .rng import TAG_CLOCK, TAG_INIT, TAG_JUMPS, TrialRandom


@dataclass(frozen=True)
class EpidemicParams:
    lam: float
    rho: float
    n: int
    epsilon: float = 0.05
    checkpoints: tuple = ()

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0,1)")

    @property
    def infect_fraction(self) -> float:
        return self.lam / (self.lam + self.rho)

    @property
    def total_rate_factor(self) -> float:
        """Time-changed total jump rate per unit of (X_t - 1)."""
        return 1.0 + self.rho / self.lam


@dataclass
class EpidemicState:
    """Counter state of the exploration processes."""

    x: int                 # unpaired half-edges
    x_i: int               # infected unpaired half-edges
    s_k: np.ndarray        # susceptible vertices by unpaired half-edge count
    i_count: int
    s_count: int
    t: float = 0.0
    jumps: int = 0

    def ledger_ok(self) -> bool:
        weighted = int(sum(k * int(c) for k, c in enumerate(self.s_k)))
        return self.x == self.x_i + weighted

    def grow(self, k: int) -> None:
        if k >= len(self.s_k):
            self.s_k = np.concatenate(
                [self.s_k, np.zeros(k + 5 - len(self.s_k), dtype=np.int64)]
            )


@dataclass
class TrialRecord:
    final_size: int
    gamma: float
    outbreak: bool
    seed: int
    jumps: int
    jump_count_at: dict = field(default_factory=dict)
    x_i_at: dict = field(default_factory=dict)


def snapshot(state: EpidemicState) -> dict:
    """Checkpoint row: a plain copy of the counters."""
    return {
        "x": state.x,
        "x_i": state.x_i,
        "i_count": state.i_count,
        "s_count": state.s_count,
        "t": state.t,
        "jumps": state.jumps,
    }


def initial_state(seq: DegreeSequence, params: EpidemicParams, rng: TrialRandom):
    """Seed a uniform vertex; return (state, seed_vertex)."""
    init = rng.stream(TAG_INIT)
    u = init.randint_below(params.n)
    counts = np.bincount(seq.degrees, minlength=seq.max_degree + 5).astype(np.int64)
    d_u = int(seq.degrees[u])
    counts[d_u] -= 1
    x = int(seq.degrees.sum())
    return (
        EpidemicState(
            x=x, x_i=d_u, s_k=counts, i_count=1, s_count=params.n - 1
        ),
        u,
    )


def drift(state: EpidemicState, params: EpidemicParams) -> float:
    """Deterministic part of dX_I under the time-changed dynamics:
    -2(X_t - 1) + sum_k k^2 S_k - (rho/lam) (S_t/n) (X_t - 1)."""
    k = np.arange(len(state.s_k), dtype=np.float64)
    quad = float((k * k * state.s_k).sum())
    return (
        -2.0 * (state.x - 1)
        + quad
        - (params.rho / params.lam) * (state.s_count / params.n) * (state.x - 1)
    )


def avosi_jump_distribution(state: EpidemicState, params: EpidemicParams):
    """Exact jump law of the time-changed avoSI chain at a counter state.

    Returns {outcome: Fraction} with outcomes ('infect', k) for pairing with
    a susceptible vertex holding k unpaired half-edges (k=1 is the pairing
    that removes a singly-connected susceptible), ('pair_ii',) for pairing
    two infected half-edges, and ('rewire_i',)/('rewire_s',) for rewiring
    onto an infected/susceptible vertex. Probabilities sum to 1 exactly.
    """
    if state.x_i < 1:
        raise DegenerateState("no infected half-edge")
    if state.x - 1 <= 0:
        raise DegenerateState("no pairing partner available (X_t <= 1)")
    a = Fraction(params.lam) / (Fraction(params.lam) + Fraction(params.rho))
    b = 1 - a
    xm1 = state.x - 1
    out = {}
    for k, c in enumerate(state.s_k):
        c = int(c)
        if k >= 1 and c:
            out[("infect", k)] = a * k * c / xm1
    out[("pair_ii",)] = a * (state.x_i - 1) / xm1
    out[("rewire_i",)] = b * Fraction(state.i_count, params.n)
    out[("rewire_s",)] = b * Fraction(state.s_count, params.n)
    return out


class _Checkpointer:
    """Applies pre-jump checkpoint semantics in clocked runs."""

    def __init__(self, checkpoints):
        self.pending = sorted(checkpoints)
        self.jump_count_at = {}
        self.x_i_at = {}

    def before_jump(self, state: EpidemicState, t_next: float) -> None:
        while self.pending and self.pending[0] <= t_next:
            cp = self.pending.pop(0)
            self.jump_count_at[cp] = state.jumps
            self.x_i_at[cp] = state.x_i

    def flush(self, state: EpidemicState) -> None:
        for cp in self.pending:
            self.jump_count_at[cp] = state.jumps
            self.x_i_at[cp] = state.x_i
        self.pending = []


def _finish(state, params, rng, gamma, checkpointer):
    checkpointer.flush(state)
    return TrialRecord(
        final_size=state.i_count,
        gamma=gamma,
        outbreak=state.i_count / params.n > params.epsilon,
        seed=rng.base,
        jumps=state.jumps,
        jump_count_at=checkpointer.jump_count_at,
        x_i_at=checkpointer.x_i_at,
    )


def run_avosi(
    seq: DegreeSequence,
    params: EpidemicParams,
    rng: TrialRandom,
    clocked: bool | None = None,
    ledger_check: bool = False,
) -> TrialRecord:
    """Simulate the time-changed avoSI jump chain to absorption.

    With clocked=True (implied by checkpoints), holding times are sampled
    as Exp((1+rho/lam)(X_t-1)) from a separate clock stream; the jump
    trajectory and the final size are identical either way. ledger_check
    asserts X_t = X_I + sum k S_k after every event.
    """
    if clocked is None:
        clocked = bool(params.checkpoints)
    state, _ = initial_state(seq, params, rng)
    return run_avosi_from_state(state, params, rng, clocked, ledger_check)


def run_avosi_from_state(
    state: EpidemicState,
    params: EpidemicParams,
    rng: TrialRandom,
    clocked: bool | None = None,
    ledger_check: bool = False,
) -> TrialRecord:
    """avoSI jump chain from an explicit state (init stream already spent)."""
    if clocked is None:
        clocked = bool(params.checkpoints)
    jump = rng.stream(TAG_JUMPS)
    clock = rng.stream(TAG_CLOCK) if clocked else None
    cps = _Checkpointer(params.checkpoints)
    a_frac = params.infect_fraction
    n = params.n

    while True:
        if state.x_i == 0:
            return _finish(state, params, rng, state.t if clocked else math.nan, cps)
        if state.x <= 1:
            # one infected half-edge, no partner, rewiring cannot absorb
            return _finish(state, params, rng, math.inf, cps)
        if clocked:
            rate = params.total_rate_factor * (state.x - 1)
            t_next = state.t + clock.exponential(rate)
            cps.before_jump(state, t_next)
            state.t = t_next
        r1 = jump.uniform()
        r2 = jump.uniform()
        if r1 < a_frac:
            # pairing: partner uniform among the other X_t - 1 half-edges
            m = min(int(r2 * (state.x - 1)), state.x - 2)
            if m < state.x_i - 1:
                state.x -= 2
                state.x_i -= 2
            else:
                m -= state.x_i - 1
                acc = 0
                for k in range(1, len(state.s_k)):
                    acc += k * int(state.s_k[k])
                    if m < acc:
                        state.s_k[k] -= 1
                        state.x -= 2
                        state.x_i += k - 2
                        state.i_count += 1
                        state.s_count -= 1
                        break
                else:  # pragma: no cover - ledger guarantees a class is found
                    raise AssertionError("susceptible ladder overflow")
        else:
            # rewiring: target vertex uniform over all n vertices
            j = min(int(r2 * n), n - 1)
            if j >= state.i_count:
                j -= state.i_count
                acc = 0
                for k in range(len(state.s_k)):
                    acc += int(state.s_k[k])
                    if j < acc:
                        state.grow(k + 1)
                        state.s_k[k] -= 1
                        state.s_k[k + 1] += 1
                        state.x_i -= 1
                        break
                else:  # pragma: no cover
                    raise AssertionError("rewire ladder overflow")
        state.jumps += 1
        if ledger_check:
            assert state.ledger_ok(), f"ledger broken at jump {state.jumps}"


def run_ab_avosi(
    seq: DegreeSequence,
    params: EpidemicParams,
    rng: TrialRandom,
    clocked: bool | None = None,
    ledger_check: bool = False,
) -> TrialRecord:
    """avoSI event skeleton with infection/rewiring indices.

    Each half-edge carries A (first-infection event index, set at most
    once) and B (last-rewiring event index). A pairing of an infected
    half-edge h with a susceptible one h' transmits only when B(h') < A(h);
    a failed pairing still consumes both half-edges. Event indices are used
    as logical times: only their order enters the B < A comparisons. With
    rho = 0 no index is ever consulted and the trajectory coincides with
    run_avosi on shared streams, uniform for uniform.
    """
    if clocked is None:
        clocked = bool(params.checkpoints)
    init = rng.stream(TAG_INIT)
    u = init.randint_below(params.n)
    n = params.n
    degrees = seq.degrees
    d_u = int(degrees[u])

    # susceptible bookkeeping: vertices grouped by unpaired half-edge count,
    # each vertex owning a list of (B, A) for its live half-edges
    class_vertices: list[list[int]] = [[] for _ in range(int(degrees.max()) + 5)]
    vertex_pos = {}
    v_he: dict[int, list] = {}
    for v in range(n):
        if v == u:
            continue
        k = int(degrees[v])
        vertex_pos[v] = (k, len(class_vertices[k]))
        class_vertices[k].append(v)
        v_he[v] = [[-1, -1] for _ in range(k)]
    inf_he = [[-1, 0] for _ in range(d_u)]  # seed half-edges have A = 0

    state = EpidemicState(
        x=int(degrees.sum()),
        x_i=d_u,
        s_k=np.array([len(c) for c in class_vertices], dtype=np.int64),
        i_count=1,
        s_count=n - 1,
    )
    jump = rng.stream(TAG_JUMPS)
    clock = rng.stream(TAG_CLOCK) if clocked else None
    cps = _Checkpointer(params.checkpoints)
    a_frac = params.infect_fraction
    track = params.rho > 0.0  # with rho = 0 the indices are never observable

    def class_remove(v: int) -> int:
        k, pos = vertex_pos.pop(v)
        bucket = class_vertices[k]
        last = bucket.pop()
        if last != v:
            bucket[pos] = last
            vertex_pos[last] = (k, pos)
        state.s_k[k] -= 1
        return k

    def class_insert(v: int, k: int) -> None:
        state.grow(k)
        while k >= len(class_vertices):
            class_vertices.append([])
        vertex_pos[v] = (k, len(class_vertices[k]))
        class_vertices[k].append(v)
        state.s_k[k] += 1

    while True:
        if state.x_i == 0:
            return _finish(state, params, rng, state.t if clocked else math.nan, cps)
        if state.x <= 1:
            return _finish(state, params, rng, math.inf, cps)
        if clocked:
            rate = params.total_rate_factor * (state.x - 1)
            t_next = state.t + clock.exponential(rate)
            cps.before_jump(state, t_next)
            state.t = t_next
        now = state.jumps + 1  # logical time of this event
        r1 = jump.uniform()
        r2 = jump.uniform()
        if r1 < a_frac:
            m = min(int(r2 * (state.x - 1)), state.x - 2)
            if m < state.x_i - 1:
                # pairing of two infected half-edges
                if track:
                    h_idx = min(int(jump.uniform() * state.x_i), state.x_i - 1)
                    other = m if m < h_idx else m + 1
                    for idx in sorted((h_idx, other), reverse=True):
                        last = inf_he.pop()
                        if idx < len(inf_he):
                            inf_he[idx] = last
                state.x -= 2
                state.x_i -= 2
            else:
                m -= state.x_i - 1
                acc = 0
                for k in range(1, len(state.s_k)):
                    acc += k * int(state.s_k[k])
                    if m < acc:
                        break
                else:  # pragma: no cover
                    raise AssertionError("susceptible ladder overflow")
                infects = True
                w = None
                if track:
                    h_idx = min(int(jump.uniform() * state.x_i), state.x_i - 1)
                    h = inf_he[h_idx]
                    idx = min(
                        int(jump.uniform() * (k * int(state.s_k[k]))),
                        k * int(state.s_k[k]) - 1,
                    )
                    w = class_vertices[k][idx // k]
                    hp = v_he[w][idx % k]
                    infects = hp[0] < h[1]  # B(h') < A(h)
                    last = inf_he.pop()
                    if h_idx < len(inf_he):
                        inf_he[h_idx] = last
                    v_he[w].remove(hp)
                else:
                    w = class_vertices[k][0]
                    v_he[w].pop()
                    inf_he.pop()
                class_remove(w)
                state.x -= 2
                if infects:
                    # w infected: remaining half-edges join the infected pool
                    for he in v_he.pop(w):
                        if he[1] < 0:
                            he[1] = now
                        inf_he.append(he)
                    state.x_i += k - 2
                    state.i_count += 1
                    state.s_count -= 1
                else:
                    # failed pairing: w stays susceptible, one half-edge down
                    class_insert(w, k - 1)
                    state.x_i -= 1
        else:
            j = min(int(r2 * n), n - 1)
            if j >= state.i_count:
                # rewire one infected half-edge onto a susceptible vertex
                j -= state.i_count
                acc = 0
                for k in range(len(state.s_k)):
                    acc += int(state.s_k[k])
                    if j < acc:
                        break
                else:  # pragma: no cover
                    raise AssertionError("rewire ladder overflow")
                if track:
                    h_idx = min(int(jump.uniform() * state.x_i), state.x_i - 1)
                    h = inf_he[h_idx]
                    widx = min(
                        int(jump.uniform() * int(state.s_k[k])),
                        int(state.s_k[k]) - 1,
                    )
                    w = class_vertices[k][widx]
                    last = inf_he.pop()
                    if h_idx < len(inf_he):
                        inf_he[h_idx] = last
                else:
                    h = inf_he.pop()
                    w = class_vertices[k][0]
                k_old = class_remove(w)
                class_insert(w, k_old + 1)
                h[0] = now  # B := current time; A kept (set at most once)
                v_he[w].append(h)
                state.x_i -= 1
            # rewiring onto an infected vertex changes nothing observable:
            # B of an infected half-edge is never read while it stays infected
        state.jumps += 1
        if ledger_check:
            assert state.ledger_ok(), f"ledger broken at jump {state.jumps}"


# ---------------------------------------------------------------------------
# evoSI on an explicit multigraph

def run_evosi(
    graph: MultiGraph, params: EpidemicParams, rng: TrialRandom
) -> TrialRecord:
    """Gillespie direct simulation of evoSI.

    All live S-I edges carry total rate (lam + rho): each event picks a
    uniform S-I edge, then infects its susceptible endpoint (probability
    lam/(lam+rho)) or re-points the edge's infected end to a uniformly
    random vertex (the susceptible endpoint keeps the edge). Absorbs when
    no S-I edge remains.
    """
    n = params.n
    init = rng.stream(TAG_INIT)
    seed_vertex = init.randint_below(n)
    jump = rng.stream(TAG_JUMPS)
    clock = rng.stream(TAG_CLOCK)

    infected = bytearray(n)
    infected[seed_vertex] = 1
    edges = [list(e) for e in graph.edges]
    # adjacency with per-stub positions so rewiring can re-home a stub in O(1)
    adj = [list(stubs) for stubs in graph.adjacency]
    stub_pos = [[-1, -1] for _ in edges]
    for v, stubs in enumerate(adj):
        for pos, (eid, side) in enumerate(stubs):
            stub_pos[eid][side] = pos

    def adj_remove(v, eid, side):
        pos = stub_pos[eid][side]
        last = adj[v].pop()
        if pos < len(adj[v]):
            adj[v][pos] = last
            stub_pos[last[0]][last[1]] = pos

    def adj_insert(v, eid, side):
        stub_pos[eid][side] = len(adj[v])
        adj[v].append((eid, side))

    si_list = []
    si_pos = {}

    def is_si(eid):
        a, b = edges[eid]
        return infected[a] != infected[b]

    def si_update(eid):
        live = is_si(eid)
        here = eid in si_pos
        if live and not here:
            si_pos[eid] = len(si_list)
            si_list.append(eid)
        elif not live and here:
            pos = si_pos.pop(eid)
            last = si_list.pop()
            if last != eid:
                si_list[pos] = last
                si_pos[last] = pos

    for eid in range(len(edges)):
        si_update(eid)

    i_count = 1
    t = 0.0
    jumps = 0
    a_frac = params.infect_fraction
    while si_list:
        t += clock.exponential((params.lam + params.rho) * len(si_list))
        r1 = jump.uniform()
        r2 = jump.uniform()
        eid = si_list[min(int(r1 * len(si_list)), len(si_list) - 1)]
        a, b = edges[eid]
        s, side_s = (a, 0) if not infected[a] else (b, 1)
        if r2 < a_frac:
            infected[s] = 1
            i_count += 1
            for eid2, _side in adj[s]:
                si_update(eid2)
        else:
            w = min(int((r2 - a_frac) / (1.0 - a_frac) * n), n - 1)
            i = edges[eid][1 - side_s]
            adj_remove(i, eid, 1 - side_s)
            edges[eid][1 - side_s] = w
            adj_insert(w, eid, 1 - side_s)
            si_update(eid)
        jumps += 1

    return TrialRecord(
        final_size=i_count,
        gamma=t,
        outbreak=i_count / n > params.epsilon,
        seed=rng.base,
        jumps=jumps,
    )
