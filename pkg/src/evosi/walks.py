"""Upper (Y) and lower (Z) comparison random walks.

Both walks are integer random walks whose increment laws sandwich the
infected-half-edge jump law of the critical avoSI chain at states inside
the comparison box: the Y increments stochastically dominate the jump
increments, which dominate the Z increments. The pmfs are exact rational
constructions from the degree data with perturbation weights

    q_{k,n} = C * q * n^(2/3) * exp(-eta*k/2),   v_n = 4 + log(nC)/eta,

and horizon scale N_q = (1+rho/lambda) * m1 * q * n^(2/3), evaluated at the
critical infection rate (so rho/lambda = (m2-2m1)/m1 is model-determined).
Every float ingredient is converted to an exact Fraction once; pmf sums are
exactly 1 by assigning the remaining mass to the -1 increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import engine
from .degrees import DegreeModel, DegreeSequence, moments, sigma_sq
from .errors import InsufficientSurvivors, InvalidRegime, NoRoot
from .rng import TAG_WALK, TrialRandom, bulk_derive, bulk_u53, trial_bases
from .stats import wilson_ci

UPPER = "upper"
LOWER = "lower"

DEFAULT_C = 4.0


@dataclass(frozen=True)
class WalkSpec:
    """Immutable description of one comparison walk."""

    kind: str
    n: int
    q: float
    increments: tuple[int, ...]
    probabilities: tuple[Fraction, ...]
    start_support: tuple[int, ...]
    start_probabilities: tuple[Fraction, ...]
    steps: int
    n_q: float
    sigma: float
    rho_over_lambda: float
    c_walk: float = DEFAULT_C
    eta: float = 0.5
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)
    _start_cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in (UPPER, LOWER):
            raise ValueError(f"unknown walk kind {self.kind!r}")
        total = sum(self.probabilities, Fraction(0))
        if total != 1:
            raise InvalidRegime(f"increment masses sum to {total}, not 1")
        if any(p < 0 or p > 1 for p in self.probabilities):
            raise InvalidRegime("increment mass outside [0, 1]")
        if self.steps < 1:
            raise InvalidRegime(
                f"horizon {self.steps} < 1 (n too small for this q)"
            )
        lo = min(self.increments)
        if self.kind == UPPER and lo < -1:
            raise InvalidRegime("upper walk may not step below -1")
        if lo < -2:
            raise InvalidRegime("lower walk may not step below -2")
        cdf = np.cumsum([float(p) for p in self.probabilities])
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)
        scdf = np.cumsum([float(p) for p in self.start_probabilities])
        scdf[-1] = 1.0
        object.__setattr__(self, "_start_cdf", scdf)

    def mean(self) -> Fraction:
        return sum(
            (p * j for j, p in zip(self.increments, self.probabilities)),
            Fraction(0),
        )

    def second_moment(self) -> Fraction:
        return sum(
            (p * j * j for j, p in zip(self.increments, self.probabilities)),
            Fraction(0),
        )

    def table(self) -> str:
        """Two-column audit dump: increment, exact probability."""
        lines = [f"{j}\t{p}" for j, p in zip(self.increments, self.probabilities)]
        return "\n".join(lines) + "\n"


@dataclass
class SurvivalEstimate:
    p_hat: float
    ci: tuple[float, float]
    n13_scaled: float
    trials: int
    conditioned_endpoints: np.ndarray


def _walk_ingredients(model: DegreeModel, seq_stats, n: int, q: float,
                      c_walk: float, eta: float | None):
    if eta is None:
        eta = model.tail_eta
    m1f = moments(model, 1)
    m2f = moments(model, 2)
    rl = Fraction(float((m2f - 2 * m1f) / m1f))
    if rl <= 0:
        raise InvalidRegime("structure subcritical: m2 <= 2 m1")
    if seq_stats is not None:
        pmf = seq_stats.empirical_pmf  # k -> Fraction(count, n)
        m1 = seq_stats.moment(1)
    else:
        pmf = {int(k): Fraction(float(v)) for k, v in model.pmf.items()}
        m1 = Fraction(float(m1f))
    n23 = Fraction(float(n ** (2.0 / 3.0)))
    n_q = (1 + rl) * m1 * Fraction(q) * n23
    kmax = int(4 + math.log(n * c_walk) / eta) + 1
    q_k = {
        k: Fraction(c_walk * q * float(n ** (2.0 / 3.0)) * math.exp(-eta * k / 2.0))
        for k in range(2, kmax + 1)
    }
    v_n = 4.0 + math.log(n * c_walk) / eta
    return pmf, m1, rl, n_q, q_k, v_n, eta


def _start_law(model, seq_stats):
    if seq_stats is not None:
        items = sorted(seq_stats.empirical_pmf.items())
        return tuple(k for k, _ in items), tuple(p for _, p in items)
    items = sorted((int(k), Fraction(float(v))) for k, v in model.pmf.items())
    return tuple(k for k, _ in items), tuple(p for _, p in items)


def _check_masses(masses: dict[int, Fraction], context: str):
    for j, p in masses.items():
        if p < 0 or p > 1:
            raise InvalidRegime(f"{context}: mass {float(p):.3g} at {j} outside [0,1]")


def y_increment_pmf(
    model: DegreeModel,
    seq_stats: DegreeSequence | None,
    n: int,
    q: float,
    rho: float,
    c_walk: float = DEFAULT_C,
    eta: float | None = None,
) -> WalkSpec:
    """Upper-walk increment law: infect terms inflated by q_{k,n}."""
    pmf, m1, rl, n_q, q_k, v_n, eta = _walk_ingredients(
        model, seq_stats, n, q, c_walk, eta
    )
    denom = (1 + rl) * (m1 * n - 3 * n_q)
    if denom <= 0:
        raise InvalidRegime("m1*n - 3*N_q <= 0: n too small for this q")
    out: dict[int, Fraction] = {}
    for k in range(3, int(v_n) + 1):
        mass = (k * n * pmf.get(k, Fraction(0)) + q_k[k]) / denom
        if mass:
            out[k - 2] = out.get(k - 2, Fraction(0)) + mass
    zero = (2 * n * pmf.get(2, Fraction(0)) + q_k[2]) / denom
    zero += 2 * n_q / ((1 + 1 / rl) * n)
    out[0] = out.get(0, Fraction(0)) + zero
    out[-1] = 1 - sum(out.values(), Fraction(0))
    _check_masses(out, "upper walk")
    steps = int(float(n_q) - n**0.6)
    items = sorted(out.items())
    ss, sp = _start_law(model, seq_stats)
    return WalkSpec(
        kind=UPPER,
        n=n,
        q=q,
        increments=tuple(j for j, _ in items),
        probabilities=tuple(p for _, p in items),
        start_support=ss,
        start_probabilities=sp,
        steps=steps,
        n_q=float(n_q),
        sigma=math.sqrt(sigma_sq(model, rho)),
        rho_over_lambda=float(rl),
        c_walk=c_walk,
        eta=eta,
    )


def z_increment_pmf(
    model: DegreeModel,
    seq_stats: DegreeSequence | None,
    n: int,
    q: float,
    rho: float,
    c_walk: float = DEFAULT_C,
    eta: float | None = None,
) -> WalkSpec:
    """Lower-walk increment law: infect terms deflated, extra -2 atom."""
    pmf, m1, rl, n_q, q_k, v_n, eta = _walk_ingredients(
        model, seq_stats, n, q, c_walk, eta
    )
    denom_plus = (1 + rl) * (m1 * n + 3 * n_q)
    denom_minus = (1 + rl) * (m1 * n - 3 * n_q)
    if denom_minus <= 0:
        raise InvalidRegime("m1*n - 3*N_q <= 0: n too small for this q")
    out: dict[int, Fraction] = {}
    kmax = int(math.log(n * c_walk) / eta)
    for k in range(2, kmax + 1):
        base = k * n * pmf.get(k, Fraction(0))
        mass = (base - min(base, 2 * q_k[k])) / denom_plus
        if mass:
            out[k - 2] = out.get(k - 2, Fraction(0)) + mass
    out[-2] = Fraction(float(c_walk)) * n_q / denom_minus
    out[-1] = 1 - sum(out.values(), Fraction(0))
    _check_masses(out, "lower walk")
    steps = int(float(n_q) + n**0.6)
    items = sorted(out.items())
    ss, sp = _start_law(model, seq_stats)
    return WalkSpec(
        kind=LOWER,
        n=n,
        q=q,
        increments=tuple(j for j, _ in items),
        probabilities=tuple(p for _, p in items),
        start_support=ss,
        start_probabilities=sp,
        steps=steps,
        n_q=float(n_q),
        sigma=math.sqrt(sigma_sq(model, rho)),
        rho_over_lambda=float(rl),
        c_walk=c_walk,
        eta=eta,
    )


def walk_mean(spec: WalkSpec) -> Fraction:
    return spec.mean()


def walk_second_moment(spec: WalkSpec) -> Fraction:
    return spec.second_moment()


def solve_tilt(spec: WalkSpec) -> float:
    """Positive root of E[exp(-s*theta*n^(-1/3)*increment)] = 1.

    s = +1 for the upper walk (positive drift), -1 for the lower walk; the
    root is found by bracketed bisection plus a Newton polish to relative
    1e-12. Raises NoRoot when the transform is monotone (drift of the wrong
    sign, or no opposing increment to bend the transform back up).
    """
    s = 1.0 if spec.kind == UPPER else -1.0
    scale = float(spec.n) ** (-1.0 / 3.0)
    incs = np.array(spec.increments, dtype=np.float64)
    probs = np.array([float(p) for p in spec.probabilities])
    drift = float(spec.mean())
    if s * drift <= 0:
        raise NoRoot("walk drift does not admit a positive tilt")
    if not np.any(s * incs < 0):
        raise NoRoot("no opposing increment: transform is monotone")

    def f(theta):
        return float(np.dot(probs, np.exp(-s * theta * scale * incs))) - 1.0

    def fp(theta):
        w = -s * scale * incs
        return float(np.dot(probs * w, np.exp(-s * theta * scale * incs)))

    hi = 1.0
    for _ in range(200):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:  # pragma: no cover - opposing increment guarantees blow-up
        raise NoRoot("transform never crosses 1 again")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    theta = 0.5 * (lo + hi)
    for _ in range(40):
        step = f(theta) / fp(theta)
        theta -= step
        if abs(step) <= 1e-12 * abs(theta):
            break
    if theta <= 0 or not math.isfinite(theta):
        raise NoRoot("tilt iteration left the positive axis")
    return theta


def _draw_start(spec: WalkSpec, u: float) -> int:
    idx = int(np.searchsorted(spec._start_cdf, u, side="right"))
    return spec.start_support[min(idx, len(spec.start_support) - 1)]


def simulate_walk(spec: WalkSpec, rng: TrialRandom):
    """One walk trial; returns (survived, normalized endpoint, min level).

    The start level is the degree of a uniform vertex (first walk uniform);
    each step consumes one further uniform. Survival means the level stays
    strictly positive through all spec.steps increments; the endpoint of a
    surviving walk is normalized by sigma * sqrt(N_q), dead walks report 0.
    """
    ws = rng.stream(TAG_WALK)
    level = _draw_start(spec, ws.uniform())
    lowest = level
    incs = spec.increments
    cdf = spec._cdf
    norm = spec.sigma * math.sqrt(spec.n_q)
    if level <= 0:
        return False, 0.0, lowest
    for _ in range(spec.steps):
        u = ws.uniform()
        level += incs[int(np.searchsorted(cdf, u, side="right"))]
        if level < lowest:
            lowest = level
        if level <= 0:
            return False, 0.0, lowest
    return True, level / norm, lowest


def run_walks(
    spec: WalkSpec,
    master_seed: int,
    trials: int,
    first_trial: int = 0,
    batch: int = 65536,
):
    """Vectorized walk trials; returns (survived, endpoints, min_levels).

    Endpoints are normalized like simulate_walk; matches the scalar path
    trial for trial.
    """
    bases = trial_bases(master_seed, first_trial, trials)
    wseeds = bulk_derive(bases, TAG_WALK)
    u0 = bulk_u53(wseeds, np.uint64(0))
    idx = np.searchsorted(spec._start_cdf, u0, side="right")
    starts = np.asarray(spec.start_support, dtype=np.int64)[
        np.minimum(idx, len(spec.start_support) - 1)
    ]
    survived, endpoint, min_level = engine.run_walk_batch(
        np.asarray(spec.increments, dtype=np.int64),
        np.asarray([float(p) for p in spec.probabilities]),
        starts,
        spec.steps,
        master_seed,
        first_trial,
        trials,
        batch=batch,
        counter_base=1,
    )
    norm = spec.sigma * math.sqrt(spec.n_q)
    return survived, endpoint / norm, min_level


def estimate_survival(
    spec: WalkSpec,
    trials: int,
    master_seed: int,
    batch: int = 65536,
) -> SurvivalEstimate:
    survived, endpoints, _ = run_walks(spec, master_seed, trials, batch=batch)
    hits = int(survived.sum())
    p_hat = hits / trials
    return SurvivalEstimate(
        p_hat=p_hat,
        ci=wilson_ci(hits, trials),
        n13_scaled=float(spec.n) ** (1.0 / 3.0) * p_hat,
        trials=trials,
        conditioned_endpoints=endpoints[survived],
    )


def conditioned_endpoint_sample(
    spec: WalkSpec,
    trials: int,
    master_seed: int,
    batch: int = 65536,
) -> np.ndarray:
    """Normalized endpoints of surviving walks; needs >= 100 survivors."""
    survived, endpoints, _ = run_walks(spec, master_seed, trials, batch=batch)
    sample = endpoints[survived]
    if len(sample) < 100:
        raise InsufficientSurvivors(
            f"{len(sample)} survivors in {trials} trials"
        )
    return sample
