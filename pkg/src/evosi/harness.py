"""Monte Carlo orchestration: trial batches, outbreak estimates with
confidence intervals, the n^(-1/3) exponent fit, the three-stage
conditional experiments, and the cross-model dominance comparison.

Trials are addressed by (master_seed, trial_index) only, so any worker
can run any block and the aggregate is a deterministic fold in
trial-index order regardless of the worker count.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .degrees import (
    DegreeModel,
    DegreeSequence,
    critical_rate,
    model_constants,
    moments,
    sample_iid_degrees,
)
from .engine import FixedInit, NswInit, run_avosi_batch
from .epidemic import EpidemicParams, run_ab_avosi, run_evosi
from .errors import InsufficientEvents, InvalidRegime
from .graphs import build_configuration_model
from .limits import meander_cdf
from .rng import TAG_DEGREES, TAG_GRAPH, TrialRandom
from .stats import fit_wls_loglog, ks_distance, rank_test_less, wilson_ci

DEFAULT_SEED = 1729

# Trials per worker task; a package constant, so results do not depend on
# how blocks land on workers.
_BLOCK = 16384

_DYNAMICS = ("avosi", "evosi", "ab")
_SEQUENCE_MODES = ("nsw", "fixed")


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything a reproducible experiment needs."""

    model: DegreeModel
    rho: float
    n_grid: tuple
    trials_per_n: int
    lam: float | None = None          # None selects the critical rate
    epsilon: float = 0.05
    q: float = 0.1
    big_q: float = 5.0
    master_seed: int = DEFAULT_SEED
    dynamics: str = "avosi"
    sequence_mode: str = "nsw"
    workers: int = 1

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.n_grid)
        if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvalidRegime("n_grid must be non-empty and strictly increasing")
        if any(n < 2 for n in sizes):
            raise InvalidRegime("population sizes must be at least 2")
        object.__setattr__(self, "n_grid", sizes)
        if self.trials_per_n < 1:
            raise InvalidRegime("trials_per_n must be at least 1")
        if self.epsilon <= 0.0:
            raise InvalidRegime("epsilon must be positive")
        if not 0.0 < self.q <= self.big_q:
            raise InvalidRegime("stage parameters must satisfy 0 < q <= Q")
        if self.dynamics not in _DYNAMICS:
            raise InvalidRegime(f"dynamics must be one of {_DYNAMICS}")
        if self.sequence_mode not in _SEQUENCE_MODES:
            raise InvalidRegime(f"sequence_mode must be one of {_SEQUENCE_MODES}")
        if self.workers < 1:
            raise InvalidRegime("workers must be at least 1")

    def rate(self) -> float:
        if self.lam is not None:
            return float(self.lam)
        return critical_rate(self.model, self.rho)


@dataclass(frozen=True)
class Estimate:
    """Outbreak-probability estimate at one population size."""

    n: int
    value: float
    ci_low: float
    ci_high: float
    trials: int
    events: int
    scaled: float

    def __post_init__(self):
        if not self.ci_low <= self.value <= self.ci_high:
            raise InvalidRegime("confidence interval must bracket the estimate")


def make_estimate(n, events, trials) -> Estimate:
    value = events / trials
    low, high = wilson_ci(events, trials)
    # sqrt rounding can push the degenerate 0- or T-event interval past the
    # point estimate by one ulp
    low, high = min(low, value), max(high, value)
    return Estimate(
        n=int(n),
        value=value,
        ci_low=low,
        ci_high=high,
        trials=int(trials),
        events=int(events),
        scaled=float(n) ** (1.0 / 3.0) * value,
    )


def n_q_value(model, rho, lam, q, n) -> float:
    """The jump budget (1 + rho/lam) * m1 * q * n^(2/3) of the first stage."""
    m1 = moments(model, 1)
    return (1.0 + rho / lam) * m1 * q * float(n) ** (2.0 / 3.0)


# ---------------------------------------------------------------------------
# worker plumbing


def _model_payload(model: DegreeModel):
    return (model.kind, model.param, dict(model.pmf), model.tail_eta)


def _model_restore(payload) -> DegreeModel:
    kind, param, pmf, eta = payload
    if kind == "poisson":
        return DegreeModel.poisson(param, eta=eta)
    if kind == "regular":
        return DegreeModel.regular(int(param), eta=eta)
    return DegreeModel.explicit(pmf, eta=eta)


def _blocks(trials):
    return [(start, min(_BLOCK, trials - start)) for start in range(0, trials, _BLOCK)]


def _scalar_trials(job, start, count, collect_traces):
    """evoSI / AB dynamics: one trial at a time on the shared seed ladder."""
    model = _model_restore(job["model"])
    params = EpidemicParams(
        lam=job["lam"],
        rho=job["rho"],
        n=job["n"],
        epsilon=job["epsilon"],
        checkpoints=job["checkpoints"],
    )
    fixed = job["fixed_degrees"]
    fixed_seq = None if fixed is None else DegreeSequence.from_degrees(fixed)
    finals = np.zeros(count, np.int64)
    outbreaks = np.zeros(count, bool)
    for offset in range(count):
        rng = TrialRandom(job["master_seed"], start + offset)
        if fixed_seq is None:
            seq = sample_iid_degrees(model, job["n"], rng.stream(TAG_DEGREES))
        else:
            seq = fixed_seq
        if job["dynamics"] == "evosi":
            graph = build_configuration_model(seq, rng.stream(TAG_GRAPH))
            record = run_evosi(graph, params, rng)
        else:
            record = run_ab_avosi(seq, params, rng)
        finals[offset] = record.final_size
        outbreaks[offset] = record.outbreak
    if collect_traces:
        raise InvalidRegime("stage traces are defined on the avoSI exploration")
    return finals, outbreaks


def _run_block(args):
    job, start, count, collect_traces = args
    if job["dynamics"] == "avosi":
        model = _model_restore(job["model"])
        params = EpidemicParams(
            lam=job["lam"],
            rho=job["rho"],
            n=job["n"],
            epsilon=job["epsilon"],
            checkpoints=job["checkpoints"],
        )
        if job["fixed_degrees"] is None:
            init = NswInit(model)
        else:
            init = FixedInit(DegreeSequence.from_degrees(job["fixed_degrees"]))
        result = run_avosi_batch(
            init, params, job["master_seed"], start, count, horizon=job["horizon"]
        )
        if collect_traces:
            return (
                start,
                result.final_size,
                result.outbreak,
                result.x_i_at,
                result.jump_count_at,
                result.i_count_at,
            )
        return (start, result.final_size, result.outbreak, None, None, None)
    finals, outbreaks = _scalar_trials(job, start, count, collect_traces)
    return (start, finals, outbreaks, None, None, None)


def _fixed_sequence(plan, n):
    """Raw degree array shared by all trials in fixed mode (picklable)."""
    if plan.sequence_mode != "fixed":
        return None
    rng = TrialRandom(plan.master_seed, 0)
    seq = sample_iid_degrees(plan.model, n, rng.stream(TAG_DEGREES))
    return np.asarray(seq.degrees, np.int64)


def _job(plan, n, lam, checkpoints=(), horizon=None):
    return {
        "model": _model_payload(plan.model),
        "rho": plan.rho,
        "lam": lam,
        "n": int(n),
        "epsilon": min(plan.epsilon, 0.999),
        "checkpoints": tuple(checkpoints),
        "horizon": horizon,
        "dynamics": plan.dynamics,
        "master_seed": plan.master_seed,
        "fixed_degrees": _fixed_sequence(plan, n),
    }


def _run_trials(plan, job, trials, collect_traces=False, progress=False):
    """All trials of one experiment leg, folded in trial-index order."""
    tasks = [(job, start, count, collect_traces) for start, count in _blocks(trials)]
    if plan.workers == 1 or len(tasks) == 1:
        raw = [_run_block(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            raw = list(pool.map(_run_block, tasks, chunksize=1))
    raw.sort(key=lambda item: item[0])
    if progress:
        print(
            f"  n={job['n']}: {trials} trials over {len(tasks)} blocks done",
            file=sys.stderr,
        )
    finals = np.concatenate([item[1] for item in raw])
    outbreaks = np.concatenate([item[2] for item in raw])
    if not collect_traces:
        return finals, outbreaks, None, None, None
    x_i_at = np.concatenate([item[3] for item in raw], axis=0)
    jumps_at = np.concatenate([item[4] for item in raw], axis=0)
    i_count_at = np.concatenate([item[5] for item in raw], axis=0)
    return finals, outbreaks, x_i_at, jumps_at, i_count_at


# ---------------------------------------------------------------------------
# outbreak probability and the scaling fit


def final_sizes(plan: ExperimentPlan, progress=False):
    """Per-trial (final_size, outbreak) arrays for the plan's dynamics at
    the largest grid size."""
    n = plan.n_grid[-1]
    job = _job(plan, n, plan.rate())
    finals, outbreaks, _, _, _ = _run_trials(
        plan, job, plan.trials_per_n, progress=progress
    )
    return finals, outbreaks


def estimate_outbreak_probability(plan: ExperimentPlan, progress=False):
    """Per-n outbreak-probability estimates, deterministic in the master seed."""
    if plan.epsilon >= 1.0:
        # The outbreak fraction never exceeds 1, so the event is empty.
        return [make_estimate(n, 0, plan.trials_per_n) for n in plan.n_grid]
    lam = plan.rate()
    estimates = []
    for n in plan.n_grid:
        job = _job(plan, n, lam)
        _, outbreaks, _, _, _ = _run_trials(
            plan, job, plan.trials_per_n, progress=progress
        )
        estimates.append(make_estimate(n, int(outbreaks.sum()), plan.trials_per_n))
    return estimates


def fit_scaling_exponent(estimates):
    """Weighted least squares of log p-hat on log n: (slope, (lo, hi))."""
    if len(estimates) < 4:
        raise InsufficientEvents("the exponent fit needs at least 4 grid points")
    for e in estimates:
        if e.events < 50:
            raise InsufficientEvents(
                f"n={e.n} has only {e.events} outbreak events (need >= 50)"
            )
    ns = np.array([e.n for e in estimates], float)
    values = np.array([e.value for e in estimates], float)
    widths = np.array([e.ci_high - e.ci_low for e in estimates], float)
    # Standard error of log p-hat from the CI width; uniform weights when
    # the estimates are noiseless (synthetic inputs).
    log_se = widths / (2.0 * 1.959963984540054 * values)
    if np.all(log_se > 0.0):
        weights = 1.0 / log_se ** 2
    else:
        weights = None
    slope, _, stderr = fit_wls_loglog(ns, values, weights)
    half = 1.959963984540054 * stderr
    return slope, (slope - half, slope + half)


# ---------------------------------------------------------------------------
# stage reports


@dataclass(frozen=True)
class Stage1Report:
    n: int
    q: float
    lam: float
    n_q: float
    trials: int
    survivors: int
    window_fraction: float
    ks_to_meander: float
    endpoint_mean: float
    endpoints: np.ndarray = field(repr=False)


def stage1_report(plan: ExperimentPlan, progress=False) -> Stage1Report:
    """Jump-count concentration and the meander endpoint law at q*n^(-1/3).

    Runs the avoSI exploration on the largest grid size; survivors are the
    trials still active at the checkpoint."""
    n = plan.n_grid[-1]
    lam = plan.rate()
    t_q = plan.q * float(n) ** (-1.0 / 3.0)
    job = _job(plan, n, lam, checkpoints=(t_q,), horizon=t_q)
    job["dynamics"] = "avosi"
    _, _, x_i_at, jumps_at, _ = _run_trials(
        plan, job, plan.trials_per_n, collect_traces=True, progress=progress
    )
    alive = x_i_at[:, 0] > 0
    survivors = int(np.count_nonzero(alive))
    n_q = n_q_value(plan.model, plan.rho, lam, plan.q, n)
    window = 2.0 * float(n) ** 0.6
    if survivors:
        jumps = jumps_at[alive, 0].astype(float)
        window_fraction = float(np.mean(np.abs(jumps - n_q) <= window))
        sigma = math.sqrt(model_constants(plan.model, plan.rho).sigma_sq)
        endpoints = x_i_at[alive, 0].astype(float) / (sigma * math.sqrt(n_q))
        ks = ks_distance(endpoints, meander_cdf)
        endpoint_mean = float(endpoints.mean())
    else:
        window_fraction = math.nan
        endpoints = np.zeros(0)
        ks = math.nan
        endpoint_mean = math.nan
    return Stage1Report(
        n=n,
        q=plan.q,
        lam=lam,
        n_q=n_q,
        trials=plan.trials_per_n,
        survivors=survivors,
        window_fraction=window_fraction,
        ks_to_meander=ks,
        endpoint_mean=endpoint_mean,
        endpoints=endpoints,
    )


@dataclass(frozen=True)
class Stage2Report:
    n: int
    q: float
    big_q: float
    s_grid: tuple
    trials: int
    survivors: int
    mean_increments: tuple
    predicted_means: tuple
    var_increments: tuple
    predicted_vars: tuple
    takeoff_fraction: float
    takeoff_threshold: float


def stage2_report(plan: ExperimentPlan, s_grid=None, progress=False) -> Stage2Report:
    """Diffusion diagnostics on [q, Q], conditioned on survival to q*n^(-1/3)."""
    n = plan.n_grid[-1]
    lam = plan.rate()
    if s_grid is None:
        s_grid = tuple(np.linspace(plan.q, plan.big_q, 6))
    s_grid = tuple(float(s) for s in s_grid)
    if s_grid[0] != plan.q or s_grid[-1] != plan.big_q or list(s_grid) != sorted(s_grid):
        raise InvalidRegime("the s-grid must run from q to Q in increasing order")
    scale = float(n) ** (-1.0 / 3.0)
    times = tuple(s * scale for s in s_grid)
    job = _job(plan, n, lam, checkpoints=times, horizon=times[-1])
    job["dynamics"] = "avosi"
    _, _, x_i_at, _, _ = _run_trials(
        plan, job, plan.trials_per_n, collect_traces=True, progress=progress
    )
    alive = x_i_at[:, 0] > 0
    survivors = int(np.count_nonzero(alive))
    mc = model_constants(plan.model, plan.rho)
    # |m1 delta| Q^2 n^(1/3) / 4: for positive drift this is the takeoff
    # level of the limit parabola; the magnitude keeps the event
    # non-trivial when the drift is negative (where it almost never holds)
    threshold = abs(mc.drift_coef) * plan.big_q ** 2 * float(n) ** (1.0 / 3.0) / 4.0
    means, pred_means, variances, pred_vars = [], [], [], []
    takeoff = math.nan
    if survivors:
        base = x_i_at[alive, 0].astype(float)
        for j, s in enumerate(s_grid):
            increments = (x_i_at[alive, j].astype(float) - base) * scale
            means.append(float(increments.mean()))
            pred_means.append(0.5 * mc.drift_coef * (s * s - plan.q * plan.q))
            variances.append(float(increments.var()))
            pred_vars.append(mc.diffusion_coef ** 2 * (s - plan.q))
        takeoff = float(np.mean(x_i_at[alive, -1] >= threshold))
    return Stage2Report(
        n=n,
        q=plan.q,
        big_q=plan.big_q,
        s_grid=s_grid,
        trials=plan.trials_per_n,
        survivors=survivors,
        mean_increments=tuple(means),
        predicted_means=tuple(pred_means),
        var_increments=tuple(variances),
        predicted_vars=tuple(pred_vars),
        takeoff_fraction=takeoff,
        takeoff_threshold=threshold,
    )


@dataclass(frozen=True)
class Stage3Report:
    n: int
    big_q: float
    epsilon: float
    threshold: float
    trials: int
    takeoff_trials: int
    outbreak_fraction: float
    early_grid: tuple
    fitted_band_coefficient: float
    band_fraction: float


def stage3_report(plan: ExperimentPlan, progress=False) -> Stage3Report:
    """Takeoff-to-outbreak diagnostics past the X_I threshold at Q*n^(-1/3)."""
    n = plan.n_grid[-1]
    lam = plan.rate()
    scale = float(n) ** (-1.0 / 3.0)
    t_big = plan.big_q * scale
    early = tuple(t for t in (0.02, 0.04, 0.06, 0.08, 0.10) if t != t_big)
    checkpoints = tuple(sorted(early + (t_big,)))
    job = _job(plan, n, lam, checkpoints=checkpoints)
    job["dynamics"] = "avosi"
    finals, _, x_i_at, _, i_count_at = _run_trials(
        plan, job, plan.trials_per_n, collect_traces=True, progress=progress
    )
    big_index = checkpoints.index(t_big)
    mc = model_constants(plan.model, plan.rho)
    threshold = abs(mc.drift_coef) * plan.big_q ** 2 * float(n) ** (1.0 / 3.0) / 4.0
    takeoff = x_i_at[:, big_index] > threshold
    takeoff_trials = int(np.count_nonzero(takeoff))
    outbreak_fraction = math.nan
    if takeoff_trials:
        outbreak_fraction = float(
            np.mean(finals[takeoff] > plan.epsilon * n)
        )
    # Early-time band |I_t/n - m1 t| <= C t^2 + 5 n^(-1/3) along paths still
    # alive at t, with C fitted by least squares through the origin.
    residuals, squares = [], []
    slack = 5.0 * scale
    for j, t in enumerate(checkpoints):
        if t > 0.10001:
            continue
        alive_t = x_i_at[:, j] > 0
        if not np.any(alive_t):
            continue
        residual = np.abs(i_count_at[alive_t, j] / n - mc.m1 * t)
        residuals.append(residual)
        squares.append(np.full(residual.shape, t * t))
    if residuals:
        residual = np.concatenate(residuals)
        square = np.concatenate(squares)
        denom = float(np.sum(square * square))
        fitted_c = float(np.sum(square * residual) / denom) if denom > 0.0 else 0.0
        band_fraction = float(np.mean(residual <= fitted_c * square + slack))
        band_grid = tuple(t for t in checkpoints if t <= 0.10001)
    else:
        fitted_c = math.nan
        band_fraction = math.nan
        band_grid = ()
    return Stage3Report(
        n=n,
        big_q=plan.big_q,
        epsilon=plan.epsilon,
        threshold=threshold,
        trials=plan.trials_per_n,
        takeoff_trials=takeoff_trials,
        outbreak_fraction=outbreak_fraction,
        early_grid=band_grid,
        fitted_band_coefficient=fitted_c,
        band_fraction=band_fraction,
    )


# ---------------------------------------------------------------------------
# cross-model dominance


@dataclass(frozen=True)
class ComparisonResult:
    n: int
    trials: int
    final_sizes: dict
    means: dict
    p_ab_below_evo: float
    p_evo_below_avo: float


def compare_final_sizes(plan: ExperimentPlan, progress=False) -> ComparisonResult:
    """Final sizes of the AB, evoSI and avoSI dynamics on shared seeds,
    with one-sided rank tests for the sandwich AB <= evoSI <= avoSI."""
    n = plan.n_grid[-1]
    lam = plan.rate()
    sizes = {}
    for dynamics in ("ab", "evosi", "avosi"):
        job = _job(plan, n, lam)
        job["dynamics"] = dynamics
        finals, _, _, _, _ = _run_trials(plan, job, plan.trials_per_n, progress=progress)
        sizes[dynamics] = finals
        if progress:
            print(f"  {dynamics}: mean final size {finals.mean():.3f}", file=sys.stderr)
    return ComparisonResult(
        n=n,
        trials=plan.trials_per_n,
        final_sizes=sizes,
        means={k: float(v.mean()) for k, v in sizes.items()},
        p_ab_below_evo=rank_test_less(sizes["ab"], sizes["evosi"]),
        p_evo_below_avo=rank_test_less(sizes["evosi"], sizes["avosi"]),
    )


# ---------------------------------------------------------------------------
# outputs


def _model_label(model: DegreeModel) -> str:
    if model.kind == "poisson":
        return f"poisson:{model.param:g}"
    if model.kind == "regular":
        return f"regular:{int(model.param)}"
    pairs = ",".join(f"{k}={model.pmf[k]:.12g}" for k in sorted(model.pmf))
    return f"explicit:{pairs}"


def plan_summary(plan: ExperimentPlan) -> dict:
    return {
        "model": _model_label(plan.model),
        "rho": plan.rho,
        "lambda": plan.rate(),
        "lambda_mode": "critical" if plan.lam is None else "explicit",
        "n_grid": list(plan.n_grid),
        "trials_per_n": plan.trials_per_n,
        "epsilon": plan.epsilon,
        "q": plan.q,
        "Q": plan.big_q,
        "master_seed": plan.master_seed,
        "dynamics": plan.dynamics,
        "sequence_mode": plan.sequence_mode,
    }


def write_outputs(plan, estimates, path, slope=None, extras=None):
    """One CSV of per-n estimates plus a JSON summary at `path`.csv/.json.

    Output depends only on the plan and the estimates; no timestamps or
    environment details, so reruns are byte-identical."""
    rows = [
        {
            "n": e.n,
            "trials": e.trials,
            "events": e.events,
            "p_hat": repr(e.value),
            "ci_low": repr(e.ci_low),
            "ci_high": repr(e.ci_high),
            "scaled": repr(e.scaled),
        }
        for e in estimates
    ]
    csv_path = f"{path}.csv"
    json_path = f"{path}.json"
    with open(csv_path, "w", newline="") as handle:
        writer = csv.DictWriter(
            handle,
            fieldnames=["n", "trials", "events", "p_hat", "ci_low", "ci_high", "scaled"],
        )
        writer.writeheader()
        writer.writerows(rows)
    summary = {
        "plan": plan_summary(plan),
        "estimates": [
            {
                "n": e.n,
                "trials": e.trials,
                "events": e.events,
                "p_hat": e.value,
                "ci_low": e.ci_low,
                "ci_high": e.ci_high,
                "scaled": e.scaled,
            }
            for e in estimates
        ],
        "tolerance_note": (
            "Monte Carlo tolerances are engineering budgets; the underlying "
            "limits are asymptotic statements without rates."
        ),
    }
    if slope is not None:
        value, (low, high) = slope
        summary["slope"] = {"value": value, "ci_low": low, "ci_high": high}
    if extras:
        summary.update(extras)
    with open(json_path, "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return csv_path, json_path
