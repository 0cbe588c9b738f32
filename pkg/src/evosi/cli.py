"""Command-line entry point wiring configs to experiments.

Every subcommand accepts --seed (fixed default 1729, never wall-clock),
--out, and --config pointing at a flat `key = value` file whose keys mirror
the long flags; explicit flags override file values. Exit codes: 0 success,
1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import walks
from .degrees import (
    audit_assumptions,
    critical_rate,
    load_degree_sequence,
    model_constants,
    parse_model_spec,
    sample_iid_degrees,
)
from .errors import EvosiError
from .harness import (
    DEFAULT_SEED,
    ExperimentPlan,
    compare_final_sizes,
    estimate_outbreak_probability,
    final_sizes,
    fit_scaling_exponent,
    stage1_report,
    stage2_report,
    stage3_report,
    write_outputs,
)
from .limits import f1_series, limit_constants, meander_cdf, meander_sample
from .rng import TAG_DEGREES, TrialRandom
from .stats import ks_distance


class ConfigError(Exception):
    """A flag, config entry, or combination that cannot form a valid run."""


# ---------------------------------------------------------------------------
# field parsing: CLI flags and config-file entries share string parsers


def _f_int(text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}")


def _f_float(text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}")


def _f_int_list(text):
    try:
        return tuple(int(part) for part in str(text).split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")


def _f_str(text):
    return str(text)


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ConfigError(f"expected one of {options}, got {text!r}")
        return text

    return parse


class Field:
    def __init__(self, name, parse, default=None, required=False, help=""):
        self.name = name
        self.parse = parse
        self.default = default
        self.required = required
        self.help = help

    @property
    def flag(self):
        return "--" + self.name.replace("_", "-")


def _model_field():
    return Field(
        "model", _f_str, required=True,
        help="degree model: poisson:MU, regular:D, or pmf:PATH",
    )


def _common_fields():
    return [
        Field("seed", _f_int, DEFAULT_SEED, help="master seed (fixed default 1729)"),
        Field("out", _f_str, None, help="output path (CSV/JSON or text)"),
    ]


def _plan_fields():
    return [
        Field("rho", _f_float, required=True, help="rewiring rate"),
        Field("lam", _f_float, None, help="infection rate (default: critical)"),
        Field("trials", _f_int, 1000, help="trials per grid size"),
        Field("eps", _f_float, 0.05, help="outbreak threshold fraction"),
        Field("workers", _f_int, 1, help="worker process count"),
        Field(
            "mode", _choice("nsw", "fixed"), "nsw",
            help="degree sequences resampled per trial (nsw) or fixed",
        ),
    ]


SCHEMAS = {
    "constants": [
        _model_field(),
        Field("rho", _f_float, required=True, help="rewiring rate"),
    ],
    "audit": [
        _model_field(),
        Field("n", _f_int, 10000, help="sequence length to sample"),
        Field("eta", _f_float, 0.5, help="exponential-moment rate"),
        Field("degrees", _f_str, None, help="load the sequence from a file"),
    ],
    "simulate": [
        _model_field(),
        *_plan_fields(),
        Field("n", _f_int, required=True, help="population size"),
        Field(
            "dynamics", _choice("avosi", "evosi", "ab"), "avosi",
            help="avoSI exploration, evoSI on a graph, or the AB skeleton",
        ),
    ],
    "outbreak": [
        _model_field(),
        *_plan_fields(),
        Field("n", _f_int_list, required=True, help="population sizes, comma-separated"),
    ],
    "scaling": [
        _model_field(),
        *_plan_fields(),
        Field(
            "n", _f_int_list, (1000, 4000, 16000, 64000),
            help="population sizes, comma-separated (>= 4 for the fit)",
        ),
    ],
    "walks": [
        _model_field(),
        Field("rho", _f_float, required=True, help="rewiring rate"),
        Field("n", _f_int, required=True, help="population size"),
        Field("q", _f_float, 0.1, help="stage-one horizon parameter"),
        Field(
            "kind", _choice("upper", "lower"), "upper",
            help="upper (Y) or lower (Z) comparison walk",
        ),
        Field("trials", _f_int, 0, help="survival trials (0: construction only)"),
    ],
    "meander": [
        Field("samples", _f_int, 100000, help="sample count"),
    ],
    "f1": [
        _model_field(),
        Field("rho", _f_float, required=True, help="rewiring rate"),
        Field("x", _f_float, required=True, help="scaled start level (>= 0)"),
        Field("q", _f_float, required=True, help="time offset (> 0)"),
        Field("tol", _f_float, 1e-4, help="series tail tolerance"),
        Field("zeros", _f_int, 50, help="Airy zeros in the series"),
    ],
    "stages": [
        _model_field(),
        *_plan_fields(),
        Field("n", _f_int, required=True, help="population size"),
        Field("q", _f_float, 0.1, help="stage-one horizon parameter"),
        Field("big_q", _f_float, 5.0, help="takeoff horizon parameter Q"),
        Field(
            "stage", _choice("1", "2", "3", "all"), "all",
            help="which report(s) to run",
        ),
    ],
    "compare": [
        _model_field(),
        *_plan_fields(),
        Field("n", _f_int, required=True, help="population size"),
    ],
}

DESCRIPTIONS = {
    "constants": "critical rate and limit-law constants of a degree model",
    "audit": "check a degree sequence against the model assumptions",
    "simulate": "run epidemic trials and summarize final sizes",
    "outbreak": "estimate outbreak probabilities over a size grid",
    "scaling": "fit the outbreak-probability scaling exponent",
    "walks": "build comparison walks and estimate their survival",
    "meander": "sample the Brownian meander endpoint law",
    "f1": "evaluate the takeoff probability F1(x, q) by Airy series",
    "stages": "run the three-stage conditional diagnostics",
    "compare": "rank final sizes of the AB, evoSI, and avoSI dynamics",
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="evosi",
        description="critical epidemics with rewiring on configuration models",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, fields in SCHEMAS.items():
        p = sub.add_parser(command, help=DESCRIPTIONS[command])
        p.add_argument("--config", default=None, help="key = value file")
        for field in fields + _common_fields():
            p.add_argument(field.flag, dest=field.name, default=None, help=field.help)
    return parser


def _read_config(path):
    values = {}
    try:
        with open(path) as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep or not key.strip():
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    return values


def _resolve(ns):
    """Merge CLI flags over config-file entries over defaults, typed."""
    fields = SCHEMAS[ns.command] + _common_fields()
    file_values = _read_config(ns.config) if ns.config else {}
    known = {f.name for f in fields}
    for key in file_values:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r} for {ns.command!r}")
    cfg = {}
    for field in fields:
        raw = getattr(ns, field.name)
        if raw is None:
            raw = file_values.get(field.name)
        if raw is None:
            if field.required:
                raise ConfigError(f"missing required option {field.flag}")
            cfg[field.name] = field.default
            continue
        try:
            cfg[field.name] = field.parse(raw)
        except ConfigError as exc:
            raise ConfigError(f"{field.flag}: {exc}")
    return cfg


def _load_model(cfg):
    try:
        return parse_model_spec(cfg["model"])
    except (ValueError, OSError) as exc:
        raise ConfigError(f"--model: {exc}")


def _make_plan(cfg, model, n_grid, dynamics="avosi", q=None, big_q=None):
    try:
        return ExperimentPlan(
            model=model,
            rho=cfg["rho"],
            n_grid=tuple(n_grid),
            trials_per_n=cfg["trials"],
            lam=cfg["lam"],
            epsilon=cfg["eps"],
            q=cfg.get("q", 0.1) if q is None else q,
            big_q=cfg.get("big_q", 5.0) if big_q is None else big_q,
            master_seed=cfg["seed"],
            dynamics=dynamics,
            sequence_mode=cfg["mode"],
            workers=cfg["workers"],
        )
    except EvosiError as exc:
        raise ConfigError(str(exc))


def _emit(text, out_path):
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(text)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_constants(cfg):
    model = _load_model(cfg)
    mc = model_constants(model, cfg["rho"])
    lines = [
        f"model = {cfg['model']}",
        f"rho = {cfg['rho']!r}",
        f"lambda_c = {mc.lambda_c!r}",
        f"delta = {mc.delta!r}",
        f"sigma_sq = {mc.sigma_sq!r}",
        f"drift_coef = {mc.drift_coef!r}",
        f"diffusion_coef = {mc.diffusion_coef!r}",
        f"m1 = {mc.m1!r}",
        f"m2 = {mc.m2!r}",
        f"m3 = {mc.m3!r}",
    ]
    if mc.delta > 0:
        lc = limit_constants(model, cfg["rho"])
        lines.append(f"c_f1lim = {lc.c_f1lim!r}")
        lines.append(f"c_main = {lc.c_main!r}")
    _emit("\n".join(lines) + "\n", cfg["out"])
    return 0


def _cmd_audit(cfg):
    model = _load_model(cfg)
    if cfg["degrees"]:
        try:
            seq = load_degree_sequence(cfg["degrees"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"--degrees: {exc}")
    else:
        rng = TrialRandom(cfg["seed"], 0)
        seq = sample_iid_degrees(model, cfg["n"], rng.stream(TAG_DEGREES))
    audit = audit_assumptions(seq, model, cfg["eta"])
    lines = [
        f"n = {seq.n}",
        f"max_degree = {audit.max_degree} (bound {audit.max_degree_bound!r})",
        f"h1 exponential moment: observed {audit.h1_observed!r}"
        f" threshold {audit.h1_threshold!r} pass {audit.h1_pass}",
        f"h2 sup distance: {audit.h2_sup_distance!r}",
        f"h3 weighted l1: statistic {audit.h3_statistic!r}"
        f" exponent {audit.h3_exponent_certified!r}"
        f" target {audit.h3_exponent_target!r} pass {audit.h3_pass}",
        f"per-degree concentration pass {audit.remark12_pass}",
    ]
    _emit("\n".join(lines) + "\n", cfg["out"])
    return 0


def _cmd_simulate(cfg):
    model = _load_model(cfg)
    plan = _make_plan(cfg, model, (cfg["n"],), dynamics=cfg["dynamics"])
    finals, outbreaks = final_sizes(plan, progress=True)
    text = (
        f"dynamics = {plan.dynamics}\n"
        f"n = {plan.n_grid[-1]}\n"
        f"trials = {plan.trials_per_n}\n"
        f"lambda = {plan.rate()!r}\n"
        f"mean_final_size = {float(finals.mean())!r}\n"
        f"max_final_size = {int(finals.max())}\n"
        f"outbreak_fraction = {float(outbreaks.mean())!r}\n"
    )
    sys.stdout.write(text)
    if cfg["out"]:
        with open(cfg["out"], "w") as handle:
            handle.write("trial,final_size,outbreak\n")
            for i, (size, flag) in enumerate(zip(finals, outbreaks)):
                handle.write(f"{i},{int(size)},{int(flag)}\n")
    return 0


def _estimate_lines(plan, estimates):
    lines = [f"lambda = {plan.rate()!r}"]
    for e in estimates:
        lines.append(
            f"n = {e.n}  trials = {e.trials}  events = {e.events}"
            f"  p_hat = {e.value!r}  ci = [{e.ci_low!r}, {e.ci_high!r}]"
            f"  scaled = {e.scaled!r}"
        )
    return lines


def _cmd_outbreak(cfg):
    model = _load_model(cfg)
    plan = _make_plan(cfg, model, cfg["n"])
    estimates = estimate_outbreak_probability(plan, progress=True)
    sys.stdout.write("\n".join(_estimate_lines(plan, estimates)) + "\n")
    if cfg["out"]:
        write_outputs(plan, estimates, cfg["out"])
    return 0


def _cmd_scaling(cfg):
    model = _load_model(cfg)
    if len(cfg["n"]) < 4:
        raise ConfigError("--n needs at least 4 sizes for the exponent fit")
    plan = _make_plan(cfg, model, cfg["n"])
    estimates = estimate_outbreak_probability(plan, progress=True)
    slope, (lo, hi) = fit_scaling_exponent(estimates)
    lines = _estimate_lines(plan, estimates)
    lines.append(f"slope = {slope!r}  ci = [{lo!r}, {hi!r}]")
    sys.stdout.write("\n".join(lines) + "\n")
    if cfg["out"]:
        write_outputs(plan, estimates, cfg["out"], slope=(slope, (lo, hi)))
    return 0


def _cmd_walks(cfg):
    model = _load_model(cfg)
    build = walks.y_increment_pmf if cfg["kind"] == "upper" else walks.z_increment_pmf
    spec = build(model, None, cfg["n"], cfg["q"], cfg["rho"])
    lines = [
        f"kind = {spec.kind}",
        f"n = {spec.n}",
        f"q = {spec.q!r}",
        f"steps = {spec.steps}",
        f"n_q = {spec.n_q!r}",
        f"mean_increment = {spec.mean()}",
        f"second_moment = {spec.second_moment()}",
        f"support = {min(spec.increments)}..{max(spec.increments)}",
    ]
    if cfg["trials"]:
        est = walks.estimate_survival(spec, cfg["trials"], cfg["seed"])
        lines.append(
            f"survival p_hat = {est.p_hat!r}"
            f"  ci = [{est.ci[0]!r}, {est.ci[1]!r}]"
            f"  n13_scaled = {est.n13_scaled!r}  trials = {est.trials}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    if cfg["out"]:
        with open(cfg["out"], "w") as handle:
            handle.write(spec.table())
    return 0


def _cmd_meander(cfg):
    if cfg["samples"] < 1:
        raise ConfigError("--samples must be at least 1")
    rng = np.random.default_rng(cfg["seed"])
    sample = meander_sample(rng, cfg["samples"])
    text = (
        f"samples = {cfg['samples']}\n"
        f"mean = {float(sample.mean())!r} (limit {math.sqrt(math.pi / 2)!r})\n"
        f"ks_distance = {ks_distance(sample, meander_cdf)!r}\n"
    )
    sys.stdout.write(text)
    if cfg["out"]:
        with open(cfg["out"], "w") as handle:
            for value in sample:
                handle.write(f"{value!r}\n")
    return 0


def _cmd_f1(cfg):
    if cfg["x"] < 0:
        raise ConfigError("--x must be non-negative")
    if cfg["q"] <= 0:
        raise ConfigError("--q must be positive")
    model = _load_model(cfg)
    constants = limit_constants(model, cfg["rho"], zero_count=cfg["zeros"])
    value = f1_series(cfg["x"], cfg["q"], constants, tol=cfg["tol"])
    text = (
        f"x = {cfg['x']!r}\n"
        f"q = {cfg['q']!r}\n"
        f"f1 = {value!r}\n"
        f"c_f1lim = {constants.c_f1lim!r}\n"
        f"c_main = {constants.c_main!r}\n"
    )
    _emit(text, cfg["out"])
    return 0


def _stage_dict(report):
    out = {}
    for key, value in vars(report).items():
        if isinstance(value, np.ndarray):
            continue
        if isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def _cmd_stages(cfg):
    model = _load_model(cfg)
    plan = _make_plan(cfg, model, (cfg["n"],))
    wanted = ("1", "2", "3") if cfg["stage"] == "all" else (cfg["stage"],)
    reports = {}
    lines = []
    if "1" in wanted:
        rep = stage1_report(plan, progress=True)
        reports["stage1"] = _stage_dict(rep)
        lines.append(
            f"stage1: survivors = {rep.survivors}/{rep.trials}"
            f"  window_fraction = {rep.window_fraction!r}"
            f"  ks_to_meander = {rep.ks_to_meander!r}"
            f"  endpoint_mean = {rep.endpoint_mean!r}"
        )
    if "2" in wanted:
        rep = stage2_report(plan, progress=True)
        reports["stage2"] = _stage_dict(rep)
        lines.append(
            f"stage2: survivors = {rep.survivors}/{rep.trials}"
            f"  takeoff_fraction = {rep.takeoff_fraction!r}"
        )
        for s, m, pm, v, pv in zip(
            rep.s_grid,
            rep.mean_increments,
            rep.predicted_means,
            rep.var_increments,
            rep.predicted_vars,
        ):
            lines.append(
                f"  s = {s!r}: mean = {m!r} (predicted {pm!r})"
                f"  var = {v!r} (predicted {pv!r})"
            )
    if "3" in wanted:
        rep = stage3_report(plan, progress=True)
        reports["stage3"] = _stage_dict(rep)
        lines.append(
            f"stage3: takeoff_trials = {rep.takeoff_trials}/{rep.trials}"
            f"  outbreak_fraction = {rep.outbreak_fraction!r}"
            f"  band_fraction = {rep.band_fraction!r}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    if cfg["out"]:
        with open(cfg["out"], "w") as handle:
            json.dump(reports, handle, indent=2, sort_keys=True)
            handle.write("\n")
    return 0


def _cmd_compare(cfg):
    model = _load_model(cfg)
    plan = _make_plan(cfg, model, (cfg["n"],))
    result = compare_final_sizes(plan, progress=True)
    lines = [
        f"n = {result.n}  trials = {result.trials}",
        f"mean_final ab = {result.means['ab']!r}",
        f"mean_final evosi = {result.means['evosi']!r}",
        f"mean_final avosi = {result.means['avosi']!r}",
        f"rank p (ab below evosi) = {result.p_ab_below_evo!r}",
        f"rank p (evosi below avosi) = {result.p_evo_below_avo!r}",
    ]
    text = "\n".join(lines) + "\n"
    _emit(text, cfg["out"])
    return 0


HANDLERS = {
    "constants": _cmd_constants,
    "audit": _cmd_audit,
    "simulate": _cmd_simulate,
    "outbreak": _cmd_outbreak,
    "scaling": _cmd_scaling,
    "walks": _cmd_walks,
    "meander": _cmd_meander,
    "f1": _cmd_f1,
    "stages": _cmd_stages,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        cfg = _resolve(ns)
    except ConfigError as exc:
        print(f"evosi: config error: {exc}", file=sys.stderr)
        return 1
    try:
        return HANDLERS[ns.command](cfg)
    except ConfigError as exc:
        print(f"evosi: config error: {exc}", file=sys.stderr)
        return 1
    except EvosiError as exc:
        print(f"evosi: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"evosi: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
