"""Command line driver: ``kosolve {solve,classify,verify,sweep} --config run.json``.

Exit codes: 0 success, 1 configuration or validation error, 2 the
iteration did not converge, 3 blow-up (iterate overflow), 4 a verification
tolerance was missed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import conditions as cond
from .conditions import Status
from .errors import ConfigError, IterateOverflow, KOError, NonConvergence
from .model import ProblemSpec, validate
from .operator import derivatives, kernels
from .oracle import flux_mismatch, ivp_shoot, relative_sup_distance, residual_ode
from .quadrature import RadialGrid
from .solver import solve_fixed_point

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_OVERFLOW, EXIT_VERIFY = 0, 1, 2, 3, 4

PLATEAU_TOL = 1e-3
ORACLE_TOL = 1e-4
FLUX_TOL = 1e-4
SUMMARY_LARGE = "large solutions indicated"
SUMMARY_BOUNDED = "bounded solutions indicated"
SUMMARY_NO_KO = "existence machinery inapplicable (KO fails)"
SUMMARY_OPEN = "no regime indicated (inconclusive verdicts)"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class GridConfig:
    R_max: float = 2.0
    M: int = 2000
    gamma: float = 2.0


@dataclass
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 200


@dataclass
class ConditionsConfig:
    epsilons: list = field(default_factory=lambda: list(cond.DEFAULT_EPSILONS))
    horizons: list = field(default_factory=lambda: list(cond.DEFAULT_HORIZONS))
    q: float = 2.0


@dataclass
class OracleConfig:
    steps: int = 100_000


@dataclass
class OutputConfig:
    directory: str = "kosolve_out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class SweepConfig:
    axes: dict = field(default_factory=dict)


PROBLEM_KEYS = ("p", "N", "b", "a1", "a2", "h1", "h2", "f1", "f2")
SHORTHANDS = {"a": ("a1", "a2"), "h": ("h1", "h2"), "f": ("f1", "f2")}


@dataclass
class RunConfig:
    problem: dict
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    conditions: ConditionsConfig = field(default_factory=ConditionsConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig | None = None

    def spec(self, overrides=None):
        return build_problem(self.problem, overrides)

    def radial_grid(self):
        g = self.grid
        return RadialGrid.graded(g.R_max, g.M, g.gamma)


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _section(cls, data, name):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(unknown)}")
    obj = cls(**data)
    for key, f in known.items():
        value = getattr(obj, key)
        if f.type == "int" and not (isinstance(value, int) and not isinstance(value, bool)):
            raise ConfigError(f"{name}.{key} must be an integer")
        if f.type == "float":
            if not _is_number(value):
                raise ConfigError(f"{name}.{key} must be a number")
            setattr(obj, key, float(value))
        if f.type == "str" and not isinstance(value, str):
            raise ConfigError(f"{name}.{key} must be a string")
    return obj


def _number_list(values, name, allow_empty=False):
    if not isinstance(values, list) or not all(_is_number(v) for v in values):
        raise ConfigError(f"{name} must be a list of numbers")
    if not values and not allow_empty:
        raise ConfigError(f"{name} must not be empty")
    return [float(v) for v in values]


def parse_config(data):
    """Build a RunConfig from a decoded JSON object; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("the configuration must be a JSON object")
    allowed = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    if "problem" not in data:
        raise ConfigError("missing 'problem' section")
    problem = data["problem"]
    if not isinstance(problem, dict):
        raise ConfigError("section 'problem' must be an object")
    unknown = sorted(set(problem) - set(PROBLEM_KEYS) - set(SHORTHANDS))
    if unknown:
        raise ConfigError(f"unknown key(s) in 'problem': {', '.join(unknown)}")
    for key in ("p", "N", "b"):
        if key not in problem:
            raise ConfigError(f"problem.{key} is required")
        if not _is_number(problem[key]):
            raise ConfigError(f"problem.{key} must be a number")
    for key, value in problem.items():
        if key not in ("p", "N", "b") and not isinstance(value, (str, int, float)):
            raise ConfigError(f"problem.{key} must be an expression string")
    cfg = RunConfig(problem=dict(problem))
    cfg.grid = _section(GridConfig, data.get("grid", {}), "grid")
    cfg.solver = _section(SolverConfig, data.get("solver", {}), "solver")
    cfg.conditions = _section(ConditionsConfig, data.get("conditions", {}), "conditions")
    cfg.conditions.epsilons = _number_list(cfg.conditions.epsilons, "conditions.epsilons")
    cfg.conditions.horizons = _number_list(cfg.conditions.horizons, "conditions.horizons")
    cfg.oracle = _section(OracleConfig, data.get("oracle", {}), "oracle")
    cfg.output = _section(OutputConfig, data.get("output", {}), "output")
    formats = cfg.output.formats
    if not isinstance(formats, list) or not set(formats) <= {"csv", "json"}:
        raise ConfigError("output.formats must be a subset of ['csv', 'json']")
    if "sweep" in data:
        cfg.sweep = _section(SweepConfig, data["sweep"], "sweep")
        if not isinstance(cfg.sweep.axes, dict):
            raise ConfigError("sweep.axes must be an object")
        for name, values in cfg.sweep.axes.items():
            if not isinstance(values, list):
                raise ConfigError(f"sweep axis {name!r} must be a list")
    return cfg


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(data)


def build_problem(problem, overrides=None):
    """ProblemSpec from a problem section; ``overrides`` may set fields,
    shorthands (a, h, f for both components) or ``{name}`` template parameters."""
    values = dict(problem)
    params = {}
    for key, val in (overrides or {}).items():
        if key in PROBLEM_KEYS or key in SHORTHANDS:
            values[key] = val
        else:
            params[key] = val
    fields_ = {}
    for key in PROBLEM_KEYS:
        if key in values:
            fields_[key] = values[key]
    for short, (k1, k2) in SHORTHANDS.items():
        if short in values:
            fields_[k1] = fields_[k2] = values[short]
    for key in ("a1", "a2", "h1", "h2", "f1", "f2"):
        if key in fields_:
            text = str(fields_[key])
            for name, val in params.items():
                text = text.replace("{" + name + "}", _format_value(val))
            fields_[key] = text
    N = fields_["N"]
    if isinstance(N, float) and N.is_integer():
        fields_["N"] = int(N)
    return ProblemSpec.from_strings(**fields_)


def _format_value(val):
    if isinstance(val, float) and val.is_integer():
        return str(int(val))
    return str(val)


# ---------------------------------------------------------------------------
# artifacts


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Status):
        return obj.value
    return obj


def write_json(path, payload):
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n")


def write_solution_csv(path, spec, prof):
    K1, K2 = kernels(spec, prof)
    du1, du2 = derivatives(spec, K1), derivatives(spec, K2)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "u1", "u2", "du1", "du2"])
        for row in zip(prof.r, prof.u1, prof.u2, du1, du2):
            w.writerow([repr(float(x)) for x in row])


class Emitter:
    def __init__(self, cfg, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.formats = set(cfg.output.formats)

    def json(self, name, payload):
        if "json" in self.formats:
            write_json(self.dir / name, payload)

    def csv_enabled(self):
        return "csv" in self.formats


# ---------------------------------------------------------------------------
# subcommands


def run_solve(cfg, spec, emit):
    """Solve, write solution.csv and report.json; return (exit code, SolveReport)."""
    grid = cfg.radial_grid()
    report = solve_fixed_point(spec, grid, cfg.solver.tol, cfg.solver.max_iter, raise_on_failure=False)
    payload = {"problem": spec.as_strings(), "solve": report.to_dict()}
    if len(report.final.grid) >= 5:
        res = residual_ode(spec, report.final)
        report.residual_norm = res.integral_residual
        payload["solve"]["residual_norm"] = res.integral_residual
        payload["residual"] = res.to_dict()
    if report.blowup_radius is not None:
        code, status = EXIT_OVERFLOW, "overflow"
    elif not report.converged:
        code, status = EXIT_NONCONV, "nonconvergence"
    else:
        code, status = EXIT_OK, "converged"
    payload["status"] = status
    if emit.csv_enabled():
        write_solution_csv(emit.dir / "solution.csv", spec, report.final)
    emit.json("report.json", payload)
    return code, report


def summarize(ko, bounded5, large12):
    if ko.status is Status.CONVERGENT:
        return SUMMARY_NO_KO
    if cond.satisfied_for_some_epsilon(bounded5):
        return SUMMARY_BOUNDED
    if all(v.status is Status.DIVERGENT for v in large12.values()):
        return SUMMARY_LARGE
    return SUMMARY_OPEN


def classify(cfg, spec):
    c = cfg.conditions
    ko = cond.check_KO(spec, c.q, horizons=c.horizons)
    bounded5 = cond.check_bounded5(spec, c.epsilons, c.horizons)
    large12 = cond.check_large12(spec, c.horizons)
    verdicts = {
        "KO": ko,
        "KO1": cond.check_KO1(spec, c.horizons),
        "LZZ": cond.check_LZZ(spec, c.horizons),
        "Bounded5": bounded5,
        "Necessary13": cond.check_necessary13(spec, c.epsilons, c.horizons),
        "Large12": large12,
        "NoBounded5b": cond.check_nonexistence5b(spec, c.horizons),
    }
    summary = summarize(ko, bounded5, large12)
    return verdicts, summary


def run_classify(cfg, spec, emit):
    verdicts, summary = classify(cfg, spec)
    out = {}
    for name, v in verdicts.items():
        if isinstance(v, dict):
            out[name] = {str(k): x.to_dict() for k, x in v.items()}
        else:
            out[name] = v.to_dict()
    validation = validate(spec)
    monotone = cond.check_weight_monotone(spec, 0.0, cfg.radial_grid())
    out["Bounded5_satisfied_for_some_epsilon"] = cond.satisfied_for_some_epsilon(verdicts["Bounded5"])
    out["Necessary13_holds_for_all_tested_epsilon"] = cond.holds_for_all_tested_epsilon(verdicts["Necessary13"])
    out["preconditions"] = {"hypotheses": validation.to_dict(), "weight_monotone": monotone.to_dict()}
    out["summary"] = summary
    emit.json("verdicts.json", {"problem": spec.as_strings(), "verdicts": out})
    return EXIT_OK, verdicts, summary


def _richardson_ratio(values):
    e1 = abs(values[0] - values[1])
    e2 = abs(values[1] - values[2])
    return e1 / e2 if e2 > 0 else math.inf


def run_verify(cfg, spec, emit):
    rows = []

    def row(name, value, limit, passed, note=""):
        rows.append({"check": name, "value": value, "limit": limit, "pass": bool(passed), "note": note})

    grid = cfg.radial_grid()
    try:
        rep = solve_fixed_point(spec, grid, cfg.solver.tol, cfg.solver.max_iter)
    except (NonConvergence, IterateOverflow) as exc:
        row("solver", None, None, False, str(exc))
        emit.json("verify.json", {"problem": spec.as_strings(), "rows": rows, "all_pass": False})
        return EXIT_OVERFLOW if isinstance(exc, IterateOverflow) else EXIT_NONCONV
    prof = rep.final
    try:
        ref = ivp_shoot(spec, grid.R_max, cfg.oracle.steps)
        dist = relative_sup_distance(prof, ref)
        row("oracle_vs_solver_rel_sup", dist, ORACLE_TOL, dist <= ORACLE_TOL)
    except IterateOverflow as exc:
        row("oracle_vs_solver_rel_sup", None, ORACLE_TOL, False, str(exc))
    res = residual_ode(spec, prof)
    row("integral_residual", res.integral_residual, 10 * cfg.solver.tol,
        res.integral_residual <= 10 * cfg.solver.tol)
    flux = flux_mismatch(spec, prof)
    row("flux_consistency_rel", flux, FLUX_TOL, flux <= FLUX_TOL)

    # grid doubling of the solver, Richardson-style at R_max
    g = cfg.grid
    ends = []
    for k in range(3):
        gk = RadialGrid.graded(g.R_max, g.M * 2**k, g.gamma)
        ends.append(solve_fixed_point(spec, gk, cfg.solver.tol, cfg.solver.max_iter).final.u1[-1])
    ratio = _richardson_ratio(ends)
    row("solver_grid_doubling_ratio", ratio, [3.0, 5.0], 3.0 <= ratio <= 5.0)

    # step halving of the oracle
    ends = [ivp_shoot(spec, g.R_max, s).u1[-1] for s in (250, 500, 1000)]
    ratio = _richardson_ratio(ends)
    row("oracle_step_halving_ratio", ratio, [12.0, 20.0], 12.0 <= ratio <= 20.0)

    ok = all(r["pass"] for r in rows)
    emit.json("verify.json", {"problem": spec.as_strings(), "rows": rows, "all_pass": ok})
    return EXIT_OK if ok else EXIT_VERIFY


def regime_verdict(bounded5, large12):
    if cond.satisfied_for_some_epsilon(bounded5):
        return "bounded"
    if all(v.status is Status.DIVERGENT for v in large12.values()):
        return "large"
    return "inconclusive"


def empirical_label(report):
    if report.blowup_radius is not None:
        return "large-looking"
    if not report.converged:
        return "undetermined"
    prof = report.final
    total = prof.total()
    half = np.interp(0.5 * prof.grid.R_max, prof.r, total)
    return "bounded-looking" if total[-1] / half < 1 + PLATEAU_TOL else "large-looking"


def plateau_ratio(report):
    prof = report.final
    if len(prof.grid) < 2:
        return math.nan
    total = prof.total()
    return float(total[-1] / np.interp(0.5 * prof.grid.R_max, prof.r, total))


def run_sweep(cfg, out_dir):
    if cfg.sweep is None or not cfg.sweep.axes:
        raise ConfigError("sweep needs a non-empty 'sweep.axes' object")
    names = list(cfg.sweep.axes)
    for name in names:
        if not cfg.sweep.axes[name]:
            raise ConfigError(f"sweep axis {name!r} is empty")
    cells = list(itertools.product(*(cfg.sweep.axes[n] for n in names)))
    specs = [cfg.spec(dict(zip(names, cell))) for cell in cells]

    eps = cfg.conditions.epsilons
    header = names + ["KO", "LZZ"] + [f"Bounded5_eps{e:g}" for e in eps]
    header += ["Large12_j1", "Large12_j2", "NoBounded5b_j1", "NoBounded5b_j2", "summary",
               "regime_verdict", "solve_status", "iterations", "blowup_radius",
               "u1_Rmax", "u2_Rmax", "plateau_ratio", "empirical_label", "agrees"]
    rows = []
    for index, (cell, spec) in enumerate(zip(cells, specs)):
        emit = Emitter(cfg, Path(out_dir) / f"cell_{index:03d}")
        code, report = run_solve(cfg, spec, emit)
        _, verdicts, summary = run_classify(cfg, spec, emit)
        verdict = regime_verdict(verdicts["Bounded5"], verdicts["Large12"])
        label = empirical_label(report)
        agrees = "n/a" if verdict == "inconclusive" or label == "undetermined" else \
            str(label.startswith(verdict)).lower()
        status = {EXIT_OK: "converged", EXIT_NONCONV: "nonconvergence", EXIT_OVERFLOW: "overflow"}[code]
        fin = report.final
        rows.append(
            [str(v) for v in cell]
            + [verdicts["KO"].status.value, verdicts["LZZ"].status.value]
            + [verdicts["Bounded5"][float(e)].status.value for e in eps]
            + [verdicts["Large12"][j].status.value for j in (1, 2)]
            + [verdicts["NoBounded5b"][j].status.value for j in (1, 2)]
            + [summary, verdict, status, str(report.iterations),
               "" if report.blowup_radius is None else repr(report.blowup_radius),
               repr(float(fin.u1[-1])), repr(float(fin.u2[-1])), repr(plateau_ratio(report)), label, agrees]
        )
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    with (path / "regimes.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="kosolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve", "run the fixed-point solver and write solution.csv / report.json"),
        ("classify", "evaluate the integral conditions and write verdicts.json"),
        ("verify", "compare solver, oracle and residuals; write verify.json"),
        ("sweep", "Cartesian parameter sweep; write regimes.csv"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.directory)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out_dir = args.out or cfg.output.directory
        if args.command == "sweep":
            return run_sweep(cfg, out_dir)
        spec = cfg.spec()
        emit = Emitter(cfg, out_dir)
        if args.command == "solve":
            code, report = run_solve(cfg, spec, emit)
            if code == EXIT_OVERFLOW:
                print(f"kosolve: blow-up near r = {report.blowup_radius:.6g}", file=sys.stderr)
            elif code == EXIT_NONCONV:
                print("kosolve: iteration did not converge", file=sys.stderr)
            return code
        if args.command == "classify":
            code, _, summary = run_classify(cfg, spec, emit)
            print(summary)
            return code
        return run_verify(cfg, spec, emit)
    except KOError as exc:
        print(f"kosolve: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
