"""Batch command-line front end.

A run is described by a TOML document::

    command = "scan"

    [model]
    alpha = [1.0]
    mu = [[1.0]]
    h = [0.0]

    [[scan.axis]]
    param = "mu"
    index = [0, 0]
    start = 0.9
    stop = 1.1
    num = 201

and produces ``summary.csv`` (fixed columns, 17 significant digits),
``report.jsonl`` (or ``report.csv``) and ``manifest.json`` in the output
directory. Exit status is 0 on success, 2 on invalid input and 3 when a
solver failed to converge somewhere in the run.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .criticality import fit_beta, fit_delta, fit_lambda_line, label_phase, log_window, phase_scan
from .errors import NonConvergence, NotPositiveSemidefinite, ValidationError
from .model import ModelParams, build_effective, spectral_radius
from .simulate import (
    concentration_checks,
    make_lattice,
    nishimori_checks,
    realization_magnetizations,
    thermodynamic_convergence,
)
from .stats import jackknife
from .variational import MaximizeConfig, maximize

log = logging.getLogger("nmsk")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3

COMMANDS = ("solve", "scan", "exponents", "mc", "nishimori", "converge")
FORMATS = ("csv", "jsonl")
EXPONENTS = ("beta", "delta", "lambda_line")

# default fit windows, in the control variable (mu - 1 or h)
_DEFAULT_WINDOWS = {"beta": (1e-4, 1e-2), "delta": (1e-6, 1e-3), "lambda_line": (1e-5, 1e-3)}

_SOLVER_KEYS = {f for f in MaximizeConfig.__dataclass_fields__}
_MC_DEFAULTS = {
    "N": 10,
    "N_list": [64, 128, 256, 512],
    "exact_N_list": [],
    "sweeps": 2000,
    "therm": 200,
    "n_disorder": 100,
    "master_seed": 0,
    "mode": "exact",
    "field_variance_scale": 1.0,
}
_EXP_DEFAULTS = {"name": "beta", "window": None, "points_per_decade": 8, "lambda": 1.0}
_OUTPUT_DEFAULTS = {"directory": "nmsk-out", "format": "jsonl"}
_AXIS_KEYS = {"param", "index", "start", "stop", "num", "step", "spacing", "values"}
_TOP_KEYS = {"command", "model", "solver", "scan", "mc", "exponents", "output"}


@dataclass
class ScanAxis:
    param: str
    index: tuple
    values: np.ndarray

    def to_dict(self) -> dict:
        return {"param": self.param, "index": list(self.index), "values": self.values.tolist()}


@dataclass
class RunConfig:
    command: str
    model: ModelParams
    solver: MaximizeConfig = field(default_factory=MaximizeConfig)
    scan: list = field(default_factory=list)
    mc: dict = field(default_factory=lambda: dict(_MC_DEFAULTS))
    exponents: dict = field(default_factory=lambda: dict(_EXP_DEFAULTS))
    output: dict = field(default_factory=lambda: dict(_OUTPUT_DEFAULTS))

    def to_dict(self) -> dict:
        """Fully resolved configuration; feeding it back to ``parse_config`` gives the same run."""
        m = self.model.to_dict()
        exp = dict(self.exponents)
        if exp["window"] is None:
            exp.pop("window")
        else:
            exp["window"] = list(exp["window"])
        return {
            "command": self.command,
            "model": {"alpha": m["alpha"], "mu": m["mu"], "h": m["h"]},
            "solver": {k: getattr(self.solver, k) for k in sorted(_SOLVER_KEYS)},
            "scan": {"axis": [a.to_dict() for a in self.scan]},
            "mc": dict(self.mc),
            "exponents": exp,
            "output": dict(self.output),
        }


# --- parsing ---------------------------------------------------------------------

def _check_keys(section: str, got: dict, allowed) -> None:
    extra = sorted(set(got) - set(allowed))
    if extra:
        name = f"{section}.{extra[0]}" if section else extra[0]
        raise ValidationError(name, "unknown key")


def _grid(spec: dict, where: str) -> np.ndarray:
    if "values" in spec:
        vals = np.asarray(spec["values"], dtype=float).reshape(-1)
    else:
        for k in ("start", "stop"):
            if k not in spec:
                raise ValidationError(f"{where}.{k}", "missing (or give 'values')")
        lo, hi = float(spec["start"]), float(spec["stop"])
        spacing = spec.get("spacing", "linear")
        if "num" in spec:
            num = int(spec["num"])
        elif "step" in spec:
            step = float(spec["step"])
            if not step > 0:
                raise ValidationError(f"{where}.step", "must be positive")
            num = int(round((hi - lo) / step)) + 1
        else:
            raise ValidationError(f"{where}.num", "missing (or give 'step')")
        if num < 1:
            raise ValidationError(f"{where}.num", "grid must be nonempty")
        if spacing == "linear":
            vals = np.linspace(lo, hi, num)
        elif spacing == "log":
            if not (lo > 0 and hi > 0):
                raise ValidationError(f"{where}.start", "log spacing needs positive endpoints")
            vals = np.logspace(math.log10(lo), math.log10(hi), num)
        else:
            raise ValidationError(f"{where}.spacing", "must be 'linear' or 'log'")
        # decimal grids land on their nominal values (1.001, not 1.0010000000000001)
        vals = np.array([float(f"{v:.15g}") for v in vals])
    if vals.size == 0:
        raise ValidationError(where, "grid must be nonempty")
    if not np.all(np.isfinite(vals)):
        raise ValidationError(where, "grid values must be finite")
    return vals


def _parse_axis(spec: dict, i: int, K: int) -> ScanAxis:
    where = f"scan.axis[{i}]"
    if not isinstance(spec, dict):
        raise ValidationError(where, "must be a table")
    _check_keys(where, spec, _AXIS_KEYS)
    param = spec.get("param")
    if param not in ("alpha", "mu", "h"):
        raise ValidationError(f"{where}.param", "must be one of alpha, mu, h")
    index = tuple(int(j) for j in np.atleast_1d(spec.get("index", [0, 0] if param == "mu" else [0])))
    want = 2 if param == "mu" else 1
    if len(index) != want or any(not 0 <= j < K for j in index):
        raise ValidationError(f"{where}.index", f"{param} needs {want} indices in [0, {K})")
    if param == "alpha" and K < 2:
        raise ValidationError(f"{where}.param", "alpha can only be scanned when K >= 2")
    return ScanAxis(param, index, _grid(spec, where))


def _as_table(doc: dict, key: str) -> dict:
    val = doc.get(key, {})
    if not isinstance(val, dict):
        raise ValidationError(key, "must be a table")
    return val


def config_from_dict(doc: dict) -> RunConfig:
    _check_keys("", doc, _TOP_KEYS)
    command = doc.get("command")
    if command not in COMMANDS:
        raise ValidationError("command", f"must be one of {', '.join(COMMANDS)}")

    model = _as_table(doc, "model")
    _check_keys("model", model, {"alpha", "mu", "h", "K"})
    for k in ("alpha", "mu", "h"):
        if k not in model:
            raise ValidationError(f"model.{k}", "missing")
    try:
        params = ModelParams(alpha=model["alpha"], mu=model["mu"], h=model["h"])
    except ValidationError as exc:
        raise ValidationError(f"model.{exc.field}", str(exc).split(": ", 1)[1]) from None
    except (TypeError, ValueError) as exc:
        raise ValidationError("model", f"malformed arrays ({exc})") from None
    if "K" in model and int(model["K"]) != params.K:
        raise ValidationError("model.K", f"K={model['K']} but alpha has {params.K} entries")

    solver = _as_table(doc, "solver")
    _check_keys("solver", solver, _SOLVER_KEYS)
    try:
        solver_cfg = MaximizeConfig(**solver)
    except TypeError as exc:
        raise ValidationError("solver", str(exc)) from None
    for k in ("tol", "kkt_tol", "boundary_tol"):
        if not getattr(solver_cfg, k) > 0:
            raise ValidationError(f"solver.{k}", "must be positive")
    if not 0 < solver_cfg.damping <= 1:
        raise ValidationError("solver.damping", "must lie in (0, 1]")

    scan = _as_table(doc, "scan")
    _check_keys("scan", scan, {"axis"})
    raw_axes = scan.get("axis", [])
    if isinstance(raw_axes, dict):
        raw_axes = [raw_axes]
    axes = [_parse_axis(a, i, params.K) for i, a in enumerate(raw_axes)]
    if command == "scan" and not axes:
        raise ValidationError("scan.axis", "scan needs at least one axis")

    mc = _as_table(doc, "mc")
    _check_keys("mc", mc, _MC_DEFAULTS)
    mc_cfg = {**_MC_DEFAULTS, **mc}
    for k in ("N", "sweeps", "n_disorder"):
        if int(mc_cfg[k]) < 1:
            raise ValidationError(f"mc.{k}", "must be positive")
    if mc_cfg["therm"] != "auto" and not 0 <= int(mc_cfg["therm"]) < int(mc_cfg["sweeps"]):
        raise ValidationError("mc.therm", "need 0 <= therm < sweeps, or \"auto\"")
    if mc_cfg["mode"] not in ("exact", "mc"):
        raise ValidationError("mc.mode", "must be 'exact' or 'mc'")
    if command == "converge" and not mc_cfg["N_list"]:
        raise ValidationError("mc.N_list", "must be nonempty")
    if not float(mc_cfg["field_variance_scale"]) > 0:
        raise ValidationError("mc.field_variance_scale", "must be positive")
    mc_cfg["N_list"] = [int(n) for n in mc_cfg["N_list"]]
    mc_cfg["exact_N_list"] = [int(n) for n in mc_cfg["exact_N_list"]]

    exp = _as_table(doc, "exponents")
    _check_keys("exponents", exp, _EXP_DEFAULTS)
    exp_cfg = {**_EXP_DEFAULTS, **exp}
    if exp_cfg["name"] not in EXPONENTS:
        raise ValidationError("exponents.name", f"must be one of {', '.join(EXPONENTS)}")
    if exp_cfg["window"] is not None:
        w = tuple(float(v) for v in exp_cfg["window"])
        if len(w) != 2 or not 0 < w[0] < w[1]:
            raise ValidationError("exponents.window", "need [lo, hi] with 0 < lo < hi")
        exp_cfg["window"] = w
    if int(exp_cfg["points_per_decade"]) < 8:
        raise ValidationError("exponents.points_per_decade", "need at least 8 points per decade")
    if not float(exp_cfg["lambda"]) > 0:
        raise ValidationError("exponents.lambda", "lambda must be positive")

    out = _as_table(doc, "output")
    _check_keys("output", out, _OUTPUT_DEFAULTS)
    out_cfg = {**_OUTPUT_DEFAULTS, **out}
    if out_cfg["format"] not in FORMATS:
        raise ValidationError("output.format", "must be 'csv' or 'jsonl'")

    return RunConfig(command, params, solver_cfg, axes, mc_cfg, exp_cfg, out_cfg)


def parse_config(text: str) -> RunConfig:
    """Parse a TOML run description, or a manifest written by a previous run."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {exc.lineno}", f"invalid JSON: {exc.msg}") from None
        doc = doc.get("config", doc)
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            msg = str(exc)
            if "line" not in msg:
                msg += f" (line {len(text.splitlines())})"
            raise ValidationError("config", f"parse error: {msg}") from None
    return config_from_dict(doc)


# --- output helpers ----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.16e" % v
    return "" if v is None else str(v)


def write_table(path: Path, columns: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    path.write_text(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple, np.ndarray)):
            out[key] = json.dumps(_jsonable(v))
        else:
            out[key] = v
    return out


def write_records(path_stem: Path, fmt: str, records: list[dict]) -> Path:
    if fmt == "jsonl":
        path = path_stem.with_suffix(".jsonl")
        with path.open("w") as fh:
            for rec in records:
                fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")
        return path
    path = path_stem.with_suffix(".csv")
    flat = [_flatten(r) for r in records]
    cols = sorted({k for r in flat for k in r})
    write_table(path, cols, flat)
    return path


@dataclass
class RunResult:
    summary_columns: list
    summary_rows: list
    records: list
    status: int = EXIT_OK
    message: str = ""


# --- commands --------------------------------------------------------------------

def _therm(m: dict):
    return None if m["therm"] == "auto" else int(m["therm"])


def _solve_row(params: ModelParams, rep) -> dict:
    row = {f"x_star_{r}": float(v) for r, v in enumerate(rep.x_star)}
    row.update(pressure=rep.pressure, rho=rep.rho, phase=label_phase(rep.x_star), grad_norm=rep.grad_norm,
               kkt_ok=rep.kkt_ok, converged=rep.converged, n_local_maxima=len(rep.all_local_maxima))
    return row


def _solve_columns(K: int) -> list[str]:
    return [f"x_star_{r}" for r in range(K)] + ["pressure", "rho", "phase", "grad_norm", "kkt_ok",
                                                  "converged", "n_local_maxima"]


def cmd_solve(cfg: RunConfig, workers: int) -> RunResult:
    params = cfg.model
    cols = _solve_columns(params.K)
    try:
        rep = maximize(params, None, cfg.solver)
    except NonConvergence as exc:
        rec = {"params": params.to_dict(), "report": exc.report.to_dict() if exc.report else None,
               "error": str(exc)}
        rows = [_solve_row(params, exc.report)] if exc.report else []
        return RunResult(cols, rows, [rec], EXIT_NONCONVERGENCE, str(exc))
    return RunResult(cols, [_solve_row(params, rep)], [{"params": params.to_dict(), "report": rep.to_dict()}])


def _apply(params: ModelParams, axis: ScanAxis, value: float) -> ModelParams:
    if axis.param == "mu":
        mu = np.array(params.mu)
        i, j = axis.index
        mu[i, j] = mu[j, i] = value
        return params.with_(mu=mu)
    if axis.param == "h":
        h = np.array(params.h)
        h[axis.index[0]] = value
        return params.with_(h=h)
    # alpha: set one entry and rescale the others to keep the sum at one
    a = np.array(params.alpha)
    i = axis.index[0]
    if not 0 < value < 1:
        raise ValidationError("scan.alpha", f"alpha value {value} outside (0, 1)")
    rest = np.delete(a, i)
    rest = rest / rest.sum() * (1.0 - value)
    a = np.insert(rest, i, value)
    a[-1] = 1.0 - (a.sum() - a[-1])
    return params.with_(alpha=a)


def scan_grid(cfg: RunConfig) -> tuple[list, list]:
    """Cartesian product of the scan axes as (axis values, ModelParams) in row-major order."""
    values, grid = [], []
    for combo in itertools.product(*[a.values for a in cfg.scan]):
        p = cfg.model
        for axis, v in zip(cfg.scan, combo):
            p = _apply(p, axis, float(v))
        values.append(combo)
        grid.append(p)
    return values, grid


def _scan_one(args):
    params, solver = args
    return phase_scan([params], solver)[0]


def _axis_name(a: ScanAxis) -> str:
    return f"{a.param}_{'_'.join(str(i) for i in a.index)}"


def cmd_scan(cfg: RunConfig, workers: int) -> RunResult:
    from .simulate import parallel_map

    K = cfg.model.K
    values, grid = scan_grid(cfg)
    points = parallel_map(_scan_one, [(p, cfg.solver) for p in grid], workers)
    names = [_axis_name(a) for a in cfg.scan]
    cols = ["index"] + names + ["rho"] + [f"x_star_{r}" for r in range(K)] + ["pressure", "zero_pressure",
                                                                              "phase", "error"]
    rows, records, status = [], [], EXIT_OK
    for i, (combo, pt) in enumerate(zip(values, points)):
        row = {"index": i, "rho": pt.rho, "pressure": pt.pressure, "zero_pressure": pt.zero_pressure,
               "phase": pt.phase_label, "error": pt.error}
        row.update({n: float(v) for n, v in zip(names, combo)})
        if pt.x_star is not None:
            row.update({f"x_star_{r}": float(v) for r, v in enumerate(pt.x_star)})
        rows.append(row)
        records.append({"index": i, **pt.to_dict()})
        if pt.error and pt.error.startswith("NonConvergence"):
            status = EXIT_NONCONVERGENCE
    return RunResult(cols, rows, records, status)


def cmd_exponents(cfg: RunConfig, workers: int) -> RunResult:
    e = cfg.exponents
    name = e["name"]
    lo, hi = e["window"] or _DEFAULT_WINDOWS[name]
    ctrl = log_window(lo, hi, int(e["points_per_decade"]))
    if name == "beta":
        fit = fit_beta(1.0 + ctrl)
    elif name == "delta":
        fit = fit_delta(ctrl)
    else:
        fit = fit_lambda_line(float(e["lambda"]), 1.0 + ctrl)
    cols = ["kind", "control", "xbar", "prefactor_ratio", "slope", "stderr"]
    rows = [{"kind": "point", "control": c, "xbar": x, "prefactor_ratio": r}
            for (c, x), r in zip(fit.points, fit.prefactor_ratios)]
    rows.append({"kind": "fit", "slope": fit.fitted_slope, "stderr": fit.stderr})
    return RunResult(cols, rows, [fit.to_dict()])


def cmd_mc(cfg: RunConfig, workers: int) -> RunResult:
    m, params = cfg.mc, cfg.model
    K = params.K
    seeds, data = realization_magnetizations(params, int(m["N"]), int(m["n_disorder"]), sweeps=int(m["sweeps"]),
                                             therm=_therm(m), master_seed=int(m["master_seed"]),
                                             workers=workers)
    records = [{"realization": k, "seed": int(s), "magnetization": data[k].tolist()}
               for k, s in enumerate(seeds)]
    cols = ["observable", "mean", "stderr", "n_disorder", "n_sweeps", "n_therm"]
    rows = []
    if data.shape[0] >= 2:
        mean, err = jackknife(data)
        for r in range(K):
            rows.append({"observable": f"m_{r}", "mean": float(mean[r]), "stderr": float(err[r]),
                         "n_disorder": data.shape[0], "n_sweeps": int(m["sweeps"]), "n_therm": m["therm"]})
    return RunResult(cols, rows, records)


def cmd_nishimori(cfg: RunConfig, workers: int) -> RunResult:
    m = cfg.mc
    lat = make_lattice(cfg.model, int(m["N"]))
    ests = nishimori_checks(cfg.model, lat, int(m["n_disorder"]), m["mode"], master_seed=int(m["master_seed"]),
                            field_variance_scale=float(m["field_variance_scale"]), sweeps=int(m["sweeps"]),
                            therm=_therm(m), workers=workers)
    cols = ["observable", "mean", "stderr", "z_score", "n_disorder", "n_sweeps", "n_therm"]
    rows = [e.to_dict() for e in ests]
    return RunResult(cols, rows, [dict(r) for r in rows])


def cmd_converge(cfg: RunConfig, workers: int) -> RunResult:
    m = cfg.mc
    try:
        sol = maximize(cfg.model, None, cfg.solver)
    except NonConvergence as exc:
        return RunResult([], [], [{"error": str(exc)}], EXIT_NONCONVERGENCE, str(exc))
    rows = thermodynamic_convergence(cfg.model, m["N_list"], int(m["n_disorder"]), sweeps=int(m["sweeps"]),
                                     therm=_therm(m), master_seed=int(m["master_seed"]),
                                     exact_N_list=m["exact_N_list"], workers=workers, solution=sol)
    if m["exact_N_list"]:
        for c in concentration_checks(cfg.model, m["exact_N_list"], int(m["n_disorder"]),
                                      master_seed=int(m["master_seed"]), workers=workers):
            rows.append({"kind": "pressure_variance", "N": c["N"], "species": -1, "value": c["var_pN"],
                         "stderr": c["var_pN_err"], "limit": c["bound"], "abs_diff": c["bound"] - c["var_pN"]})
    cols = ["kind", "N", "species", "value", "stderr", "limit", "abs_diff"]
    return RunResult(cols, rows, [dict(r) for r in rows])


_DISPATCH = {
    "solve": cmd_solve,
    "scan": cmd_scan,
    "exponents": cmd_exponents,
    "mc": cmd_mc,
    "nishimori": cmd_nishimori,
    "converge": cmd_converge,
}


def run(cfg: RunConfig, workers: int = 1) -> RunResult:
    """Execute one configured command in memory."""
    if cfg.command in ("solve", "converge") and not build_effective(cfg.model).psd_flag:
        raise NotPositiveSemidefinite("effective interaction matrix is indefinite")
    return _DISPATCH[cfg.command](cfg, workers)


def _write_outputs(cfg: RunConfig, result: RunResult | None, out_dir: Path, *, wall: float, status: int,
                   message: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if result is not None:
        write_table(out_dir / "summary.csv", result.summary_columns, result.summary_rows)
        write_records(out_dir / "report", cfg.output["format"], result.records)
    manifest = {
        "config": cfg.to_dict(),
        "version": __version__,
        "master_seed": int(cfg.mc["master_seed"]),
        "solver_seed": int(cfg.solver.seed),
        "wall_time_s": wall,
        "exit_status": status,
        "partial": status != EXIT_OK,
        "message": message,
    }
    (out_dir / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")


def _workers(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("NMSK_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError("NMSK_WORKERS", f"not an integer: {env!r}") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nmsk", description="Multi-species spin glass on the Nishimori line: "
                                "variational solver, phase scans, exponents and finite-N simulation.")
    p.add_argument("config", help="TOML run description, or manifest.json of an earlier run")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="override the config's command")
    p.add_argument("--output-dir", help="output directory (default: config output.directory)")
    p.add_argument("--seed", type=int, help="master seed for disorder and multistart")
    p.add_argument("--workers", type=int, help="worker processes (default: $NMSK_WORKERS or 1)")
    p.add_argument("--format", choices=FORMATS, help="per-record report format")
    p.add_argument("--name", choices=EXPONENTS, help="exponent to fit (exponents command)")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="nmsk: %(message)s")
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text)
        if args.command:
            cfg.command = args.command
        if args.seed is not None:
            cfg.mc["master_seed"] = args.seed
            cfg.solver = MaximizeConfig(**{**cfg.to_dict()["solver"], "seed": args.seed})
        if args.format:
            cfg.output["format"] = args.format
        if args.output_dir:
            cfg.output["directory"] = args.output_dir
        if args.name:
            cfg.exponents["name"] = args.name
        cfg = config_from_dict(cfg.to_dict())
        workers = _workers(args.workers)
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_VALIDATION
    except ValidationError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_VALIDATION

    out_dir = Path(cfg.output["directory"])
    t0 = time.perf_counter()
    result, status, message = None, EXIT_OK, ""
    try:
        result = run(cfg, workers)
        status, message = result.status, result.message
    except (ValidationError, NotPositiveSemidefinite) as exc:
        status, message = EXIT_VALIDATION, f"{type(exc).__name__}: {exc}"
    except NonConvergence as exc:
        status, message = EXIT_NONCONVERGENCE, str(exc)
    wall = time.perf_counter() - t0
    _write_outputs(cfg, result, out_dir, wall=wall, status=status, message=message)
    if status == EXIT_OK:
        log.info("%s: %d summary rows written to %s (%.2f s)", cfg.command, len(result.summary_rows), out_dir, wall)
    else:
        log.error("%s failed (exit %d): %s", cfg.command, status, message)
    return status


if __name__ == "__main__":
    sys.exit(main())
