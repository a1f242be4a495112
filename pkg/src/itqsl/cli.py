"""Command-line front end.

Usage::

    itqsl run scenario.json [--steps N] [--out-dir DIR] [--quiet]
    itqsl sweep scenario.json --param dimension --values 16,64,256 [--out-dir DIR]
    itqsl check scenario.json

Scenario files are single JSON objects; see README.md for the schema.
Exit codes: 0 success, 2 parse/schema error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__
from .analytic_models import (
    GroverParams,
    TwoLevelParams,
    grover_marked_state,
    grover_model,
    grover_runtime,
    grover_runtime_large_n,
    two_level_dispersion_integral,
    two_level_hamiltonian,
    two_level_theta,
)
from .errors import (
    HermiticityError,
    InputError,
    NotHermitian,
    NumericalError,
    ParseError,
    SchemaError,
)
from .ite_engine import TimeGrid, crossing_time, fidelities, propagate_exact
from .qsl_geometry import qsl_report, rate_check, saturation_certificate
from .qstate import basis_state, eig, make_state, normalize, validate_hermitian

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

KINDS = ("two_level", "grover", "custom")
COMMON_FIELDS = {"kind", "horizon", "num_steps", "tolerances", "outputs"}
KIND_REQUIRED = {
    "two_level": {"theta0", "energy"},
    "grover": {"dimension", "e_w", "e_perp"},
    "custom": {"hamiltonian", "initial_state"},
}
KIND_OPTIONAL = {
    "two_level": set(),
    "grover": {"epsilon", "embed"},
    "custom": {"target_state"},
}
DEFAULT_TOLERANCES = {"saturation": 1e-6, "residual": 1e-8, "quadrature": 1e-8}
DEFAULT_OUTPUTS = {"trajectory_csv": "trajectory.csv", "report_json": "report.json"}
DEFAULT_STEPS = 1000
SWEEPABLE = ("theta0", "energy", "dimension", "e_perp", "horizon")
CSV_HEADER = ["t", "log_norm", "theta", "delta_h", "fidelity_target"]
SWEEP_HEADER = ["parameter", "value", "theta_T", "path_length", "slack", "bound_time",
                "saturated", "measured_crossing_time", "error"]
# Theta(T) <= L + QSL_TOL * (1 + L)
QSL_TOL = 1e-8


@dataclass
class ScenarioConfig:
    kind: str
    horizon: float
    num_steps: int
    tolerances: dict[str, float]
    outputs: dict[str, str]
    params: dict[str, Any]

    def echo(self) -> dict[str, Any]:
        out = {
            "kind": self.kind,
            "horizon": self.horizon,
            "num_steps": self.num_steps,
            "tolerances": dict(self.tolerances),
            "outputs": dict(self.outputs),
        }
        out.update(copy.deepcopy(self.params))
        return out


@dataclass
class RunReport:
    data: dict[str, Any]
    trajectory_rows: list[list[float]] = field(default_factory=list, repr=False)
    elapsed: float = 0.0

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _number(field_name: str, value, *, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(field_name, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(field_name, "must be finite")
    if positive and value <= 0:
        raise SchemaError(field_name, f"must be > 0, got {value}")
    return value


def _complex_list(field_name: str, value) -> list[complex]:
    if not isinstance(value, list) or not value:
        raise SchemaError(field_name, "expected a non-empty array of [re, im] pairs")
    out = []
    for i, pair in enumerate(value):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise SchemaError(f"{field_name}[{i}]", "expected an [re, im] pair")
        out.append(complex(_number(f"{field_name}[{i}]", pair[0]), _number(f"{field_name}[{i}]", pair[1])))
    return out


def _state(field_name: str, value):
    try:
        return normalize(make_state(_complex_list(field_name, value)))
    except InputError as exc:
        raise SchemaError(field_name, str(exc)) from exc


def _hamiltonian(value):
    if not isinstance(value, list) or not value:
        raise SchemaError("hamiltonian", "expected a square array of rows")
    rows = [_complex_list(f"hamiltonian[{i}]", row) for i, row in enumerate(value)]
    if any(len(r) != len(rows) for r in rows):
        raise SchemaError("hamiltonian", "matrix must be square")
    try:
        return validate_hermitian(np.array(rows, dtype=np.complex128))
    except NotHermitian as exc:
        raise HermiticityError(exc.max_deviation, exc.tol) from exc
    except InputError as exc:
        raise SchemaError("hamiltonian", str(exc)) from exc


def config_from_dict(raw: Any) -> ScenarioConfig:
    """Validate a decoded scenario object and apply defaults."""
    if not isinstance(raw, dict):
        raise SchemaError("<root>", "scenario must be a JSON object")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise SchemaError("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
    allowed = COMMON_FIELDS | KIND_REQUIRED[kind] | KIND_OPTIONAL[kind]
    extra = sorted(set(raw) - allowed)
    if extra:
        raise SchemaError(extra[0], f"not a valid field for kind {kind!r}")
    missing = sorted(({"horizon"} | KIND_REQUIRED[kind]) - set(raw))
    if missing:
        raise SchemaError(missing[0], "required field is missing")

    horizon = _number("horizon", raw["horizon"], positive=True)
    steps = raw.get("num_steps", DEFAULT_STEPS)
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 2 or steps % 2:
        raise SchemaError("num_steps", f"must be an even integer >= 2, got {steps!r}")

    tolerances = dict(DEFAULT_TOLERANCES)
    tol_raw = raw.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        raise SchemaError("tolerances", "expected an object")
    for key, val in tol_raw.items():
        if key not in DEFAULT_TOLERANCES:
            raise SchemaError(f"tolerances.{key}", "unknown tolerance")
        tolerances[key] = _number(f"tolerances.{key}", val, positive=True)

    outputs = dict(DEFAULT_OUTPUTS)
    out_raw = raw.get("outputs", {})
    if not isinstance(out_raw, dict):
        raise SchemaError("outputs", "expected an object")
    for key, val in out_raw.items():
        if key not in DEFAULT_OUTPUTS:
            raise SchemaError(f"outputs.{key}", "unknown output")
        if not isinstance(val, str) or not val:
            raise SchemaError(f"outputs.{key}", "expected a file path")
        outputs[key] = val

    params: dict[str, Any] = {}
    if kind == "two_level":
        params["theta0"] = _number("theta0", raw["theta0"])
        params["energy"] = _number("energy", raw["energy"], positive=True)
        if not 0 < params["theta0"] < math.pi / 2:
            raise SchemaError("theta0", "must lie in (0, pi/2) radians")
    elif kind == "grover":
        dim = raw["dimension"]
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
            raise SchemaError("dimension", f"must be an integer >= 2, got {dim!r}")
        params["dimension"] = dim
        params["e_w"] = _number("e_w", raw["e_w"])
        params["e_perp"] = _number("e_perp", raw["e_perp"])
        if "epsilon" in raw:
            eps = _number("epsilon", raw["epsilon"])
            if not 0 < eps < 1:
                raise SchemaError("epsilon", "must lie in (0, 1)")
            if params["e_perp"] <= params["e_w"]:
                raise SchemaError("e_perp", "NonPositiveGap: convergence outputs need e_perp > e_w")
            params["epsilon"] = eps
        if "embed" in raw:
            if not isinstance(raw["embed"], bool):
                raise SchemaError("embed", "expected true or false")
            params["embed"] = raw["embed"]
    else:
        h = _hamiltonian(raw["hamiltonian"])
        psi0 = _state("initial_state", raw["initial_state"])
        if psi0.dimension != h.dimension:
            raise SchemaError("initial_state", f"dimension {psi0.dimension} != hamiltonian dimension {h.dimension}")
        params["hamiltonian"] = raw["hamiltonian"]
        params["initial_state"] = raw["initial_state"]
        if "target_state" in raw:
            tgt = _state("target_state", raw["target_state"])
            if tgt.dimension != h.dimension:
                raise SchemaError("target_state", "dimension does not match hamiltonian")
            params["target_state"] = raw["target_state"]
    return ScenarioConfig(kind, horizon, steps, tolerances, outputs, params)


def parse_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file.

    Raises:
        ParseError: invalid UTF-8 or JSON, with line and column when known.
        SchemaError: missing, unknown or out-of-range fields.
        HermiticityError: a custom Hamiltonian that is not Hermitian.
        OSError: the file cannot be read.
    """
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not valid UTF-8: {exc.reason}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    return config_from_dict(raw)


def _build(config: ScenarioConfig):
    p = config.params
    if config.kind == "two_level":
        h, psi0 = two_level_hamiltonian(TwoLevelParams(p["theta0"], p["energy"], config.horizon))
        target = basis_state(2, 1)
    elif config.kind == "grover":
        gp = GroverParams(p["dimension"], p["e_w"], p["e_perp"], config.horizon, p.get("epsilon"))
        h, psi0 = grover_model(gp, embed=p.get("embed"))
        target = grover_marked_state(h)
    else:
        h = _hamiltonian(p["hamiltonian"])
        psi0 = _state("initial_state", p["initial_state"])
        if "target_state" in p:
            target = _state("target_state", p["target_state"])
        else:
            target = eig(h).eigenvectors[0]
    return h, psi0, target


def _finite_or_none(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def run(config: ScenarioConfig, out_dir: str | Path | None = None, write: bool = True) -> RunReport:
    """Simulate one scenario, evaluate the bound and write CSV/JSON outputs."""
    start = time.perf_counter()
    tol = config.tolerances
    h, psi0, target = _build(config)
    grid = TimeGrid(config.horizon, config.num_steps)
    traj = propagate_exact(h, psi0, grid)
    report = qsl_report(traj, saturation_rtol=tol["saturation"])
    cert = saturation_certificate(traj, h)
    rates = rate_check(traj)
    fid = fidelities(traj, target)

    data: dict[str, Any] = {
        "scenario": config.echo(),
        "qsl": report.as_dict(),
        "qsl_inequality_holds": bool(report.theta_T <= report.path_length + QSL_TOL * (1 + report.path_length)),
        "saturation": {
            "max_residual": cert.max_residual,
            "min_lambda": _finite_or_none(cert.min_lambda),
            "negative_lambda": cert.negative_lambda,
            "fraction_skipped": cert.fraction_skipped,
            "residual_tol": tol["residual"],
            "certified": cert.holds(tol["residual"]),
        },
        "rate_check": {
            "min_margin": float(np.min(rates.margin)),
            "tolerance": rates.tolerance,
            "ok": rates.ok,
        },
        "final_fidelity_target": float(fid[-1]),
        "final_log_norm": float(traj.log_norms[-1]),
        "metadata": {
            "itqsl": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    p = config.params
    if config.kind == "two_level":
        tp = TwoLevelParams(p["theta0"], p["energy"], config.horizon)
        integral = two_level_dispersion_integral(tp)
        data["two_level"] = {
            "closed_form_integral": integral,
            "closed_form_theta_T": two_level_theta(tp, config.horizon),
            "integral_abs_error": abs(integral - report.path_length),
            "integral_within_quadrature_tol": bool(abs(integral - report.path_length) <= tol["quadrature"]),
        }
    elif config.kind == "grover" and "epsilon" in p:
        gp = GroverParams(p["dimension"], p["e_w"], p["e_perp"], config.horizon, p["epsilon"])
        measured = crossing_time(traj, h, target, p["epsilon"])
        exact = grover_runtime(gp)
        data["grover"] = {
            "runtime_bound_exact": exact,
            "runtime_bound_largeN": grover_runtime_large_n(gp),
            "measured_crossing_time": measured,
            "crossing_abs_error": None if measured is None else abs(measured - exact),
        }

    rows = [
        [t, ln, th, dh, f]
        for t, ln, th, dh, f in zip(traj.times, traj.log_norms, traj.thetas, traj.delta_hs, fid)
    ]
    result = RunReport(data, rows, time.perf_counter() - start)
    if write:
        base = Path(out_dir) if out_dir is not None else Path(".")
        write_outputs(result, base / config.outputs["trajectory_csv"], base / config.outputs["report_json"])
    return result


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_outputs(result: RunReport, csv_path: Path, json_path: Path) -> None:
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in result.trajectory_rows:
            w.writerow([_fmt(x) for x in row])
    json_path.write_text(result.to_json(), encoding="utf-8")


def _with_value(config: ScenarioConfig, param: str, value) -> ScenarioConfig:
    raw = config.echo()
    if param not in raw:
        raise SchemaError(param, f"not present in a {config.kind} scenario")
    raw[param] = value
    return config_from_dict(raw)


def _sweep_value(param: str, text: str):
    if param == "dimension":
        try:
            return int(text)
        except ValueError:
            raise SchemaError("values", f"dimension values must be integers, got {text!r}") from None
    try:
        return float(text)
    except ValueError:
        raise SchemaError("values", f"not a number: {text!r}") from None


def sweep(config: ScenarioConfig, param: str, values: list, out_dir: str | Path | None = None,
          write: bool = True) -> list[tuple[Any, RunReport | None, str]]:
    """Run the scenario once per value of ``param``.

    A failing run is recorded with its error message and the sweep goes on.
    Writes ``sweep.csv`` to ``out_dir`` with one row per value.
    """
    if param not in SWEEPABLE:
        raise SchemaError("param", f"must be one of {', '.join(SWEEPABLE)}, got {param!r}")
    results = []
    for value in values:
        try:
            rep = run(_with_value(config, param, value), write=False)
            results.append((value, rep, ""))
        except (InputError, NumericalError) as exc:
            results.append((value, None, f"{type(exc).__name__}: {exc}"))
    if write:
        base = Path(out_dir) if out_dir is not None else Path(".")
        base.mkdir(parents=True, exist_ok=True)
        with open(base / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for value, rep, err in results:
                if rep is None:
                    w.writerow([param, value, "", "", "", "", "", "", err])
                    continue
                q = rep.data["qsl"]
                crossing = rep.data.get("grover", {}).get("measured_crossing_time")
                w.writerow([
                    param, value, _fmt(q["theta_T"]), _fmt(q["path_length"]), _fmt(q["slack"]),
                    _fmt(q["bound_time"]), q["saturated"],
                    "" if crossing is None else _fmt(crossing), "",
                ])
    return results


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itqsl", description="Imaginary-time evolution speed-limit toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario JSON file")
        p.add_argument("--steps", type=int, default=None, help="override num_steps (must be even)")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")

    common(sub.add_parser("run", help="simulate one scenario"))
    sw = sub.add_parser("sweep", help="run a scenario over a list of parameter values")
    common(sw)
    sw.add_argument("--param", required=True, choices=SWEEPABLE)
    sw.add_argument("--values", required=True, help="comma-separated values")
    common(sub.add_parser("check", help="validate a scenario file only"))
    return parser


def _load(args) -> ScenarioConfig:
    config = parse_config(args.config)
    if args.steps is not None:
        raw = config.echo()
        raw["num_steps"] = args.steps
        config = config_from_dict(raw)
    return config


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    say = (lambda *a: None) if args.quiet else print
    try:
        config = _load(args)
        if args.command == "check":
            say(f"ok: {config.kind} scenario, T={config.horizon}, n={config.num_steps}")
        elif args.command == "run":
            rep = run(config, args.out_dir)
            q = rep.data["qsl"]
            say(f"Theta(T)={q['theta_T']:.12g} L={q['path_length']:.12g} slack={q['slack']:.3e} "
                f"bound_time={q['bound_time']:.12g} saturated={q['saturated']} ({rep.elapsed:.3f}s)")
        else:
            values = [_sweep_value(args.param, v.strip()) for v in args.values.split(",") if v.strip()]
            results = sweep(config, args.param, values, args.out_dir)
            for value, rep, err in results:
                say(f"{args.param}={value}: " + (err or f"slack={rep.data['qsl']['slack']:.3e}"))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
