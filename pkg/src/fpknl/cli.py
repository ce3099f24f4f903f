"""Configuration-driven command line: evolve, invert, symmetry, verify.

Configs are JSON, schema-validated with unknown keys rejected.  Artifacts
are deterministic: identical configs produce byte-identical CSV and report
JSON (floats are written in shortest round-trip form; wall time and
versions go to a separate meta file).

Exit codes: 0 all requested checks pass, 1 a check failed, 2 config error,
3 numerical-domain error (focal point, ill-posed inverse, ...).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__, checks
from .errors import ConfigurationError, FpknlError, InputError
from .evolution import (evolve_analytic, evolve_quadrature, inverse_evolve,
                        plan_for)
from .model import ModelParams, SampledDensity
from .packets import GaussianMixture, GaussianPacket
from .symmetry import (InitialOperator, build_shifts, linsym_operator,
                       symmetry_apply_conclusion, symmetry_apply_evolution,
                       symmetry_apply_shift)
from .variations import matriciant

ENV_OUTDIR = "FPKNL_OUTDIR"

_matrix_schema = {"type": "array", "minItems": 1,
                  "items": {"type": "array", "minItems": 1,
                            "items": {"type": "number"}}}
_vector_schema = {"type": "array", "minItems": 1, "items": {"type": "number"}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "task"],
    "properties": {
        "task": {"enum": ["evolve", "inverse", "symmetry", "verify"]},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dimension", "drift", "coupling_state",
                         "coupling_mean", "diffusion"],
            "properties": {
                "dimension": {"type": "integer", "minimum": 1},
                "drift": _matrix_schema,
                "coupling_state": _matrix_schema,
                "coupling_mean": _matrix_schema,
                "diffusion": {"type": "number", "exclusiveMinimum": 0},
                "coupling": {"type": "number"},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["gaussian", "sampled"]},
                "components": {
                    "type": "array", "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["mean", "num", "den"],
                        "properties": {
                            "weight": {"type": "number"},
                            "mean": _vector_schema,
                            "num": _matrix_schema,
                            "den": _matrix_schema,
                        },
                    },
                },
                "path": {"type": "string"},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "end"],
            "properties": {
                "start": {"type": "number"},
                "end": {"type": "number"},
                "snapshots": {"type": "array", "items": {"type": "number"}},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "x_min": {"type": "number"},
                "x_max": {"type": "number"},
                "nodes": {"type": "integer", "minimum": 8},
                "dt": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "symmetry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "operator": {
                    "oneOf": [
                        {"const": "linsym"},
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["const", "lin", "grad"],
                            "properties": {
                                "const": {"type": "number"},
                                "lin": _vector_schema,
                                "grad": _vector_schema,
                            },
                        },
                    ]
                },
                "image_moment": _vector_schema,
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "checks": {"type": "array",
                           "items": {"enum": sorted(checks.ALL_CHECKS)}},
                "fd": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "nx": {"type": "integer", "minimum": 8},
                        "dt": {"type": "number", "exclusiveMinimum": 0},
                        "t_end": {"type": "number", "exclusiveMinimum": 0},
                        "refine": {"type": "boolean"},
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "prefix": {"type": "string"},
            },
        },
    },
}


def fmt(x) -> str:
    """Shortest round-trip decimal form; deterministic across runs."""
    return repr(float(x))


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    errors = sorted(Draft202012Validator(SCHEMA).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  at {'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
                 for e in errors]
        raise ConfigurationError("config does not match schema:\n" + "\n".join(lines))
    return cfg


def build_params(cfg: dict) -> ModelParams:
    mc = cfg["model"]
    params = ModelParams(drift=mc["drift"], coupling_state=mc["coupling_state"],
                         coupling_mean=mc["coupling_mean"],
                         diffusion=mc["diffusion"],
                         coupling=mc.get("coupling", 0.0))
    if params.dim != mc["dimension"]:
        raise ConfigurationError(
            f"dimension {mc['dimension']} does not match matrix shape {params.dim}"
        )
    return params


def build_initial(cfg: dict, params: ModelParams):
    ic = cfg.get("initial")
    if ic is None:
        raise ConfigurationError("this task needs an initial block")
    if ic["kind"] == "gaussian":
        comps = [GaussianPacket(mean=c["mean"], num=c["num"], den=c["den"],
                                weight=c.get("weight", 1.0))
                 for c in ic.get("components", [])]
        if not comps:
            raise ConfigurationError("gaussian initial needs components")
        return GaussianMixture(comps)
    path = ic.get("path")
    if not path:
        raise ConfigurationError("sampled initial needs a path")
    try:
        data = np.loadtxt(path, delimiter=",")
    except OSError as exc:
        raise ConfigurationError(f"cannot read samples {path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigurationError("sampled initial must be two CSV columns: x,u")
    x, u = data[:, 0], data[:, 1]
    dx = np.diff(x)
    if np.max(np.abs(dx - dx[0])) > 1e-9 * abs(dx[0]):
        raise ConfigurationError("sampled initial grid must be uniform")
    return SampledDensity([x[0]], [dx[0]], u)


def _times(cfg: dict) -> tuple[float, float, list[float]]:
    tc = cfg.get("time")
    if tc is None:
        raise ConfigurationError("this task needs a time block")
    snaps = list(tc.get("snapshots", [tc["end"]]))
    return float(tc["start"]), float(tc["end"]), snaps


def _grid_axis(cfg: dict) -> np.ndarray:
    gc = cfg.get("grid")
    if gc is None or not {"x_min", "x_max", "nodes"} <= set(gc):
        raise ConfigurationError("this task needs a grid block with x_min, x_max, nodes")
    nodes = int(gc["nodes"])
    return gc["x_min"] + (gc["x_max"] - gc["x_min"]) / (nodes - 1) * np.arange(nodes)


def write_snapshots_csv(path: Path, rows: list[tuple]) -> None:
    ncoord = len(rows[0]) - 2 if rows else 1
    header = ["t"] + [f"x{i}" for i in range(ncoord)] + ["u"] if ncoord > 1 \
        else ["t", "x", "u"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _check_dicts(results: list[checks.CheckResult]) -> list[dict]:
    return [{"name": r.name, "passed": bool(r.passed), "value": float(r.value),
             "tolerance": float(r.tolerance), "detail": r.detail}
            for r in results]


def _sample_rows(t, xs, values) -> list[tuple]:
    return [(t, float(x), float(v)) for x, v in zip(xs, values)]


def task_evolve(cfg: dict, params: ModelParams):
    s, _, snaps = _times(cfg)
    initial = build_initial(cfg, params)
    results, rows, snap_info = [], [], []
    if isinstance(initial, SampledDensity):
        if params.dim != 1:
            raise ConfigurationError("sampled evolution is one-dimensional")
        xs = initial.axis()
        for t in snaps:
            plan = plan_for(params, s, t, initial)
            out = evolve_quadrature(initial, plan)
            rows += _sample_rows(t, xs, out.values)
            mass = out.total_mass()
            mom = out.first_moment()
            closed = plan.moment_at_end()
            results.append(checks.CheckResult(
                name=f"mass@t={t:g}", passed=bool(abs(mass - 1) <= 1e-6),
                value=abs(mass - 1), tolerance=1e-6))
            results.append(checks.CheckResult(
                name=f"moment@t={t:g}",
                passed=bool(np.max(np.abs(mom - closed)) <= 1e-6),
                value=float(np.max(np.abs(mom - closed))), tolerance=1e-6))
            snap_info.append({"t": t, "mass": mass, "moment": mom.tolist()})
    else:
        xs = _grid_axis(cfg)
        pts = xs.reshape(-1, 1) if params.dim == 1 else None
        if pts is None:
            raise ConfigurationError("analytic CSV output is one-dimensional")
        for t in snaps:
            plan = plan_for(params, s, t, initial)
            out = evolve_analytic(initial, plan)
            rows += _sample_rows(t, xs, out.eval(params, pts))
            mass = out.mass()
            mom = out.first_moment(params)
            closed = plan.moment_at_end()
            results.append(checks.CheckResult(
                name=f"mass@t={t:g}", passed=bool(abs(mass - 1) <= 1e-9),
                value=abs(mass - 1), tolerance=1e-9))
            results.append(checks.CheckResult(
                name=f"moment@t={t:g}",
                passed=bool(np.max(np.abs(mom - closed)) <= 1e-9),
                value=float(np.max(np.abs(mom - closed))), tolerance=1e-9))
            snap_info.append({"t": t, "mass": mass, "moment": mom.tolist()})
    return results, rows, {"snapshots": snap_info}


def task_inverse(cfg: dict, params: ModelParams):
    s, t_end, _ = _times(cfg)
    initial = build_initial(cfg, params)
    results, rows = [], []
    if isinstance(initial, SampledDensity):
        plan = plan_for(params, s, t_end, initial)
        u = evolve_quadrature(initial, plan)
        back = inverse_evolve(u, plan)
        err = float(np.max(np.abs(back.values - initial.values)))
        results.append(checks.CheckResult(
            name="roundtrip-quadrature", passed=bool(err <= 1e-4),
            value=err, tolerance=1e-4))
        rows += _sample_rows(s, initial.axis(), back.values)
    else:
        plan = plan_for(params, s, t_end, initial)
        u = evolve_analytic(initial, plan)
        back = inverse_evolve(u, plan)
        err = 0.0
        for orig, rec in zip(initial.components, back.components):
            err = max(err, float(np.max(np.abs(orig.mean - rec.mean))),
                      float(np.max(np.abs(orig.num - rec.num))),
                      float(np.max(np.abs(orig.den - rec.den))),
                      abs(orig.weight - rec.weight))
        results.append(checks.CheckResult(
            name="roundtrip-analytic", passed=bool(err <= 1e-12),
            value=err, tolerance=1e-12))
        if params.dim == 1:
            xs = _grid_axis(cfg)
            rows += _sample_rows(s, xs, back.eval(params, xs.reshape(-1, 1)))
    return results, rows, {"roundtrip_error": results[0].value}


def task_symmetry(cfg: dict, params: ModelParams):
    if params.dim != 1:
        raise ConfigurationError("the symmetry task is one-dimensional")
    s, t_end, snaps = _times(cfg)
    initial = build_initial(cfg, params)
    if isinstance(initial, SampledDensity):
        raise ConfigurationError("the symmetry task needs a gaussian initial block")
    sc = cfg.get("symmetry", {})
    op_cfg = sc.get("operator", "linsym")
    x_gamma = initial.first_moment(params, normalized=True)
    if op_cfg == "linsym":
        op = linsym_operator(params, matriciant(params, s, s), x_gamma)
    else:
        op = InitialOperator(const=op_cfg["const"], lin=op_cfg["lin"],
                             grad=op_cfg["grad"])
    override = sc.get("image_moment")
    shifts = build_shifts(op, initial, params, s, moment_override=override)
    plan_end = plan_for(params, s, t_end, initial)
    u_end = evolve_analytic(initial, plan_end)
    xs = _grid_axis(cfg)
    pts = xs.reshape(-1, 1)
    fields = [
        symmetry_apply_shift(op, u_end, shifts, t_end).eval(params, pts),
        symmetry_apply_conclusion(op, u_end, shifts, t_end).eval(params, pts),
        symmetry_apply_evolution(op, u_end, plan_end,
                                 moment_override=override).eval(params, pts),
    ]
    worst = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            worst = max(worst, float(np.max(np.abs(fields[i] - fields[j]))))
    results = [checks.CheckResult(name="symmetry-routes",
                                  passed=bool(worst <= 1e-8),
                                  value=worst, tolerance=1e-8,
                                  detail="pairwise over 3 routes")]
    rows = []
    for t in snaps:
        plan_t = plan_for(params, s, t, initial)
        u_t = evolve_analytic(initial, plan_t)
        u_a = symmetry_apply_evolution(op, u_t, plan_t, moment_override=override)
        rows += _sample_rows(t, xs, u_a.eval(params, pts))
    return results, rows, {"alpha": shifts.alpha, "normalized": shifts.normalized}


def task_verify(cfg: dict, params: ModelParams):
    vc = cfg.get("verify", {})
    names = vc.get("checks", [n for n in sorted(checks.ALL_CHECKS)
                              if n != "fd-reduction"])
    results = []
    for name in names:
        if name == "fd-reduction":
            fd = vc.get("fd", {})
            gc = cfg.get("grid", {})
            packet = None
            initial = cfg.get("initial")
            if initial and initial.get("kind") == "gaussian":
                c = initial["components"][0]
                packet = GaussianPacket(mean=c["mean"], num=c["num"],
                                        den=c["den"], weight=c.get("weight", 1.0))
            results += checks.check_fd_reduction(
                params=params, packet=packet,
                nx=fd.get("nx", gc.get("nodes", 1200)),
                dt=fd.get("dt", gc.get("dt", 2e-5)),
                t_end=fd.get("t_end", cfg.get("time", {}).get("end", 1.0)),
                x_min=gc.get("x_min", -6.0), x_max=gc.get("x_max", 6.0),
                refine=fd.get("refine", True))
        else:
            results += checks.ALL_CHECKS[name]()
    return results, [], {}


TASKS = {"evolve": task_evolve, "inverse": task_inverse,
         "symmetry": task_symmetry, "verify": task_verify}


def run_config(cfg: dict, outdir: Path) -> int:
    params = build_params(cfg)
    start = time.perf_counter()
    results, rows, extra = TASKS[cfg["task"]](cfg, params)
    wall = time.perf_counter() - start
    outdir.mkdir(parents=True, exist_ok=True)
    prefix = cfg.get("output", {}).get("prefix", "run")
    if rows:
        write_snapshots_csv(outdir / f"{prefix}_snapshots.csv", rows)
    all_passed = all(r.passed for r in results)
    report = {"task": cfg["task"], "all_passed": all_passed,
              "checks": _check_dicts(results), **extra}
    (outdir / f"{prefix}_report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    meta = {"config": cfg, "version": __version__,
            "numpy": np.__version__, "wall_time_s": wall}
    (outdir / f"{prefix}_meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n")
    for r in results:
        print(r.line())
    print(f"report: {outdir / (prefix + '_report.json')}")
    return 0 if all_passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fpknl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the task named in the config")
    p_run.add_argument("config")
    p_ver = sub.add_parser("verify", help="run the config with task forced to verify")
    p_ver.add_argument("config")
    sub.add_parser("print-schema", help="print the config JSON schema")
    args = parser.parse_args(argv)

    if args.command == "print-schema":
        print(json.dumps(SCHEMA, sort_keys=True, indent=2))
        return 0
    try:
        cfg = load_config(args.config)
        if args.command == "verify":
            cfg["task"] = "verify"
        outdir = Path(os.environ.get(ENV_OUTDIR)
                      or cfg.get("output", {}).get("dir", "out"))
        return run_config(cfg, outdir)
    except (ConfigurationError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FpknlError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
