"""Command line experiment runner.

Config files are JSON::

    {
      "global": {"eps_conv": 1e-8, "max_steps": 100000},
      "jobs": [
        {
          "name": "cascade",
          "matrix": {"kind": "constant", "c": -1},
          "x0": {"kind": "uniform", "first": 1, "last": 8},
          "steps": 20,
          "functionals": [{"kind": "bm", "m": 3}],
          "analysis": {"mode": "norm", "budget": {"max_steps": 1000},
                       "ergodic": {"horizon": 1024}},
          "escape": {"steps": 20, "probe": 16}
        }
      ]
    }

``x0`` is a dense list, a sparse ``{"index": value}`` map, or one of
``{"kind": "uniform", "first", "last"}`` and ``{"kind": "geometric", "N"}``.
Command line tolerances override the config.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from .analysis import Budget, ErgodicBudget, estimate_omega, ergodicity_verdict, verdict_to_dict
from .lyapunov import LinearFunctional, admissibility, functional_from_descriptor, monotonicity_report, phi
from .matrix import DescriptorError, SkewMatrix, from_descriptor
from .operator import OperatorError, VolterraOperator, iterate, write_trajectory
from .simplex import SimplexError, SimplexPoint, parse_point

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
OUT_ENV = "VOLTERRA_OUT"
DEFAULT_OUT = "volterra_out"
DEFAULT_STEPS = 100
ESCAPE_STEPS = 20
ESCAPE_PROBE = 16
SWEEP_AXES = ("truncation", "seed", "max_steps")


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class Job:
    name: str
    raw: dict
    matrix: SkewMatrix
    x0: SimplexPoint
    functionals: list[LinearFunctional]
    steps: int
    mode: str
    budget: Budget
    ergodic: ErgodicBudget | None
    escape_steps: int
    escape_probe: int


def load_config(path) -> tuple[dict, bytes]:
    data = Path(path).read_bytes()
    try:
        cfg = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("$", "config must be an object")
    return cfg, data


def parse_x0(lit: Any, path: str) -> SimplexPoint:
    try:
        if isinstance(lit, Mapping) and "kind" in lit:
            if lit["kind"] == "uniform":
                return SimplexPoint.uniform(int(lit["first"]), int(lit["last"]))
            if lit["kind"] == "geometric":
                return SimplexPoint.geometric(int(lit["N"]))
            raise ConfigError(f"{path}.kind", f"unknown point kind {lit['kind']!r}")
        x = parse_point(lit)
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing") from exc
    except (SimplexError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc
    if not x.on_sphere(1.0):
        raise ConfigError(path, f"point mass {x.mass!r} is not 1")
    return x


def _int(d: Mapping, key: str, default: int, path: str, lo: int = 1) -> int:
    v = d.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise ConfigError(f"{path}.{key}", f"expected an integer >= {lo}")
    return v


def _float(d: Mapping, key: str, default: float, path: str) -> float:
    v = d.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
        raise ConfigError(f"{path}.{key}", "expected a positive number")
    return float(v)


def parse_job(raw: Any, glob: Mapping, path: str, overrides: Mapping | None = None) -> Job:
    if not isinstance(raw, Mapping):
        raise ConfigError(path, "job must be an object")
    overrides = overrides or {}
    name = raw.get("name")
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError(f"{path}.name", "expected a non-empty file-safe string")
    if "matrix" not in raw:
        raise ConfigError(f"{path}.matrix", "missing")
    try:
        matrix = from_descriptor(raw["matrix"], f"{path}.matrix")
        funcs_raw = raw.get("functionals", [])
        if not isinstance(funcs_raw, list):
            raise ConfigError(f"{path}.functionals", "expected a list")
        funcs = [functional_from_descriptor(f, f"{path}.functionals[{j}]") for j, f in enumerate(funcs_raw)]
    except DescriptorError as exc:
        raise ConfigError(exc.path, str(exc).split(": ", 1)[-1]) from exc
    if "x0" not in raw:
        raise ConfigError(f"{path}.x0", "missing")
    x0 = parse_x0(raw["x0"], f"{path}.x0")

    analysis = raw.get("analysis", {})
    if not isinstance(analysis, Mapping):
        raise ConfigError(f"{path}.analysis", "expected an object")
    mode = analysis.get("mode", "norm")
    if mode not in ("norm", "weak"):
        raise ConfigError(f"{path}.analysis.mode", "expected 'norm' or 'weak'")
    b = {**glob, **analysis.get("budget", {})}
    bp = f"{path}.analysis.budget"
    max_steps = overrides.get("max_steps") or _int(b, "max_steps", Budget.max_steps, bp)
    window = b.get("stability_window")
    budget = Budget(
        max_steps=max_steps,
        eps_conv=overrides.get("eps_conv") or _float(b, "eps_conv", Budget.eps_conv, bp),
        stability_window=None if window is None else _int(b, "stability_window", 1, bp),
        probe_dim=_int(b, "probe_dim", Budget.probe_dim, bp),
    )
    erg = analysis.get("ergodic")
    ergodic = None
    if erg is not None:
        ep = f"{path}.analysis.ergodic"
        if erg is True:
            erg = {}
        if not isinstance(erg, Mapping):
            raise ConfigError(ep, "expected an object or true")
        probe = erg.get("probe_dim")
        ergodic = ErgodicBudget(
            horizon=_int(erg, "horizon", ErgodicBudget.horizon, ep, lo=2),
            min_horizon=_int(erg, "min_horizon", ErgodicBudget.min_horizon, ep),
            eps_weak=_float(erg, "eps_weak", ErgodicBudget.eps_weak, ep),
            eps_mass=_float(erg, "eps_mass", ErgodicBudget.eps_mass, ep),
            probe_dim=None if probe is None else _int(erg, "probe_dim", 1, ep),
        )
    esc = raw.get("escape", {})
    return Job(
        name=name,
        raw=dict(raw),
        matrix=matrix,
        x0=x0,
        functionals=funcs,
        steps=_int(raw, "steps", DEFAULT_STEPS, path, lo=0),
        mode=mode,
        budget=budget,
        ergodic=ergodic,
        escape_steps=_int(esc, "steps", ESCAPE_STEPS, f"{path}.escape", lo=0),
        escape_probe=_int(esc, "probe", ESCAPE_PROBE, f"{path}.escape"),
    )


def parse_config(cfg: Mapping, overrides: Mapping | None = None) -> list[Job]:
    """Validate every job before anything runs."""
    glob = cfg.get("global", {})
    if not isinstance(glob, Mapping):
        raise ConfigError("global", "expected an object")
    jobs = cfg.get("jobs")
    if not isinstance(jobs, list) or not jobs:
        raise ConfigError("jobs", "expected a non-empty list")
    parsed = [parse_job(j, glob, f"jobs[{n}]", overrides) for n, j in enumerate(jobs)]
    seen = set()
    for n, j in enumerate(parsed):
        if j.name in seen:
            raise ConfigError(f"jobs[{n}].name", f"duplicate job name {j.name!r}")
        seen.add(j.name)
    return parsed


# -- execution ----------------------------------------------------------------

def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def escaped_mass(V: VolterraOperator, x0: SimplexPoint, steps: int, probe: int) -> float:
    """Mass that left coordinates ``1..probe`` after ``steps`` iterations."""
    x = iterate(V, x0, steps).final if steps else x0
    return 1.0 - x.restrict(1, probe).mass


def run_job(job: Job, out: Path | None) -> dict:
    """Iterate, analyse and (if ``out`` is given) write one job's artifacts."""
    V = VolterraOperator(job.matrix)
    traj = iterate(V, job.x0, job.steps)
    est = estimate_omega(V, job.x0, job.mode, job.budget)
    verdict = {
        "matrix_descriptor": job.matrix.descriptor(),
        "class": str(V.class_hint),
        "x0": job.x0.to_literal(),
        **est.to_dict(),
    }
    if job.ergodic is not None:
        verdict["ergodic"] = ergodicity_verdict(V, job.x0, job.ergodic).to_dict()
    mono = []
    for f in job.functionals:
        rep = monotonicity_report(f, traj)
        adm = admissibility(f, job.matrix, max(2, V.class_hint.scan_dim))
        mono.append({"functional": f.descriptor(), "name": f.name,
                     "expected_sign": adm.expected_sign, **rep.to_dict()})
    summary = {
        "name": job.name,
        "verdict": verdict["verdict"],
        "steps": est.steps,
        "final_mass": traj.final.mass,
        "phi_final": {f.name or f"phi{j}": phi(f, traj.final) for j, f in enumerate(job.functionals)},
        "escaped_mass": escaped_mass(V, job.x0, job.escape_steps, job.escape_probe),
    }
    if out is not None:
        write_trajectory(traj, out / f"{job.name}_trajectory.csv", out / f"{job.name}_trajectory.json")
        _dump(out / f"{job.name}_verdict.json", verdict)
        _dump(out / f"{job.name}_monotonicity.json", mono)
    return summary


def _worker(raw: dict, glob: dict, overrides: dict, out: str | None) -> tuple[str, float, dict | None, str | None]:
    # Rebuilt inside the worker so only plain JSON crosses process boundaries.
    t0 = time.perf_counter()
    job = parse_job(raw, glob, "job", overrides)
    try:
        res = run_job(job, Path(out) if out else None)
        err = None
    except (OperatorError, ArithmeticError, ValueError) as exc:
        res, err = None, f"{type(exc).__name__}: {exc}"
    return job.name, time.perf_counter() - t0, res, err


def _map(raws: list[dict], glob: dict, overrides: dict, out: str | None, workers: int):
    args = [(r, glob, overrides, out) for r in raws]
    if workers <= 1:
        return [_worker(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, *zip(*args)))


def _error_table(rows: list[tuple[str, str, str]]) -> str:
    lines = [f"{'job':<20} {'where':<32} error"]
    lines += [f"{j:<20} {w:<32} {e}" for j, w, e in rows]
    return "\n".join(lines)


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    overrides = {"eps_conv": args.tol_conv, "max_steps": args.max_steps}
    try:
        cfg, data = load_config(args.config)
        jobs = parse_config(cfg, overrides)
    except (ConfigError, OSError) as exc:
        print(_error_table([("-", getattr(exc, "path", str(args.config)), str(exc))]), file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args.out)
    results = _map([j.raw for j in jobs], cfg.get("global", {}), overrides, str(out), args.jobs)
    manifest = {
        "tool": "volterra",
        "version": __version__,
        "config": str(args.config),
        "config_sha256": hashlib.sha256(data).hexdigest(),
        "jobs": [],
    }
    errors = []
    for name, wall, res, err in results:
        entry = {"name": name, "status": "ok" if err is None else "error", "wall_time_s": wall}
        if err is None:
            entry["files"] = [f"{name}_{s}" for s in ("trajectory.csv", "trajectory.json",
                                                       "verdict.json", "monotonicity.json")]
            entry["verdict"] = res["verdict"]
        else:
            entry["error"] = err
            errors.append((name, "run", err))
        manifest["jobs"].append(entry)
        if not args.quiet:
            shown = json.dumps(res["verdict"]) if res else err
            print(f"{name:<20} {entry['status']:<6} {wall:8.3f}s  {shown}")
    _dump(out / "manifest.json", manifest)
    if errors:
        print(_error_table(errors), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _apply_axis(raw: dict, axis: str, value, path: str) -> dict:
    raw = copy.deepcopy(raw)
    if axis == "truncation":
        x0 = raw.get("x0")
        if not (isinstance(x0, Mapping) and x0.get("kind") == "geometric"):
            raise ConfigError(f"{path}.x0", "truncation sweep needs a geometric x0")
        raw["x0"] = {"kind": "geometric", "N": int(value)}
    elif axis == "seed":
        m = raw.get("matrix")
        if not (isinstance(m, Mapping) and m.get("kind") == "random"):
            raise ConfigError(f"{path}.matrix", "seed sweep needs a random matrix")
        raw["matrix"] = {**m, "seed": int(value)}
    elif axis == "max_steps":
        an = dict(raw.get("analysis", {}))
        an["budget"] = {**an.get("budget", {}), "max_steps": int(value)}
        raw["analysis"] = an
    return raw


def cmd_sweep(args) -> int:
    overrides = {"eps_conv": args.tol_conv, "max_steps": args.max_steps}
    try:
        values = [int(v) for v in args.values.replace(",", " ").split()]
    except ValueError:
        print(_error_table([("-", "--values", "expected integers")]), file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg, _ = load_config(args.config)
        jobs = parse_config(cfg, overrides)
        if args.job:
            jobs = [j for j in jobs if j.name == args.job]
            if not jobs:
                raise ConfigError("--job", f"no job named {args.job!r}")
        glob = cfg.get("global", {})
        raws = []
        for j in jobs:
            for v in values:
                r = _apply_axis(j.raw, args.axis, v, j.name)
                parse_job(r, glob, j.name, overrides)
                raws.append(r)
    except (ConfigError, OSError) as exc:
        print(_error_table([("-", getattr(exc, "path", str(args.config)), str(exc))]), file=sys.stderr)
        return EXIT_CONFIG
    if args.axis == "max_steps":
        overrides["max_steps"] = None
    results = _map(raws, glob, overrides, None, args.jobs)
    phis = sorted({k for _, _, res, _ in results if res for k in res["phi_final"]})
    out = _out_dir(args.out)
    path = out / f"sweep_{args.axis}.csv"
    errors = []
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["job", "axis", "value", "verdict", "index", "steps", "final_mass", "escaped_mass"]
                   + [f"phi[{p}]" for p in phis])
        for (name, _, res, err), v in zip(results, [v for _ in jobs for v in values]):
            if err is not None:
                errors.append((name, f"{args.axis}={v}", err))
                w.writerow([name, args.axis, v, "error", "", "", "", ""] + [""] * len(phis))
                continue
            vd = res["verdict"]
            w.writerow([name, args.axis, v, vd["kind"], vd.get("index", ""), res["steps"],
                        format(res["final_mass"], ".17g"), format(res["escaped_mass"], ".17g")]
                       + [format(res["phi_final"][p], ".17g") if p in res["phi_final"] else "" for p in phis])
    if not args.quiet:
        print(path.read_text(), end="")
    if errors:
        print(_error_table(errors), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="volterra", description="Run Volterra operator experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--tol-conv", type=float, help="convergence tolerance override")
    common.add_argument("--max-steps", type=int, help="iteration budget override")
    common.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run every job of a config")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", parents=[common], help="vary one parameter across values")
    s.add_argument("config")
    s.add_argument("--axis", choices=SWEEP_AXES, required=True)
    s.add_argument("--values", required=True, help="comma separated integers")
    s.add_argument("--job", help="restrict to one job")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
