"""Command-line front end.

Subcommands: solve, optimize, verify, kelvin, influence.  Problems come
from a strict JSON config (unknown fields are rejected) or from a built-in
--figure preset.  Artifacts (result.json, points.csv, density_profile.csv)
are written to --out.  Exit codes: 0 success, 1 bad configuration,
2 infeasible support, 3 optimizer line-search failure after all restarts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import discrete, potential, presets, support, verify
from .errors import ConfigError, InfeasibleSupportError
from .sphere import _pole_frame

__all__ = ["main"]

_TOP_KEYS = {"d", "s", "sources", "optimize", "verify", "kelvin"}
_SRC_KEYS = {"position", "charge"}
_OPT_KEYS = {"n_points", "seed", "restarts", "threads", "max_iterations",
             "gradient_tolerance", "perturbation_scale", "history_size"}
_VER_KEYS = {"samples", "grid", "seed", "windows", "window_radius"}
_KEL_KEYS = {"pole_index"}

_OPT_DEFAULTS = {"n_points": 500, "seed": 0, "restarts": 20, "threads": 1,
                 "max_iterations": 10000, "gradient_tolerance": None,
                 "perturbation_scale": 0.05, "history_size": 10}
_VER_DEFAULTS = {"samples": 10 ** 6, "grid": 100, "seed": 1,
                 "windows": 20, "window_radius": 0.4}
_KEL_DEFAULTS = {"pole_index": None}


@dataclass
class RunConfig:
    spec: support.ProblemSpec
    optimize: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    kelvin: dict = field(default_factory=dict)


def _check_keys(block: dict, allowed: set, where: str):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(unknown)}")


def _merge(defaults: dict, block: dict, allowed: set, where: str) -> dict:
    _check_keys(block, allowed, where)
    out = dict(defaults)
    out.update(block)
    return out


def parse_config(payload: dict) -> RunConfig:
    """Validate a raw JSON object into a RunConfig (strict field set)."""
    if not isinstance(payload, dict):
        raise ConfigError("top-level config must be a JSON object")
    _check_keys(payload, _TOP_KEYS, "config")
    try:
        d = int(payload.get("d", 2))
        s = float(payload.get("s", 0.0))
        sources = []
        for k, raw in enumerate(payload.get("sources", [])):
            if not isinstance(raw, dict):
                raise ConfigError(f"sources[{k}] must be an object")
            _check_keys(raw, _SRC_KEYS, f"sources[{k}]")
            if "position" not in raw or "charge" not in raw:
                raise ConfigError(f"sources[{k}] needs position and charge")
            pos = np.asarray(raw["position"], dtype=float)
            if pos.shape != (d + 1,):
                raise ConfigError(
                    f"sources[{k}].position must have {d + 1} components")
            drift = abs(np.linalg.norm(pos) - 1.0)
            if drift > 1e-9:
                print(f"warning: sources[{k}].position off the sphere by "
                      f"{drift:.3e}; renormalizing", file=sys.stderr)
            sources.append(support.Source(pos, float(raw["charge"])))
        spec = support.ProblemSpec(d, s, tuple(sources))
        return RunConfig(
            spec=spec,
            optimize=_merge(_OPT_DEFAULTS, payload.get("optimize", {}),
                            _OPT_KEYS, "optimize"),
            verify=_merge(_VER_DEFAULTS, payload.get("verify", {}),
                          _VER_KEYS, "verify"),
            kelvin=_merge(_KEL_DEFAULTS, payload.get("kelvin", {}),
                          _KEL_KEYS, "kelvin"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _load_config(args) -> RunConfig:
    if getattr(args, "figure", None):
        spec = presets.preset(args.figure)
        cfg = RunConfig(spec, dict(_OPT_DEFAULTS), dict(_VER_DEFAULTS),
                        dict(_KEL_DEFAULTS))
    elif getattr(args, "config", None):
        text = (sys.stdin.read() if args.config == "-"
                else Path(args.config).read_text())
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        cfg = parse_config(payload)
    else:
        raise ConfigError("provide --config FILE or --figure NAME")

    for name in ("n_points", "seed", "restarts", "threads"):
        flag = getattr(args, name, None)
        if flag is not None:
            cfg.optimize[name] = flag
    if getattr(args, "samples", None) is not None:
        cfg.verify["samples"] = args.samples
    if getattr(args, "verify_seed", None) is not None:
        cfg.verify["seed"] = args.verify_seed
    if getattr(args, "pole_index", None) is not None:
        cfg.kelvin["pole_index"] = args.pole_index
    if "RE_SEED" in os.environ:
        try:
            forced = int(os.environ["RE_SEED"])
        except ValueError as exc:
            raise ConfigError(f"RE_SEED must be an integer: {exc}") from exc
        cfg.optimize["seed"] = forced
        cfg.verify["seed"] = forced
    return cfg


# ----------------------------------------------------------------------
# serialization helpers
# ----------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    return str(obj)


def _write_json(out_dir: Path, payload: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "result.json"
    # float repr round-trips exactly; indent for human eyes
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n")
    return path


#: bumped whenever a CSV column layout changes; consumers key on this line
_CSV_FORMAT_VERSION = 1


def _write_csv(path: Path, header: list, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# capsphere csv v{_CSV_FORMAT_VERSION}: "
                 + ",".join(header) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _cap_payload(cap) -> dict:
    return {"center": cap.center, "gamma": cap.gamma, "t": cap.t,
            "alpha": cap.alpha}


def _solution_payload(sol: support.SupportSolution) -> dict:
    return {
        "caps": [_cap_payload(c) for c in sol.region.caps],
        "c_norm": sol.c_norm,
        "f_q": sol.f_q,
        "feasible": sol.feasible,
        "diagnostics": sol.diagnostics,
    }


def _spec_payload(spec: support.ProblemSpec) -> dict:
    return {"d": spec.d, "s": spec.s,
            "sources": [{"position": s.position, "charge": s.charge}
                        for s in spec.sources]}


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def _solve_spec(spec: support.ProblemSpec) -> support.SupportSolution:
    if spec.d == 2 and spec.s == 0.0:
        return support.solve_log(spec)
    if spec.d >= 3 and spec.s == spec.d - 2.0:
        return support.solve_riesz_dm2(spec)
    raise ConfigError(
        f"no support solver for d={spec.d}, s={spec.s}; "
        "use `influence` for Coulomb caps on S^2")


def _density_profile(spec, sol, out_dir: Path):
    """Weighted-potential profile along a meridian of every cap."""
    rows = []
    thetas = np.linspace(1e-6, np.pi, 361)
    for idx, cap in enumerate(sol.region.caps):
        e1, _ = _pole_frame(cap.center)
        pts = (np.cos(thetas)[:, None] * cap.center
               + np.sin(thetas)[:, None] * e1)
        if spec.s == 0.0:
            vals = potential.log_support_weighted_potential(
                spec.positions(), spec.charges(),
                sol.region.caps, pts)
        else:
            vals = potential.riesz_support_weighted_potential(
                sol.region.caps, spec.charges(), sol.c_norm, spec.d, pts)
        for th, v in zip(thetas, vals):
            rows.append((float(idx), th, np.cos(th), v))
    _write_csv(out_dir / "density_profile.csv",
               ["cap_index", "theta", "height", "weighted_potential"], rows)


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    try:
        sol = _solve_spec(cfg.spec)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = {"command": "solve", "problem": _spec_payload(cfg.spec),
               "solution": _solution_payload(sol)}
    _write_json(out_dir, payload)
    if sol.feasible:
        _density_profile(cfg.spec, sol, out_dir)
        print(f"feasible: C={sol.c_norm!r} F_Q={sol.f_q!r}")
        return 0
    print("infeasible: caps overlap "
          f"{sol.diagnostics['violations']}", file=sys.stderr)
    return 2


def cmd_optimize(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    opt = cfg.optimize
    settings = discrete.OptimizerSettings(
        max_iterations=int(opt["max_iterations"]),
        gradient_tolerance=opt["gradient_tolerance"],
        restart_count=int(opt["restarts"]),
        perturbation_scale=float(opt["perturbation_scale"]),
        seed=int(opt["seed"]),
        history_size=int(opt["history_size"]))
    result = discrete.multistart(cfg.spec, int(opt["n_points"]), settings,
                                 threads=int(opt["threads"]))

    header = ["x", "y", "z"]
    rows = result.points
    if result.source_chords is not None:
        header += [f"chord_to_src_{i + 1}"
                   for i in range(result.source_chords.shape[1])]
        rows = np.hstack((result.points, result.source_chords))
    _write_csv(out_dir / "points.csv", header, rows)

    exclusion = None
    if cfg.spec.m >= 1 and cfg.spec.d == 2 and cfg.spec.s in (0.0, 1.0):
        regions = support.influence_radii(cfg.spec)
        report = verify.check_cap_exclusion(result.points, regions.caps)
        exclusion = {"passed": report.passed, **report.details}
    payload = {
        "command": "optimize", "problem": _spec_payload(cfg.spec),
        "n_points": int(opt["n_points"]), "seed": int(opt["seed"]),
        "energy": result.energy, "grad_inf_norm": result.grad_inf_norm,
        "iterations": result.iterations, "restarts_used": result.restarts_used,
        "converged": result.converged,
        "line_search_failed": result.line_search_failed,
        "cap_exclusion": exclusion,
    }
    _write_json(out_dir, payload)
    print(f"energy={result.energy!r} grad_inf={result.grad_inf_norm:.3e}")
    if result.line_search_failed:
        print("line search failed on every restart; best iterate written",
              file=sys.stderr)
        return 3
    return 0


def _read_points_csv(path: str) -> np.ndarray:
    with open(path) as fh:
        skip = 0
        for line in fh:
            if not line.startswith("#"):
                break
            skip += 1
    data = np.genfromtxt(path, delimiter=",", names=True, skip_header=skip)
    return np.column_stack([data["x"], data["y"], data["z"]])


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    ver = cfg.verify
    reports = []
    solution = None
    solvable = (cfg.spec.d == 2 and cfg.spec.s == 0.0) or \
               (cfg.spec.d >= 3 and cfg.spec.s == cfg.spec.d - 2.0)
    if solvable:
        solution = _solve_spec(cfg.spec)
        if solution.feasible:
            reports.append(verify.check_variational(
                solution, cfg.spec, grid=int(ver["grid"]),
                samples=int(ver["samples"]), seed=int(ver["seed"])))

    points = _read_points_csv(args.points) if args.points else None
    if points is not None:
        if cfg.spec.m >= 1 and cfg.spec.d == 2 and cfg.spec.s in (0.0, 1.0):
            regions = support.influence_radii(cfg.spec)
            reports.append(verify.check_cap_exclusion(points, regions.caps))
        if solution is not None and solution.feasible:
            windows = verify.support_windows(
                solution, int(ver["windows"]), float(ver["window_radius"]),
                seed=int(ver["seed"]))
            reports.append(verify.check_empirical_density(
                points, solution, windows))

    payload = {
        "command": "verify", "problem": _spec_payload(cfg.spec),
        "feasible": None if solution is None else solution.feasible,
        "reports": [{"name": r.name, "passed": r.passed,
                     "statistic": r.statistic, "tolerance": r.tolerance,
                     "details": r.details} for r in reports],
    }
    _write_json(out_dir, payload)
    for r in reports:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} "
              f"(statistic={r.statistic:.3e}, tolerance={r.tolerance:.3e})")
    if solution is not None and not solution.feasible and not reports:
        print("infeasible support and no point checks requested",
              file=sys.stderr)
        return 2
    return 0


def cmd_kelvin(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    pole_index = cfg.kelvin["pole_index"]
    try:
        planar = support.kelvin_planar(
            cfg.spec, None if pole_index is None else int(pole_index))
    except InfeasibleSupportError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    report = verify.check_planar_density(planar)
    payload = {
        "command": "kelvin", "problem": _spec_payload(cfg.spec),
        "outer_radius": planar.outer_radius,
        "excluded_discs": [{"center": d.center, "radius": d.radius}
                           for d in planar.excluded_discs],
        "density_scale": planar.density_scale,
        "pole_index": planar.pole_index,
        "plane_sources": list(planar.plane_sources),
        "density_check": {"passed": report.passed, **report.details},
    }
    _write_json(out_dir, payload)
    print(f"outer_radius={planar.outer_radius!r} "
          f"mass_integral={report.details['mass_integral']!r}")
    return 0


def cmd_influence(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    try:
        regions = support.influence_radii(cfg.spec)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = {
        "command": "influence", "problem": _spec_payload(cfg.spec),
        "s": regions.s,
        "reduced_charges": list(regions.reduced_charges),
        "caps": [_cap_payload(c) for c in regions.caps],
    }
    _write_json(out_dir, payload)
    print(f"{len(regions.caps)} influence caps written")
    return 0


# ----------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="JSON config file, or - for stdin")
    sub.add_argument("--figure", help="built-in preset name (1-left, 1-right,"
                                      " 2, 3-left, 3-right, 4, 1, 3)")
    sub.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capsphere",
        description="Equilibrium supports and optimal point configurations "
                    "on the sphere under point-charge fields")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("solve", help="extremal support and normalization")
    _add_common(sp)
    sp.set_defaults(func=cmd_solve)

    op = subs.add_parser("optimize", help="minimal-energy N-point configuration")
    _add_common(op)
    op.add_argument("-N", "--n-points", dest="n_points", type=int)
    op.add_argument("--seed", type=int)
    op.add_argument("--restarts", type=int)
    op.add_argument("--threads", type=int)
    op.set_defaults(func=cmd_optimize)

    vp = subs.add_parser("verify", help="Monte Carlo checks of a solution")
    _add_common(vp)
    vp.add_argument("--points", help="points.csv from optimize")
    vp.add_argument("--samples", type=int)
    vp.add_argument("--verify-seed", dest="verify_seed", type=int)
    vp.set_defaults(func=cmd_verify)

    kp = subs.add_parser("kelvin", help="planar image of the log problem")
    _add_common(kp)
    kp.add_argument("--pole-index", dest="pole_index", type=int)
    kp.set_defaults(func=cmd_kelvin)

    ip = subs.add_parser("influence", help="per-charge influence caps")
    _add_common(ip)
    ip.set_defaults(func=cmd_influence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
