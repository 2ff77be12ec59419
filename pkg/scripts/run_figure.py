#!/usr/bin/env python3
"""Reproduce one reference charge layout end to end.

Solves the extremal support (for kernels with a closed-form solver),
optimizes an N-point configuration in the same external field, runs the
verification battery, and writes points.csv plus summary.json.  With
--plot an orthographic scatter with the cap rims goes next to them.

    python scripts/run_figure.py 1-left -N 500 --out out/fig1-left --plot
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from capsphere import (
    OptimizerSettings, check_cap_exclusion, check_empirical_density,
    check_variational, influence_radii, multistart, preset, preset_names,
    solve_log, solve_riesz_dm2, support_windows,
)


def solve_support(spec):
    """(solution or None, exclusion caps).  Coulomb has radii but no solve."""
    if spec.s == 0.0 and spec.d == 2:
        sol = solve_log(spec)
        return sol, sol.region.caps
    if spec.d >= 3 and spec.s == spec.d - 2.0:
        sol = solve_riesz_dm2(spec)
        return sol, sol.region.caps
    return None, influence_radii(spec).caps


def plot_configuration(points, caps, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 4.5))
    for ax, keep in zip(axes, (points[:, 2] >= 0, points[:, 2] < 0)):
        ax.set_aspect("equal")
        ax.add_artist(plt.Circle((0, 0), 1.0, fill=False, lw=0.8))
        ax.scatter(points[keep, 0], points[keep, 1], s=4, c="k")
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
    axes[0].set_title("upper hemisphere (z >= 0)")
    axes[1].set_title("lower hemisphere (z < 0)")
    # rim of each cap, traced in 3d and projected to the matching panel
    u = np.linspace(0.0, 2.0 * np.pi, 200)
    for cap in caps:
        e1 = np.eye(3)[np.argmin(np.abs(cap.center))]
        e1 = e1 - np.dot(e1, cap.center) * cap.center
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(cap.center, e1)
        rim = (cap.t * cap.center[None, :]
               + np.sqrt(1.0 - cap.t ** 2)
               * (np.cos(u)[:, None] * e1 + np.sin(u)[:, None] * e2))
        for ax, keep in zip(axes, (rim[:, 2] >= 0, rim[:, 2] < 0)):
            ax.plot(np.where(keep, rim[:, 0], np.nan),
                    np.where(keep, rim[:, 1], np.nan), "r-", lw=1.0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("figure", choices=preset_names())
    ap.add_argument("-N", "--n-points", type=int, default=500)
    ap.add_argument("--restarts", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=10 ** 6,
                    help="Monte Carlo budget of the variational check")
    ap.add_argument("--out", default=None)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    spec = preset(args.figure)
    out = Path(args.out or f"out/fig{args.figure}")
    out.mkdir(parents=True, exist_ok=True)
    summary = {"figure": args.figure, "d": spec.d, "s": spec.s,
               "n_points": args.n_points, "seed": args.seed}

    solution, caps = solve_support(spec)
    if solution is not None:
        summary["c_norm"] = solution.c_norm
        summary["f_q"] = solution.f_q
        summary["feasible"] = solution.feasible
        print(f"support: C={solution.c_norm:.12g} F_Q={solution.f_q:.12g} "
              f"feasible={solution.feasible}")
        if not solution.feasible:
            print("caps overlap; nothing to optimize against", file=sys.stderr)
            (out / "summary.json").write_text(json.dumps(summary, indent=2))
            return 2
    summary["cap_radii"] = [cap.gamma for cap in caps]

    t0 = time.time()
    cfg = multistart(spec, args.n_points,
                     OptimizerSettings(restart_count=args.restarts,
                                       seed=args.seed))
    summary["energy"] = cfg.energy
    summary["grad_inf_norm"] = cfg.grad_inf_norm
    summary["converged"] = cfg.converged
    summary["optimize_seconds"] = round(time.time() - t0, 2)
    print(f"optimize: E={cfg.energy:.12g} pg={cfg.grad_inf_norm:.2e} "
          f"converged={cfg.converged} ({summary['optimize_seconds']}s)")

    reports = [check_cap_exclusion(cfg.points, caps)]
    if solution is not None and solution.feasible:
        t0 = time.time()
        reports.append(check_variational(solution, spec,
                                         samples=args.samples))
        print(f"variational MC: {time.time() - t0:.1f}s")
        windows = support_windows(solution, 20, 0.4)
        reports.append(check_empirical_density(cfg.points, solution, windows))
    for rep in reports:
        summary[rep.name] = {"passed": rep.passed, "statistic": rep.statistic}
        print(f"{rep.name}: {'ok' if rep.passed else 'FAILED'} "
              f"(statistic {rep.statistic:.3e})")

    np.savetxt(out / "points.csv", cfg.points, delimiter=",",
               header="x,y,z", comments="", fmt="%.17g")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if args.plot:
        plot_configuration(cfg.points, caps, out / "configuration.png")
    print(f"artifacts in {out}/")
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
