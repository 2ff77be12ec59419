#!/usr/bin/env python3
"""Meridian profile of the one-cap signed equilibrium and its potential.

For a single point charge q on S^d and a trial cap of height t around it,
tabulates the signed density on the complement and the weighted potential
along a meridian, then reports the rim diagnostics that decide whether the
cap is the true cap of influence (density >= 0, potential dips below the
flat value off the cap).

    python scripts/potential_profile.py --d 2 --s 1 --t 0.6 --charge 0.3
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from capsphere import Cap
from capsphere.potential import (
    mhaskar_saff_phi, signed_cap_equilibrium_dm2, signed_density_general_s,
    weighted_potential_dm2, weighted_potential_general_s,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=0.6,
                    help="height of the cap rim around the charge")
    ap.add_argument("--charge", type=float, default=0.3)
    ap.add_argument("--grid", type=int, default=400)
    ap.add_argument("--out", default="out/profile.csv")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    d, s, t, q = args.d, args.s, args.t, args.charge
    north = [0.0] * d + [1.0]
    cap = Cap(north, float(np.sqrt(2.0 - 2.0 * t)))
    harmonic = s == d - 2.0 and d >= 3
    phi = mhaskar_saff_phi(d, s, cap, q)
    print(f"d={d} s={s} t={t} q={q}: Phi={phi:.12g}")

    u = np.linspace(-1.0, t - 1e-9, args.grid)
    xi = np.linspace(-1.0, 1.0 - 1e-9, args.grid)  # stop short of the source
    if harmonic:
        eq = signed_cap_equilibrium_dm2(cap, q, d, phi=phi)
        density = np.full_like(u, eq.uniform_coefficient)
        rim_value = eq.boundary_coefficient
        print(f"uniform part {eq.uniform_coefficient:.12g}, "
              f"rim atom {rim_value:.12g} "
              f"({'signed' if rim_value < 0 else 'nonnegative'})")
        potential = weighted_potential_dm2(cap, q, phi, d, xi)
    else:
        density = signed_density_general_s(cap, q, d, s, u, phi=phi)
        # rim sign carried by phi - 2^(d-s) q / gamma^d
        rim_value = phi - 2.0 ** (d - s) * q / cap.gamma ** d
        print(f"rim coefficient {rim_value:.12g} "
              f"({'signed' if rim_value < 0 else 'nonnegative'})")
        potential = weighted_potential_general_s(cap, q, phi, d, s, xi)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("u,density,xi,weighted_potential\n")
        for row in zip(u, density, xi, potential):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    print(f"wrote {out}")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
        ax1.plot(u, density, "b-")
        ax1.axhline(0.0, color="0.7", lw=0.8)
        ax1.set_ylabel("signed density")
        ax2.plot(xi, potential, "k-")
        ax2.axhline(phi, color="r", ls="--", lw=0.8, label="Phi")
        ax2.axvline(t, color="0.7", lw=0.8)
        ax2.set_xlabel("height u")
        ax2.set_ylabel("weighted potential")
        ax2.legend()
        fig.tight_layout()
        png = out.with_suffix(".png")
        fig.savefig(png, dpi=150)
        print(f"wrote {png}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
