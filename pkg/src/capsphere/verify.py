"""Independent verification of solver output.

Every check here avoids the closed forms used by the solvers: potentials are
estimated by Monte Carlo against the uniform measure (with indicator
restriction to the region, shared sample clouds across evaluation points,
and standard errors), or by one-dimensional quadrature of the azimuthal mean
of the log kernel for zonal pieces.  Reports are plain records: a check
passes iff its statistic is within its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.integrate

from . import potential as pot
from .sphere import Cap, SupportRegion, cap_area, geodesic_distance, sample_uniform
from .support import ProblemSpec, SupportSolution, PlanarEquilibrium

__all__ = [
    "VerificationReport", "PointMass", "UniformOnCap", "UniformOnSupport",
    "potential_oracle", "potential_oracle_grid", "check_variational",
    "check_cap_exclusion", "check_empirical_density", "check_planar_density",
    "scaled_solution", "support_windows",
]


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one verification check."""

    name: str
    passed: bool
    statistic: float
    tolerance: float
    details: dict = field(default_factory=dict)


# ----------------------------------------------------------------------
# measure descriptors for the potential oracle
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointMass:
    """mass * delta_point."""

    point: np.ndarray
    mass: float = 1.0


@dataclass(frozen=True, eq=False)
class UniformOnCap:
    """sigma_d restricted to the cap (the excluded disk around a source).

    mass=None keeps the natural restriction mass sigma_d(cap); otherwise the
    restriction is rescaled to the given total mass.
    """

    cap: Cap
    d: int = 2
    mass: float | None = None

    def total_mass(self) -> float:
        natural = cap_area(self.d, self.cap.t)
        return natural if self.mass is None else self.mass


@dataclass(frozen=True, eq=False)
class UniformOnSupport:
    """constant * sigma_d restricted to the region off the caps."""

    region: SupportRegion
    constant: float


def _mc_grid(descriptor, kspec: pot.KernelSpec, points: np.ndarray,
             samples: int, seed: int):
    """Shared-cloud Monte Carlo estimates of U at several points.

    Returns (values, standard errors).  One cloud of sigma_d-uniform samples
    serves every evaluation point, so errors are positively correlated
    across the grid — exactly what constancy checks want.
    """
    pts = np.atleast_2d(points)
    n_pts = pts.shape[0]
    if isinstance(descriptor, PointMass):
        c2 = np.sum((pts - descriptor.point) ** 2, axis=1)
        return descriptor.mass * pot.kernel_from_chord2(kspec, c2), np.zeros(n_pts)

    if isinstance(descriptor, UniformOnCap):
        d = descriptor.d
        def inside(y):
            return descriptor.cap.contains(y)
        scale = descriptor.total_mass() / cap_area(d, descriptor.cap.t)
    elif isinstance(descriptor, UniformOnSupport):
        d = descriptor.region.dimension
        def inside(y):
            return descriptor.region.contains(y)
        scale = descriptor.constant
    else:
        raise TypeError(f"unknown measure descriptor {descriptor!r}")

    rng = np.random.default_rng(seed)
    sums = np.zeros(n_pts)
    sq_sums = np.zeros(n_pts)
    done = 0
    chunk = 200_000
    while done < samples:
        m = min(chunk, samples - done)
        y = sample_uniform(d, m, rng)
        mask = inside(y)
        vals = np.zeros((n_pts, m))
        if np.any(mask):
            kept = y[mask]
            c2 = np.maximum(
                2.0 - 2.0 * (pts @ kept.T), 1e-300)  # sampled y != grid a.s.
            vals[:, mask] = pot.kernel_from_chord2(kspec, c2)
        sums += vals.sum(axis=1)
        sq_sums += (vals ** 2).sum(axis=1)
        done += m
    mean = sums / samples
    var = np.maximum(sq_sums / samples - mean ** 2, 0.0)
    se = scale * np.sqrt(var / samples)
    return scale * mean, se


def _quad_log_zonal(descriptor, x: np.ndarray):
    """1D quadrature of the azimuthal mean of the log kernel (d=2, s=0).

    The azimuthal mean of log 1/|x - y| over the ring at height u around an
    axis a with xi = <x, a> has the closed form -log(1 - xi u + |xi - u|)/2;
    zonal pieces then reduce to single integrals in u.
    """
    def ring_mean(xi, u):
        return -0.5 * np.log(1.0 - xi * u + np.abs(xi - u))

    if isinstance(descriptor, PointMass):
        c2 = float(np.sum((x - descriptor.point) ** 2))
        return descriptor.mass * float(
            pot.kernel_from_chord2(pot.KernelSpec(2, 0.0), c2)), 0.0

    def cap_integral(cap: Cap, xi: float):
        kink = [xi] if cap.t < xi < 1.0 else None
        return scipy.integrate.quad(
            lambda u: 0.5 * ring_mean(xi, u), cap.t, 1.0, points=kink,
            epsabs=1e-13, epsrel=1e-13, limit=200)

    if isinstance(descriptor, UniformOnCap):
        if descriptor.d != 2:
            raise ValueError("quadrature oracle is for S^2 only")
        cap = descriptor.cap
        scale = descriptor.total_mass() / cap_area(2, cap.t)
        val, err = cap_integral(cap, float(np.dot(x, cap.center)))
        return scale * val, scale * err

    if isinstance(descriptor, UniformOnSupport):
        region = descriptor.region
        if region.dimension != 2:
            raise ValueError("quadrature oracle is for S^2 only")
        # whole sphere = rings around the axis through x, minus each cap
        total, err = scipy.integrate.quad(
            lambda u: -0.25 * np.log(2.0 * (1.0 - u)), -1.0, 1.0,
            epsabs=1e-13, epsrel=1e-13, limit=200)
        for cap in region.caps:
            v, e = cap_integral(cap, float(np.dot(x, cap.center)))
            total -= v
            err += e
        return descriptor.constant * total, descriptor.constant * err

    raise TypeError(f"unknown measure descriptor {descriptor!r}")


def potential_oracle(descriptor, kspec: pot.KernelSpec, x,
                     samples: int = 10 ** 6, seed: int = 0,
                     method: str = "auto"):
    """Estimate U^measure(x) independently of the closed forms.

    Returns (value, standard_error).  method="quadrature" needs the zonal
    log case (d=2, s=0); "mc" works for every kernel; "auto" picks
    quadrature when available.
    """
    x = np.asarray(x, dtype=float)
    if method == "auto":
        method = "quadrature" if (kspec.d == 2 and kspec.is_log) else "mc"
    if method == "quadrature":
        if not (kspec.d == 2 and kspec.is_log):
            raise ValueError("quadrature oracle requires d = 2, s = 0")
        return _quad_log_zonal(descriptor, x)
    if method != "mc":
        raise ValueError(f"unknown oracle method {method!r}")
    vals, ses = _mc_grid(descriptor, kspec, x[None, :], samples, seed)
    return float(vals[0]), float(ses[0])


def potential_oracle_grid(descriptor, kspec: pot.KernelSpec, points,
                          samples: int = 10 ** 6, seed: int = 0):
    """Monte Carlo oracle at many points sharing one sample cloud."""
    vals, ses = _mc_grid(descriptor, kspec, np.atleast_2d(points), samples, seed)
    return vals, ses


# ----------------------------------------------------------------------
# checks
# ----------------------------------------------------------------------

def _external_field(spec: ProblemSpec, points: np.ndarray) -> np.ndarray:
    q = np.zeros(points.shape[0])
    kspec = spec.kernel_spec()
    for src in spec.sources:
        c2 = np.sum((points - src.position) ** 2, axis=1)
        q += src.charge * pot.kernel_from_chord2(kspec, c2)
    return q


def _rejection_sample(region: SupportRegion, n: int, rng, want_inside: bool):
    out = []
    got = 0
    while got < n:
        y = sample_uniform(region.dimension, 4 * n, rng)
        mask = region.contains(y)
        if not want_inside:
            mask = ~mask
        y = y[mask]
        out.append(y[:n - got])
        got += out[-1].shape[0]
    return np.vstack(out)


def check_variational(solution: SupportSolution, spec: ProblemSpec,
                      grid: int = 100, samples: int = 10 ** 6, seed: int = 1,
                      tol_interior: float | None = None,
                      tol_exterior: float | None = None) -> VerificationReport:
    """Frostman test of a candidate (region, C) pair by Monte Carlo.

    Interior: U + Q over support samples must be constant within
    tol_interior (default 3x the mean MC standard error).  Exterior: the
    minimum of U + Q over samples inside the caps must not drop below the
    interior mean by more than tol_exterior (default 3 SE + 1e-3).
    """
    region = solution.region
    rng = np.random.default_rng(seed)
    x_in = _rejection_sample(region, grid, rng, True)
    x_out = _rejection_sample(region, grid, rng, False)
    descriptor = UniformOnSupport(region, solution.c_norm)
    kspec = spec.kernel_spec()
    pts = np.vstack((x_in, x_out))
    u, se = _mc_grid(descriptor, kspec, pts, samples, seed + 1)
    w = u + _external_field(spec, pts)
    w_in, w_out = w[:grid], w[grid:]
    se_mean = float(se.mean())

    t_in = 3.0 * se_mean if tol_interior is None else tol_interior
    t_out = 3.0 * se_mean + 1e-3 if tol_exterior is None else tol_exterior
    interior_spread = float(np.std(w_in))
    exterior_gap = float(w_out.min() - w_in.mean())
    interior_ok = interior_spread <= t_in
    exterior_ok = exterior_gap >= -t_out
    return VerificationReport(
        name="variational",
        passed=bool(interior_ok and exterior_ok),
        statistic=interior_spread,
        tolerance=t_in,
        details={
            "interior_spread": interior_spread,
            "interior_tolerance": t_in,
            "interior_ok": bool(interior_ok),
            "interior_mean": float(w_in.mean()),
            "exterior_gap": exterior_gap,
            "exterior_tolerance": t_out,
            "exterior_ok": bool(exterior_ok),
            "se_mean": se_mean,
            "samples": samples,
            "grid": grid,
            "seed": seed,
        })


def scaled_solution(solution: SupportSolution, factor: float) -> SupportSolution:
    """Same cap centers with radii scaled by `factor`, renormalized to unit
    mass.  Used as a negative control: for factor != 1 the uniform candidate
    stops being an equilibrium measure."""
    region = solution.region
    caps = tuple(Cap(c.center, min(factor * c.gamma, 2.0 - 1e-12))
                 for c in region.caps)
    new_region = SupportRegion(region.dimension, caps)
    c_norm = 1.0 / new_region.sigma_mass()
    return replace(solution, region=new_region, c_norm=c_norm)


def check_cap_exclusion(points, caps, margin: float = 1e-6) -> VerificationReport:
    """Count points strictly inside any cap (chordal margin applied)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    inside = np.zeros(pts.shape[0], dtype=bool)
    worst = -np.inf
    for cap in caps:
        chord = np.sqrt(np.maximum(2.0 - 2.0 * (pts @ cap.center), 0.0))
        inside |= chord < cap.gamma - margin
        worst = max(worst, float((cap.gamma - chord).max()))
    count = int(inside.sum())
    return VerificationReport(
        name="cap_exclusion",
        passed=count == 0,
        statistic=float(count),
        tolerance=0.0,
        details={"violations": count, "margin": margin,
                 "worst_penetration": worst, "n_points": pts.shape[0]})


def support_windows(solution: SupportSolution, n: int, radius_geodesic: float,
                    seed: int = 7) -> list:
    """n test caps of the given geodesic radius fully inside the support."""
    region = solution.region
    rng = np.random.default_rng(seed)
    windows = []
    attempts = 0
    while len(windows) < n:
        attempts += 1
        if attempts > 100_000:
            raise RuntimeError("could not place windows inside the support")
        c = sample_uniform(region.dimension, 1, rng)[0]
        ok = all(geodesic_distance(c, cap.center) >= radius_geodesic + cap.alpha
                 for cap in region.caps)
        if ok:
            windows.append(Cap.from_geodesic(c, radius_geodesic))
    return windows


def check_empirical_density(points, solution: SupportSolution, windows,
                            tol: float = 0.02) -> VerificationReport:
    """Compare window occupancy of a configuration with C sigma_d(window).

    Windows must lie inside the support (error otherwise).  Each window
    passes if |count/N - C sigma(W)| <= tol + 3 sqrt(C sigma(W)/N), i.e.
    tolerance plus three binomial standard errors.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    region = solution.region
    worst = 0.0
    results = []
    for w in windows:
        for cap in region.caps:
            if geodesic_distance(w.center, cap.center) < w.alpha + cap.alpha:
                raise ValueError("window overlaps an excluded cap")
        expected = solution.c_norm * cap_area(region.dimension, w.t)
        chord = np.sqrt(np.maximum(2.0 - 2.0 * (pts @ w.center), 0.0))
        frac = float(np.mean(chord <= w.gamma))
        allowance = tol + 3.0 * np.sqrt(expected / n)
        dev = abs(frac - expected)
        worst = max(worst, dev - allowance)
        results.append({"expected": expected, "observed": frac,
                        "allowance": allowance})
    return VerificationReport(
        name="empirical_density",
        passed=worst <= 0.0,
        statistic=worst,
        tolerance=0.0,
        details={"windows": results, "n_points": n, "base_tol": tol})


def _polar_grid_integral(f, center: complex, radius: float,
                         nr: int = 160, na: int = 256) -> float:
    """Gauss-Legendre x trapezoid polar quadrature of f over a disc."""
    r_nodes, r_weights = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * radius * (r_nodes + 1.0)
    wr = 0.5 * radius * r_weights
    ang = 2.0 * np.pi * np.arange(na) / na
    z = center + r[:, None] * np.exp(1j * ang)[None, :]
    vals = f(z)
    return float((2.0 * np.pi / na) * np.sum(wr[:, None] * vals * r[:, None]))


def check_planar_density(planar: PlanarEquilibrium, grid: int = 64,
                         seed: int = 11, mass_tol: float = 1e-3,
                         laplace_tol: float = 1e-5) -> VerificationReport:
    """Two independent consistency checks of the planar solution.

    Mass: polar quadrature of the density over the outer disk minus the
    excluded discs must integrate to 1 within mass_tol.  Field: at interior
    probe points away from all boundaries, (1/2 pi) * the finite-difference
    Laplacian of the external field must equal the density within
    laplace_tol (the planar Gauss theorem).
    """
    dens = planar.density
    total = _polar_grid_integral(dens, 0.0, planar.outer_radius)
    for disc in planar.excluded_discs:
        total -= _polar_grid_integral(dens, disc.center, disc.radius)
    mass_err = abs(total - 1.0)

    # probe points with clearance from every boundary so the FD stencil of
    # the log terms stays well-conditioned
    rng = np.random.default_rng(seed)
    margin = 0.25
    probes = []
    attempts = 0
    while len(probes) < grid and attempts < 100_000:
        attempts += 1
        z = (rng.uniform(-1.0, 1.0) + 1j * rng.uniform(-1.0, 1.0)) \
            * planar.outer_radius
        if abs(z) > planar.outer_radius - margin:
            continue
        if any(abs(z - dsc.center) < dsc.radius + margin
               for dsc in planar.excluded_discs):
            continue
        probes.append(z)
    if len(probes) < grid:
        raise RuntimeError("could not place probe points inside the support")
    h = 2e-4
    lap_err = 0.0
    for z in probes:
        stencil = (planar.field(z + h) + planar.field(z - h)
                   + planar.field(z + 1j * h) + planar.field(z - 1j * h)
                   - 4.0 * planar.field(z))
        lap = stencil / h ** 2 / (2.0 * np.pi)
        lap_err = max(lap_err, abs(lap - dens(z)))

    passed = mass_err <= mass_tol and lap_err <= laplace_tol
    return VerificationReport(
        name="planar_density",
        passed=bool(passed),
        statistic=mass_err,
        tolerance=mass_tol,
        details={"mass_integral": total, "mass_error": mass_err,
                 "mass_tol": mass_tol, "laplacian_error": lap_err,
                 "laplace_tol": laplace_tol, "probes": grid})
