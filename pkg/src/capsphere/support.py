"""Solvers for equilibrium supports under point-charge external fields.

Three regimes are covered on top of the closed forms in :mod:`.potential`:

* log kernel on S^2 — the caps of the extremal support have explicit
  chordal radii and the normalization is mass preservation;
* harmonic kernel s = d - 2 on S^d, d >= 3 — the cap radii depend on a
  normalization constant C fixed by a scalar equation g(C) = 1, solved by
  bracketing/bisection on the monotone g;
* per-charge influence caps on S^2 for s in {0, 1}, driven by the reduced
  charges q_i / (1 + q - q_i), with the Coulomb radius the root of a
  transcendental equation in the geodesic radius.

The log solution additionally maps to the complex plane through the Kelvin
transformation with pole at one of the sources.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import InfeasibleSupportError
from . import potential as pot
from .sphere import (
    Cap, SupportRegion, cap_area, caps_pairwise_disjoint,
    sample_uniform, sphere_point, stereographic,
)

__all__ = [
    "Source", "ProblemSpec", "SupportSolution", "InfluenceRegions",
    "PlanarDisc", "PlanarEquilibrium", "reduced_charges", "solve_log",
    "solve_riesz_dm2", "influence_radii", "coulomb_alpha_root",
    "kelvin_planar",
]


@dataclass(frozen=True, eq=False)
class Source:
    """A positive point charge sitting on the sphere."""

    position: np.ndarray
    charge: float

    def __post_init__(self):
        object.__setattr__(self, "position", sphere_point(self.position))
        if not float(self.charge) > 0.0:
            raise ValueError(f"charges must be positive, got {self.charge!r}")
        object.__setattr__(self, "charge", float(self.charge))


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """External-field problem: kernel (d, s) plus the list of sources.

    An empty source list is allowed (field-free discrete optimization);
    the support solvers themselves require at least one source.
    """

    d: int
    s: float
    sources: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.d < 2 or self.d != int(self.d):
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        if not 0.0 <= self.s < self.d:
            raise ValueError(f"s must satisfy 0 <= s < d, got {self.s!r}")
        object.__setattr__(self, "sources", tuple(self.sources))
        for src in self.sources:
            if src.position.size != self.d + 1:
                raise ValueError("source position dimension does not match d")
        for i in range(len(self.sources)):
            for j in range(i + 1, len(self.sources)):
                gap = np.linalg.norm(self.sources[i].position
                                     - self.sources[j].position)
                if gap < 1e-12:
                    raise ValueError(f"sources {i} and {j} coincide")

    @property
    def m(self) -> int:
        return len(self.sources)

    @property
    def q_total(self) -> float:
        return float(sum(src.charge for src in self.sources))

    def positions(self) -> np.ndarray:
        return np.array([src.position for src in self.sources], dtype=float)

    def charges(self) -> np.ndarray:
        return np.array([src.charge for src in self.sources], dtype=float)

    def kernel_spec(self) -> pot.KernelSpec:
        return pot.KernelSpec(self.d, self.s)


@dataclass(frozen=True, eq=False)
class SupportSolution:
    """Extremal support plus its normalization and flat potential value.

    feasible=False means the excluded caps of the candidate solution
    overlap, so the closed-form construction does not apply; the candidate
    geometry and the violating pairs are still reported.
    """

    region: SupportRegion
    c_norm: float
    f_q: float
    feasible: bool
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class InfluenceRegions:
    """Per-charge caps that optimal discrete configurations avoid."""

    caps: tuple
    reduced_charges: tuple
    s: float


def reduced_charges(spec: ProblemSpec) -> np.ndarray:
    """q_i / (1 + q - q_i): the single-charge strength that reproduces each
    source's influence cap inside the full multi-source problem."""
    q = spec.q_total
    qs = spec.charges()
    return qs / (1.0 + q - qs)


def _require_sources(spec: ProblemSpec):
    if spec.m < 1:
        raise ValueError("support solvers need at least one source")


def _support_sample_point(region: SupportRegion, seed: int = 2718) -> np.ndarray:
    """Deterministic point of the closed region (first surviving draw)."""
    n = 512
    while True:
        pts = sample_uniform(region.dimension, n, seed)
        inside = region.contains(pts)
        if np.any(inside):
            return pts[np.argmax(inside)]
        n *= 4  # tiny support; widen the net


def solve_log(spec: ProblemSpec) -> SupportSolution:
    """Extremal support and measure for the log kernel on S^2.

    Cap radii eps_i = 2 sqrt(q_i / (1 + q)); when the caps are pairwise
    disjoint the equilibrium measure is (1 + q) sigma_2 off the caps and the
    flat value F_Q is read off the exact weighted potential.
    """
    _require_sources(spec)
    if spec.d != 2 or spec.s != 0.0:
        raise ValueError("solve_log handles d = 2, s = 0 only")
    q = spec.q_total
    eps = 2.0 * np.sqrt(spec.charges() / (1.0 + q))
    caps = tuple(Cap(src.position, e) for src, e in zip(spec.sources, eps))
    region = SupportRegion(2, caps)
    report = caps_pairwise_disjoint(caps)
    diagnostics = {
        "violations": report.violations,
        "min_margin": report.min_margin,
    }
    if not report.disjoint:
        return SupportSolution(region, 1.0 + q, float("nan"), False, diagnostics)
    x0 = _support_sample_point(region)
    f_q = float(pot.log_support_weighted_potential(
        spec.positions(), spec.charges(), caps, x0)[0])
    diagnostics["support_point"] = x0
    return SupportSolution(region, 1.0 + q, f_q, True, diagnostics)


def _riesz_gamma(c_norm: float, charges: np.ndarray, w: float, d: int) -> np.ndarray:
    return (4.0 * charges / (c_norm * w)) ** (1.0 / d)


def _riesz_g(c_norm: float, charges: np.ndarray, w: float, d: int) -> float:
    """g(C) = C sigma_d(Sigma_gamma(C)); increasing and continuous in C."""
    gam = _riesz_gamma(c_norm, charges, w, d)
    # an oversized "cap" (gamma >= 2) swallows the sphere; keep g monotone
    # by letting its area saturate at 1
    area = sum(1.0 if g >= 2.0 else cap_area(d, 1.0 - 0.5 * g * g)
               for g in gam)
    return c_norm * max(0.0, 1.0 - float(area))


def solve_riesz_dm2(spec: ProblemSpec, tol: float = 1e-12,
                    max_iter: int = 400) -> SupportSolution:
    """Extremal support for the harmonic kernel s = d - 2 on S^d, d >= 3.

    The cap radii gamma_i(C) = (4 q_i / (C W))^(1/d) and the normalization
    C solve g(C) = C sigma_d(Sigma) = 1; g is monotone, so a geometrically
    expanded bracket plus bisection pins C* to |g(C*) - 1| <= tol.
    """
    _require_sources(spec)
    if spec.d < 3 or spec.s != spec.d - 2.0:
        raise ValueError("solve_riesz_dm2 handles s = d - 2, d >= 3 only")
    d = spec.d
    w = pot.sphere_energy(pot.KernelSpec(d, d - 2.0))
    charges = spec.charges()

    lo, hi = 1.0, 2.0
    it = 0
    while _riesz_g(hi, charges, w, d) < 1.0:
        lo, hi = hi, 2.0 * hi
        it += 1
        if it > 60:
            raise ArithmeticError("failed to bracket the normalization")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _riesz_g(mid, charges, w, d) < 1.0:
            lo = mid
        else:
            hi = mid
    c_norm = 0.5 * (lo + hi)
    residual = _riesz_g(c_norm, charges, w, d) - 1.0
    if abs(residual) > tol:
        raise ArithmeticError(
            f"bisection stalled with residual {residual:.3e} > tol")

    gam = _riesz_gamma(c_norm, charges, w, d)
    caps = tuple(Cap(src.position, g) for src, g in zip(spec.sources, gam))
    region = SupportRegion(d, caps)
    report = caps_pairwise_disjoint(caps)
    diagnostics = {
        "violations": report.violations,
        "min_margin": report.min_margin,
        "residual": float(residual),
        "sphere_energy": w,
    }
    if not report.disjoint:
        return SupportSolution(region, c_norm, float("nan"), False, diagnostics)
    return SupportSolution(region, c_norm, c_norm * w, True, diagnostics)


def coulomb_alpha_root(q_bar: float, tol: float = 1e-12) -> float:
    """Geodesic influence radius for the Coulomb kernel (d = 2, s = 1).

    Root in (0, pi) of
        (q̄+1) pi cos(a) - q̄ a cos(a) + q̄ sin(a) - pi = 0,
    which is strictly decreasing from q̄ pi to -2 pi, hence has exactly one
    root; the residual of the returned alpha is verified against tol.
    """
    if not q_bar > 0.0:
        raise ValueError("reduced charge must be positive")

    def h(a: float) -> float:
        return ((q_bar + 1.0) * np.pi * np.cos(a) - q_bar * a * np.cos(a)
                + q_bar * np.sin(a) - np.pi)

    alpha = float(scipy.optimize.brentq(h, 1e-12, np.pi - 1e-12,
                                        xtol=1e-15, rtol=8.9e-16))
    if abs(h(alpha)) > tol:
        raise ArithmeticError(f"root residual {h(alpha):.3e} exceeds {tol}")
    return alpha


def influence_radii(spec: ProblemSpec) -> InfluenceRegions:
    """Caps of electrostatic influence on S^2 for s in {0, 1}.

    Each cap is computed from the reduced charge q̄_i alone: for s = 0 the
    chordal radius 2 sqrt(q̄/(1+q̄)) coincides with the extremal-support
    radius; for s = 1 the geodesic radius solves the transcendental
    characteristic equation.  The caps may overlap; exclusion of optimal
    points holds for each cap individually.
    """
    _require_sources(spec)
    if spec.d != 2 or spec.s not in (0.0, 1.0):
        raise ValueError("influence radii cover d = 2 with s in {0, 1} only")
    qb = reduced_charges(spec)
    if spec.s == 0.0:
        gammas = 2.0 * np.sqrt(qb / (1.0 + qb))
        caps = tuple(Cap(src.position, g)
                     for src, g in zip(spec.sources, gammas))
    else:
        caps = tuple(
            Cap.from_geodesic(src.position, coulomb_alpha_root(float(b)))
            for src, b in zip(spec.sources, qb))
    return InfluenceRegions(caps, tuple(float(b) for b in qb), spec.s)


# ----------------------------------------------------------------------
# Kelvin transformation of the log problem to the complex plane
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarDisc:
    center: complex
    radius: float


@dataclass(frozen=True, eq=False)
class PlanarEquilibrium:
    """Planar extremal support: a centered disk minus excluded discs.

    The density of the extremal measure is density_scale / (1 + |z|^2)^2
    on the support.  plane_sources are the images of the non-pole charges;
    the pole charge maps to the point at infinity.
    """

    outer_radius: float
    excluded_discs: tuple
    density_scale: float
    pole_index: int
    pole: np.ndarray
    plane_sources: tuple
    plane_charges: tuple
    q_total: float

    def density(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = self.density_scale / (1.0 + np.abs(z) ** 2) ** 2
        return out if out.ndim else float(out)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        inside = np.abs(z) <= self.outer_radius
        for disc in self.excluded_discs:
            inside &= np.abs(z - disc.center) >= disc.radius
        return inside if inside.ndim else bool(inside)

    def field(self, z) -> np.ndarray:
        """External field of the planar problem (grows like q_m log |z|)."""
        z = np.asarray(z, dtype=complex)
        out = 0.5 * (1.0 + self.q_total) * np.log1p(np.abs(z) ** 2)
        for w, qi in zip(self.plane_sources, self.plane_charges):
            out = out + qi * np.log(1.0 / np.abs(z - w))
        return out if out.ndim else float(out)


def _diametral_rim_points(cap: Cap, pole: np.ndarray):
    """Two opposite rim points of the cap on a great circle through pole."""
    a = cap.center
    w = pole - np.dot(pole, a) * a
    nw = np.linalg.norm(w)
    if nw < 1e-9:
        # cap centered at the pole's antipode (or pole): any rim diameter
        w = np.array([1.0, 0.0, 0.0]) - a[0] * a
        nw = np.linalg.norm(w)
        if nw < 1e-9:
            w = np.array([0.0, 1.0, 0.0]) - a[1] * a
            nw = np.linalg.norm(w)
    w = w / nw
    t, r = cap.t, np.sqrt(1.0 - cap.t ** 2)
    return t * a + r * w, t * a - r * w


def kelvin_planar(spec: ProblemSpec, pole_index: int | None = None) -> PlanarEquilibrium:
    """Map the feasible log problem to the plane via the Kelvin transform.

    The charge at ``pole_index`` (default: the last source) becomes the
    point at infinity; its influence cap maps to the exterior of the disk
    of radius sqrt((1 + q - q_pole)/q_pole), every other cap to an open
    disc.  Raises InfeasibleSupportError when the caps overlap.
    """
    solution = solve_log(spec)
    if not solution.feasible:
        raise InfeasibleSupportError(
            f"influence caps overlap: {solution.diagnostics['violations']}")
    if pole_index is None:
        pole_index = spec.m - 1
    if not 0 <= pole_index < spec.m:
        raise ValueError("pole index out of range")
    pole = spec.sources[pole_index].position
    q = spec.q_total
    q_pole = spec.sources[pole_index].charge
    outer_radius = float(np.sqrt((1.0 + q - q_pole) / q_pole))

    discs, plane_sources, plane_charges = [], [], []
    for i, (src, cap) in enumerate(zip(spec.sources, solution.region.caps)):
        if i == pole_index:
            continue
        p1, p2 = _diametral_rim_points(cap, pole)
        z1, z2 = stereographic(p1, pole), stereographic(p2, pole)
        discs.append(PlanarDisc(0.5 * (z1 + z2), 0.5 * abs(z1 - z2)))
        plane_sources.append(stereographic(src.position, pole))
        plane_charges.append(src.charge)
    return PlanarEquilibrium(
        outer_radius=outer_radius,
        excluded_discs=tuple(discs),
        density_scale=(1.0 + q) / np.pi,
        pole_index=pole_index,
        pole=pole,
        plane_sources=tuple(plane_sources),
        plane_charges=tuple(plane_charges),
        q_total=q,
    )
