"""Kernels, sphere energies, and closed-form potentials on S^d.

Conventions
-----------
* ``s = 0`` selects the logarithmic kernel log(1/|x-y|); ``0 < s < d`` the
  Riesz kernel |x-y|^(-s).  Distances are Euclidean (chordal).
* Heights are inner products with a cap center: ``xi = <x, a>``.  A cap of
  chordal radius gamma around ``a`` is the set ``xi >= t`` with
  ``t = 1 - gamma^2/2``; the complementary region ``Sigma = {xi <= t}`` is
  where equilibrium measures live.
* ``sigma_d`` is the uniform probability measure on S^d.

All potential evaluators accept scalar or array heights and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special as sc

from .errors import SingularityError
from .specfun import reg_hyp2f1
from .sphere import Cap, cap_area

__all__ = [
    "KernelSpec", "kernel", "kernel_from_chord2", "kernel_height_derivative",
    "sphere_energy", "log_point_potential", "log_circle_potential",
    "log_cap_uniform_potential", "log_balayage_sigma_offset",
    "log_weighted_balayage_potentials", "log_balayage_masses",
    "log_cap_energy", "log_support_weighted_potential",
    "phi_log", "mhaskar_saff_coulomb", "coulomb_balayage_masses",
    "boundary_weight_dm2", "riesz_dm2_balayage_masses", "phi_dm2",
    "mhaskar_saff_phi", "SignedCapEquilibrium", "signed_cap_equilibrium_dm2",
    "signed_density_general_s", "weighted_potential_dm2",
    "weighted_potential_general_s", "riesz_support_weighted_potential",
    "log_exterior_gap", "log_exterior_gap_argmax",
]

#: chord^2 below which kernel evaluation is treated as singular
_SING_CHORD2 = 1e-24


@dataclass(frozen=True)
class KernelSpec:
    """Kernel selector: dimension d of S^d plus Riesz parameter s."""

    d: int
    s: float

    def __post_init__(self):
        if self.d < 2 or self.d != int(self.d):
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        if not 0.0 <= self.s < self.d:
            raise ValueError(f"s must satisfy 0 <= s < d, got s={self.s!r}")

    @property
    def is_log(self) -> bool:
        return self.s == 0.0


def kernel_from_chord2(spec: KernelSpec, chord2) -> np.ndarray:
    """Kernel value as a function of squared chordal distance (vectorized)."""
    c2 = np.asarray(chord2, dtype=float)
    if np.any(c2 < _SING_CHORD2):
        raise SingularityError("kernel evaluated at coincident points")
    if spec.is_log:
        return -0.5 * np.log(c2)
    return c2 ** (-0.5 * spec.s)


def kernel(spec: KernelSpec, x, y) -> float:
    """k_s(x, y) for two points on S^d."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(kernel_from_chord2(spec, np.dot(x - y, x - y)))


def kernel_height_derivative(spec: KernelSpec, chord2) -> np.ndarray:
    """d k_s / d<x,y> with chord^2 = 2 - 2<x,y> (used by gradients)."""
    c2 = np.asarray(chord2, dtype=float)
    if spec.is_log:
        return 1.0 / c2
    return spec.s * c2 ** (-0.5 * (spec.s + 2.0))


def sphere_energy(spec: KernelSpec) -> float:
    """Energy W_s(S^d) of sigma_d against itself.

    Riesz: Gamma(d) Gamma((d-s)/2) / (2^s Gamma(d/2) Gamma(d - s/2)),
    log:   -log 2 + (psi(d) - psi(d/2)) / 2.

    The gamma ratio is evaluated pairwise so that small-argument cases come
    out to the exact float (e.g. W_1(S^2) == 1.0); very large d falls back
    to log-gamma differences.
    """
    d, s = spec.d, spec.s
    if spec.is_log:
        return float(-np.log(2.0) + 0.5 * (sc.psi(d) - sc.psi(0.5 * d)))
    if d < 140:
        return float(sc.gamma(d) / sc.gamma(0.5 * d)
                     * (sc.gamma(0.5 * (d - s)) / sc.gamma(d - 0.5 * s))
                     / 2.0 ** s)
    return float(np.exp(sc.gammaln(d) + sc.gammaln(0.5 * (d - s))
                        - sc.gammaln(0.5 * d) - sc.gammaln(d - 0.5 * s)
                        - s * np.log(2.0)))


# ----------------------------------------------------------------------
# logarithmic kernel on S^2: closed-form potentials of the building blocks
# ----------------------------------------------------------------------

def log_point_potential(xi):
    """U^delta(x) = log 1/|x - a| = -log(2(1 - xi))/2 at height xi = <x, a>."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi >= 1.0 - 1e-15):
        raise SingularityError("point potential evaluated at the source")
    return -0.5 * np.log(2.0 * (1.0 - xi))


def log_circle_potential(t: float, xi):
    """Potential of the uniform unit-mass measure on the circle {u = t}.

    Closed form -log(1 - xi*t + |xi - t|)/2; constant excess over the point
    potential below the circle, matching it in the far zone.
    """
    xi = np.asarray(xi, dtype=float)
    return -0.5 * np.log(1.0 - xi * t + np.abs(xi - t))


def log_cap_uniform_potential(t: float, xi):
    """Potential of sigma_2 restricted to the cap {u >= t} (mass (1-t)/2).

    Integrating the azimuthal mean of the log kernel over the cap gives the
    two zonal branches below; they agree at xi = t.
    """
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        below = -0.25 * ((1.0 - t) * np.log1p(-xi)
                         + 2.0 * np.log(2.0) - (1.0 - t) - (1.0 + t) * np.log1p(t))
        above = -0.25 * (-(1.0 + t) * np.log1p(xi)
                         + (1.0 - t) * np.log1p(-t) + 2.0 * np.log(2.0) - (1.0 - t))
    return np.where(xi <= t, below, above)


def log_balayage_sigma_offset(t: float, xi):
    """Exterior increment log((1+t)/(1+xi))/2 of the swept sphere measure."""
    xi = np.asarray(xi, dtype=float)
    return 0.5 * (np.log1p(t) - np.log1p(xi))


def log_balayage_masses(cap: Cap) -> tuple:
    """Masses swept onto the rim circle by log balayage out of the cap.

    Returns (mass of swept cap-restricted sigma_2, mass of swept point
    charge); the log kernel preserves mass, so these are gamma^2/4 and 1.
    """
    return 0.25 * cap.gamma ** 2, 1.0


def log_cap_energy(t: float, method: str = "exact") -> float:
    """Energy W_0(Sigma) of the equilibrium measure of Sigma = {xi <= t}.

    ``exact`` uses the closed form W_0(S^2) + log(2/(1+t))/2 - (1-t)/4;
    ``quadrature`` recovers the same constant from the defining balayage
    identity by integrating the azimuthal-mean kernel over the cap.
    """
    w0 = sphere_energy(KernelSpec(2, 0.0))
    if method == "exact":
        return float(w0 + 0.5 * np.log(2.0 / (1.0 + t)) - 0.25 * (1.0 - t))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    # swept cap measure = (1-t)/2 * rim circle; evaluate both potentials at
    # the antipode xi = -1 and read off the additive constant
    xi0 = -1.0
    swept = 0.5 * (1.0 - t) * float(log_circle_potential(t, xi0))
    direct, _ = scipy.integrate.quad(
        lambda u: -0.25 * np.log(1.0 - xi0 * u + np.abs(xi0 - u)),
        t, 1.0, epsabs=1e-13, epsrel=1e-13)
    return float(w0 + swept - direct)


def log_support_weighted_potential(positions, charges, caps, points):
    """U^mu(x) + Q(x) for mu = (1+q) sigma_2 restricted off the caps.

    Exact closed form, valid at every non-source point of S^2 (inside the
    caps included).  ``positions``/``charges`` describe the external field,
    ``caps`` the excluded caps (same order), ``points`` is (n, 3).
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    charges = np.asarray(charges, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    q_total = float(charges.sum())
    w0 = sphere_energy(KernelSpec(2, 0.0))
    vals = np.full(pts.shape[0], (1.0 + q_total) * w0)
    for cap, a, qi in zip(caps, positions, charges):
        xi = np.clip(pts @ a, -1.0, 1.0)
        vals -= (1.0 + q_total) * log_cap_uniform_potential(cap.t, xi)
        vals += qi * log_point_potential(xi)
    return vals


def log_weighted_balayage_potentials(cap: Cap, xi) -> tuple:
    """Potentials of the two swept measures of the log problem on one cap.

    Returns ``(u_sigma, u_delta)`` at height(s) xi relative to the cap
    center: u_sigma for the balayage of sigma_2 onto Sigma, u_delta for the
    balayage of the unit point charge at the cap center.  Both are flat-plus-
    offset zonal functions: constant branch on Sigma, explicit decay inside
    the cap.
    """
    t = cap.t
    xi = np.asarray(xi, dtype=float)
    if np.any(xi >= 1.0 - 1e-15):
        raise SingularityError("swept potential evaluated at the cap center")
    with np.errstate(divide="ignore"):
        # the offset branch is discarded for xi <= t but still evaluated
        u_sigma = log_cap_energy(t) + np.where(
            xi <= t, 0.0, log_balayage_sigma_offset(t, xi))
    u_delta = log_circle_potential(t, xi)
    return u_sigma, u_delta


# ----------------------------------------------------------------------
# Mhaskar-Saff functionals and balayage masses
# ----------------------------------------------------------------------

def phi_log(q_total: float) -> float:
    """F-functional value for the log kernel on S^2: mass preservation
    forces Phi_0 = 1 + q independently of the cap size."""
    return 1.0 + float(q_total)


def coulomb_balayage_masses(t: float) -> tuple:
    """(||swept sigma_2||, ||swept point charge||) for s = 1 on S^2,
    sweeping out of the cap {u > t}."""
    asin_t = float(np.arcsin(t))
    sigma_mass = (np.sqrt(1.0 - t * t) + asin_t) / np.pi + 0.5
    delta_mass = asin_t / np.pi + 0.5
    return float(sigma_mass), float(delta_mass)


def mhaskar_saff_coulomb(t: float, q: float) -> float:
    """F-functional Phi_1(t) for the Coulomb kernel (s = 1) on S^2 with a
    single charge q on the cap axis: unit total mass fixes the constant."""
    sigma_mass, delta_mass = coulomb_balayage_masses(t)
    return (1.0 + q * delta_mass) / sigma_mass


def boundary_weight_dm2(t: float, d: int) -> float:
    """Weight ((1-t)/2) (1-t^2)^(d/2-1) multiplying the rim measure in the
    harmonic-case (s = d-2) sweeps."""
    return 0.5 * (1.0 - t) * (1.0 - t * t) ** (0.5 * d - 1.0)


def riesz_dm2_balayage_masses(cap: Cap, d: int) -> tuple:
    """(||swept sigma_d||, ||swept point charge||) for s = d - 2, d >= 3.

    Unlike the log case the harmonic sweep loses mass: the sphere measure
    keeps its restriction to Sigma plus W_(d-2)(S^d) B(t) on the rim, the
    point charge keeps only (4/gamma^d) B(t).
    """
    w = sphere_energy(KernelSpec(d, d - 2.0))
    b = boundary_weight_dm2(cap.t, d)
    sigma_mass = 1.0 - cap_area(d, cap.t) + w * b
    delta_mass = 4.0 / cap.gamma ** d * b
    return float(sigma_mass), float(delta_mass)


def phi_dm2(cap: Cap, q: float, d: int) -> float:
    """F-functional Phi_(d-2)(t) of a single axial charge q on S^d."""
    w = sphere_energy(KernelSpec(d, d - 2.0))
    b = boundary_weight_dm2(cap.t, d)
    sigma_region = 1.0 - cap_area(d, cap.t)
    return w * (1.0 + q * (4.0 / cap.gamma ** d) * b) / (sigma_region + w * b)


def mhaskar_saff_phi(d: int, s: float, cap: Cap, q: float) -> float:
    """Dispatch the closed-form F-functional; raises for uncovered (d, s)."""
    if d == 2 and s == 0.0:
        return phi_log(q)
    if d == 2 and s == 1.0:
        return mhaskar_saff_coulomb(cap.t, q)
    if d >= 3 and s == d - 2.0:
        return phi_dm2(cap, q, d)
    raise ValueError(
        f"no closed-form F-functional for d={d}, s={s}; supply phi explicitly")


# ----------------------------------------------------------------------
# signed cap equilibria and weighted potentials
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SignedCapEquilibrium:
    """Signed equilibrium on Sigma = S^d minus one cap, harmonic case.

    The measure is ``uniform_coefficient * sigma_d|Sigma`` plus
    ``boundary_coefficient`` times the unit rim measure.  Total mass 1.
    """

    cap: Cap
    charge: float
    d: int
    phi_value: float
    uniform_coefficient: float
    boundary_coefficient: float

    def mass(self) -> float:
        region = 1.0 - cap_area(self.d, self.cap.t)
        return self.uniform_coefficient * region + self.boundary_coefficient

    def is_nonnegative(self) -> bool:
        return self.boundary_coefficient >= 0.0


def signed_cap_equilibrium_dm2(cap: Cap, charge: float, d: int,
                               phi: float | None = None) -> SignedCapEquilibrium:
    """Signed equilibrium of the one-cap field problem at s = d - 2, d >= 3.

    With phi = None the normalizing constant comes from the unit-mass
    condition of the swept representation; passing phi explicitly evaluates
    the same two-coefficient decomposition at an externally supplied
    F-functional value (e.g. the joint constant of a multi-cap solve).
    """
    if d < 3:
        raise ValueError("harmonic signed equilibrium needs d >= 3")
    if phi is None:
        phi = phi_dm2(cap, charge, d)
    w = sphere_energy(KernelSpec(d, d - 2.0))
    b = boundary_weight_dm2(cap.t, d)
    return SignedCapEquilibrium(
        cap=cap, charge=charge, d=d, phi_value=float(phi),
        uniform_coefficient=float(phi / w),
        boundary_coefficient=float(b * (phi - 4.0 * charge / cap.gamma ** d)))


def signed_density_general_s(cap: Cap, charge: float, d: int, s: float, u,
                             phi: float | None = None):
    """Radial density u -> eta'(u) of the signed equilibrium for d-2 < s < d.

    ``u`` is the height relative to the cap center, valid on [-1, t).  The
    measure element is (omega_(d-1)/omega_d) eta'(u) (1-u^2)^(d/2-1) du
    times the uniform measure on the latitude sphere; the density blows up
    like (t-u)^((s-d)/2) at the rim.
    """
    if not cap.t < 1.0:
        raise ValueError("degenerate cap")
    if not (d - 2.0 < s < d):
        raise ValueError(f"density formula needs d-2 < s < d, got s={s!r}")
    if phi is None:
        phi = mhaskar_saff_phi(d, s, cap, charge)
    t = cap.t
    u = np.asarray(u, dtype=float)
    if np.any(u < -1.0) or np.any(u >= t):
        raise ValueError("height must lie in [-1, t) for the density formula")
    w = sphere_energy(KernelSpec(d, s))
    ratio = np.exp(sc.gammaln(0.5 * d) - sc.gammaln(d - 0.5 * s))
    z = (t - u) / (1.0 - u)
    f = np.vectorize(lambda zz: reg_hyp2f1(1.0, 0.5 * d, 1.0 - 0.5 * (d - s), zz))(z)
    # The point-balayage term carries the same 1/Gamma(1 - (d-s)/2) factor
    # that the regularized hypergeometric contributes at u -> t; this keeps
    # the rim coefficient proportional to phi - 2^(d-s) q / gamma^d and makes
    # the two balayage masses come out right (checked against the closed
    # forms for d = 2, s = 1).
    bracket = phi * f - charge * 2.0 ** (d - s) / cap.gamma ** d \
        / sc.gamma(1.0 - 0.5 * (d - s))
    out = (ratio / w) * ((1.0 - t) / (1.0 - u)) ** (0.5 * d) \
        * ((t - u) / (1.0 - t)) ** (0.5 * (s - d)) * bracket
    return out if out.ndim else float(out)


def weighted_potential_dm2(cap: Cap, charge: float, phi: float, d: int, xi):
    """Weighted potential of the swept representation at s = d - 2.

    Flat value phi on Sigma; inside the cap the three explicit terms below.
    Singular at xi = 1 (the source).
    """
    t = cap.t
    xi = np.asarray(xi, dtype=float)
    if np.any(xi >= 1.0 - 1e-15):
        raise SingularityError("weighted potential at the source point")
    # the cap branch is discarded for xi <= t but still evaluated, and it
    # divides by 1 + xi; mute the xi = -1 endpoint noise
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (1.0 + t) / (1.0 + xi)
        p = 0.5 * d - 1.0
        inside = (phi * r ** p
                  + charge * (2.0 * (1.0 - xi)) ** (-p)
                  - charge / cap.gamma ** (d - 2.0) * r ** p)
        out = np.where(xi <= t, phi, inside)
    return out if out.ndim else float(out)


def weighted_potential_general_s(cap: Cap, charge: float, phi: float,
                                 d: int, s: float, xi):
    """Weighted potential of the signed equilibrium for d-2 <= s < d.

    Equals phi on Sigma; inside the cap the deficit is a pair of regularized
    incomplete beta terms.  Singular at xi = 1.
    """
    t = cap.t
    xi = np.asarray(xi, dtype=float)
    if np.any(xi >= 1.0 - 1e-15):
        raise SingularityError("weighted potential at the source point")
    a_beta = 0.5 * (d - s)
    b_beta = 0.5 * s
    # the clipped beta arguments divide by 1 + xi, which is 0 at the
    # antipode; the quotient is clipped away, so mute the endpoint noise
    with np.errstate(divide="ignore", invalid="ignore"):
        x1 = np.clip((2.0 / (1.0 - t)) * (xi - t) / (1.0 + xi), 0.0, 1.0)
        x2 = np.clip((xi - t) / (1.0 + xi), 0.0, 1.0)
    inside = (phi
              + charge * (2.0 * (1.0 - xi)) ** (-0.5 * s) * sc.betainc(a_beta, b_beta, x1)
              - phi * sc.betainc(a_beta, b_beta, x2))
    out = np.where(xi <= t, phi, inside)
    return out if out.ndim else float(out)


def riesz_support_weighted_potential(caps, charges, c_norm: float, d: int, points):
    """U^mu + Q for mu = C sigma_d off pairwise-disjoint caps, s = d - 2.

    Exact: on Sigma every swept identity collapses and the value is C W;
    inside cap_i only that cap's terms survive.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = sphere_energy(KernelSpec(d, d - 2.0))
    vals = np.full(pts.shape[0], c_norm * w)
    for cap, qi in zip(caps, charges):
        xi = pts @ cap.center
        inside = xi > cap.t
        if np.any(inside):
            vals[inside] = weighted_potential_dm2(
                cap, qi, c_norm * w, d, xi[inside])
    return vals


# ----------------------------------------------------------------------
# exterior-gap control function of the log problem
# ----------------------------------------------------------------------

def log_exterior_gap(u, q_total: float, q_i: float):
    """f(u) = ((1+q-q_i)/2) log(1+u) + (q_i/2) log(1-u).

    The weighted log potential inside cap i exceeds its flat support value
    by f(t_i) - f(xi); f is strictly concave with a single interior maximum.
    """
    u = np.asarray(u, dtype=float)
    return 0.5 * (1.0 + q_total - q_i) * np.log1p(u) + 0.5 * q_i * np.log1p(-u)


def log_exterior_gap_argmax(q_total: float, q_i: float) -> float:
    """Stationary point u* = 1 - 2 q_i / (1 + q) of the gap function."""
    return 1.0 - 2.0 * q_i / (1.0 + q_total)
