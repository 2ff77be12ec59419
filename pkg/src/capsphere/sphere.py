"""Geometry of the unit sphere S^d in R^(d+1).

Points are plain numpy arrays of unit length.  A spherical cap is stored by
its center and *chordal* radius gamma in (0, 2); the height t = 1 - gamma^2/2
and geodesic radius alpha = 2 arcsin(gamma/2) are derived, never stored, so
the three parametrizations cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.special as sc

from .errors import PointAtInfinityError

__all__ = [
    "sphere_point", "geodesic_distance", "Cap", "SupportRegion",
    "DisjointnessReport", "caps_pairwise_disjoint", "cap_area",
    "sample_uniform", "stereographic", "stereographic_inverse",
]

#: agreement required between redundant cap parametrizations
PARAM_TOL = 1e-12


def sphere_point(coords) -> np.ndarray:
    """Return coords renormalized to unit length (copy)."""
    x = np.asarray(coords, dtype=float)
    n = np.linalg.norm(x)
    if n < 1e-12:
        raise ValueError("cannot normalize a (near-)zero vector to the sphere")
    return x / n


def geodesic_distance(x, y) -> float:
    """Great-circle distance arccos(<x, y>), clamped against rounding."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.arccos(np.clip(np.dot(x, y), -1.0, 1.0)))


@dataclass(frozen=True, eq=False)
class Cap:
    """Closed spherical cap {x : |x - center| <= gamma} (chordal radius)."""

    center: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "center", sphere_point(self.center))
        g = float(self.gamma)
        if not 0.0 < g < 2.0:
            raise ValueError(f"chordal radius must lie in (0, 2), got {g!r}")
        object.__setattr__(self, "gamma", g)

    @property
    def t(self) -> float:
        """Height of the cap boundary: <x, center> = t on the rim."""
        return 1.0 - 0.5 * self.gamma ** 2

    @property
    def alpha(self) -> float:
        """Geodesic radius."""
        return 2.0 * np.arcsin(0.5 * self.gamma)

    @classmethod
    def from_height(cls, center, t: float) -> "Cap":
        if not -1.0 < t < 1.0:
            raise ValueError(f"cap height must lie in (-1, 1), got {t!r}")
        return cls(center, np.sqrt(2.0 * (1.0 - t)))

    @classmethod
    def from_geodesic(cls, center, alpha: float) -> "Cap":
        if not 0.0 < alpha < np.pi:
            raise ValueError(f"geodesic radius must lie in (0, pi), got {alpha!r}")
        return cls(center, 2.0 * np.sin(0.5 * alpha))

    def heights(self, points) -> np.ndarray:
        """Inner products <x, center> for an (n, d+1) array of points."""
        return np.atleast_2d(np.asarray(points, dtype=float)) @ self.center

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        """Membership in the open cap shrunk by a chordal `margin`."""
        # chord < gamma - margin  <=>  strict membership with a safety rim
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        chord2 = np.maximum(2.0 - 2.0 * (pts @ self.center), 0.0)
        return np.sqrt(chord2) < self.gamma - margin


@dataclass(frozen=True, eq=False)
class SupportRegion:
    """Sphere minus a finite union of open caps: Sigma = S^d \\ U int(cap_i)."""

    dimension: int
    caps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("sphere dimension must be >= 2")
        object.__setattr__(self, "caps", tuple(self.caps))
        for c in self.caps:
            if c.center.size != self.dimension + 1:
                raise ValueError("cap center dimension does not match region")

    def sigma_mass(self) -> float:
        """sigma_d(Sigma) assuming the caps are pairwise disjoint."""
        return 1.0 - sum(cap_area(self.dimension, c.t) for c in self.caps)

    def contains(self, points) -> np.ndarray:
        """True for points in the closed region (cap boundaries included)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.ones(pts.shape[0], dtype=bool)
        for c in self.caps:
            inside &= ~c.contains(pts)
        return inside


@dataclass(frozen=True)
class DisjointnessReport:
    """Result of the pairwise cap-separation test.

    margin[i, j] = geodesic(center_i, center_j) - (alpha_i + alpha_j);
    nonnegative margins (tangency included) mean the closed caps meet in at
    most a point and the measure-theoretic constructions go through.
    """

    disjoint: bool
    violations: tuple  # ((i, j, margin), ...) for margin < -tol pairs
    min_margin: float

    def __bool__(self) -> bool:
        return self.disjoint


def caps_pairwise_disjoint(caps, tol: float = 1e-12) -> DisjointnessReport:
    """Check that closed caps intersect pairwise in at most boundary points."""
    caps = list(caps)
    violations = []
    min_margin = np.inf
    for i in range(len(caps)):
        for j in range(i + 1, len(caps)):
            d = geodesic_distance(caps[i].center, caps[j].center)
            m = d - (caps[i].alpha + caps[j].alpha)
            min_margin = min(min_margin, m)
            if m < -tol:
                violations.append((i, j, float(m)))
    return DisjointnessReport(not violations, tuple(violations), float(min_margin))


def cap_area(d: int, t: float) -> float:
    """Normalized surface measure sigma_d of a cap of height t on S^d.

    Equals I_{(1-t)/2}(d/2, d/2) (regularized incomplete beta); for d = 2
    this collapses to the exact elementary value (1 - t)/2.
    """
    if d < 2 or d != int(d):
        raise ValueError(f"sphere dimension must be an integer >= 2, got {d!r}")
    if not -1.0 <= t <= 1.0:
        raise ValueError(f"cap height must lie in [-1, 1], got {t!r}")
    if d == 2:
        return 0.5 * (1.0 - t)
    return float(sc.betainc(0.5 * d, 0.5 * d, 0.5 * (1.0 - t)))


def sample_uniform(d: int, n: int, seed=None) -> np.ndarray:
    """n independent sigma_d-uniform points on S^d, shape (n, d+1).

    Accepts an int seed or a numpy Generator (shared-stream use).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = rng.standard_normal((n, d + 1))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    # resample the (measure-zero, but finite-precision) degenerate draws
    while np.any(norms < 1e-12):
        bad = norms[:, 0] < 1e-12
        x[bad] = rng.standard_normal((int(bad.sum()), d + 1))
        norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / norms


def _pole_frame(pole: np.ndarray):
    """Deterministic orthonormal basis (e1, e2) of pole-perp in R^3.

    Householder reflection taking e3 to the pole; its first two columns
    then span the orthogonal complement.
    """
    p = sphere_point(pole)
    if p.size != 3:
        raise ValueError("stereographic charts are implemented for S^2 only")
    if p[2] > 1.0 - 1e-12:
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    v = np.array([0.0, 0.0, 1.0]) - p
    h = np.eye(3) - 2.0 * np.outer(v, v) / np.dot(v, v)
    return h[:, 0], h[:, 1]


def stereographic(x, pole) -> complex:
    """Project x in S^2 from `pole` onto the equatorial plane of the pole.

    The image lies in the plane through the origin orthogonal to the pole,
    identified with C via a deterministic frame; |x - pole|^2 = 4/(1+|z|^2).
    """
    p = sphere_point(pole)
    x = sphere_point(x)
    chord2 = float(np.dot(x - p, x - p))
    if chord2 < 1e-24:
        raise PointAtInfinityError("projection pole has no finite image")
    y = p + 2.0 * (x - p) / chord2
    e1, e2 = _pole_frame(p)
    return complex(np.dot(y, e1), np.dot(y, e2))


def stereographic_inverse(z: complex, pole) -> np.ndarray:
    """Inverse chart: plane point z back to S^2 (exact round trip up to fp)."""
    p = sphere_point(pole)
    e1, e2 = _pole_frame(p)
    y = z.real * e1 + z.imag * e2
    x = p + 2.0 * (y - p) / (1.0 + abs(z) ** 2)
    return sphere_point(x)
