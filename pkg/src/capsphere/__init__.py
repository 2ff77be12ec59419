"""Potential-theory toolkit for external-field equilibrium problems on
spheres: extremal supports and their caps, signed equilibria, Kelvin-mapped
planar problems, and discrete minimal-energy configurations."""

from .errors import (
    ConfigError, InfeasibleSupportError, PointAtInfinityError,
    PoleSingularityError, SingularityError,
)
from .sphere import (
    Cap, DisjointnessReport, SupportRegion, cap_area, caps_pairwise_disjoint,
    geodesic_distance, sample_uniform, sphere_point, stereographic,
    stereographic_inverse,
)
from .potential import KernelSpec, SignedCapEquilibrium, sphere_energy
from .support import (
    InfluenceRegions, PlanarDisc, PlanarEquilibrium, ProblemSpec, Source,
    SupportSolution, coulomb_alpha_root, influence_radii, kelvin_planar,
    reduced_charges, solve_log, solve_riesz_dm2,
)
from .discrete import (
    OptimizerSettings, PointConfiguration, energy, gradient, minimize,
    multistart,
)
from .verify import (
    PointMass, UniformOnCap, UniformOnSupport, VerificationReport,
    check_cap_exclusion, check_empirical_density, check_planar_density,
    check_variational, potential_oracle, potential_oracle_grid,
    scaled_solution, support_windows,
)
from .presets import preset, preset_names

__version__ = "0.1.0"
