"""Exception types shared across the package."""


class SingularityError(ArithmeticError):
    """Kernel or density evaluated at (or too close to) a singular point."""


class PointAtInfinityError(ValueError):
    """Stereographic projection requested at the projection pole."""


class PoleSingularityError(ArithmeticError):
    """Spherical-angle gradient requested at a coordinate pole."""


class InfeasibleSupportError(RuntimeError):
    """A construction that requires pairwise-disjoint caps was asked for an
    overlapping configuration."""


class ConfigError(ValueError):
    """Malformed run configuration (unknown field, wrong type, bad value)."""
