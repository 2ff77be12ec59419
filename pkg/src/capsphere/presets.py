"""Built-in parameter presets for the bundled example scenarios.

Each preset fixes the kernel and the source list of a two- or three-charge
problem on S^2.  The coordinates are exact: second components like
sqrt(91)/10 keep the positions on the sphere to machine precision.
"""

from __future__ import annotations

import numpy as np

from .support import ProblemSpec, Source

__all__ = ["preset", "preset_names"]

_S91 = np.sqrt(91.0) / 10.0


def _spec(s: float, sources) -> ProblemSpec:
    return ProblemSpec(2, s, tuple(Source(p, c) for p, c in sources))


def _presets() -> dict:
    north = (0.0, 0.0, 1.0)
    return {
        # two equal charges, log kernel; caps clearly separated
        "1-left": _spec(0.0, [
            (north, 0.25),
            ((_S91, 0.0, -0.3), 0.25),
        ]),
        # same charges moved until the caps touch exactly (zero margin)
        "1-right": _spec(0.0, [
            (north, 0.25),
            ((4.0 * np.sqrt(5.0) / 9.0, 0.0, -1.0 / 9.0), 0.25),
        ]),
        # three unequal charges, log kernel, pairwise disjoint caps
        "2": _spec(0.0, [
            (north, 0.25),
            ((_S91, 0.0, -0.3), 0.125),
            ((0.0, np.sqrt(3.0) / 2.0, -0.5), 0.05),
        ]),
        # two equal charges, Coulomb kernel (s = 1)
        "3-left": _spec(1.0, [
            (north, 0.25),
            ((0.0, _S91, -0.3), 0.25),
        ]),
        "3-right": _spec(1.0, [
            (north, 0.25),
            ((0.0, _S91, 0.3), 0.25),
        ]),
        # two equal charges too close together: log caps overlap
        "4": _spec(0.0, [
            (north, 0.25),
            ((_S91, 0.0, 0.3), 0.25),
        ]),
    }


_ALIASES = {"1": "1-left", "3": "3-left"}


def preset_names() -> list:
    return sorted(_presets()) + sorted(_ALIASES)


def preset(name: str) -> ProblemSpec:
    """Look up a preset by name ('1-left', '1-right', '2', '3-left',
    '3-right', '4'; '1' and '3' alias their left variants)."""
    key = _ALIASES.get(str(name), str(name))
    table = _presets()
    if key not in table:
        raise KeyError(
            f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    return table[key]
