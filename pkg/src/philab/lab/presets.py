"""Named boundary data.

Every preset is a function of the node coordinates defined on the whole
grid, so it doubles as the extension of the Dirichlet data inside.
"""

from __future__ import annotations

import re

import numpy as np

from ..grid import ScalarField

__all__ = ["PRESETS", "check_preset", "boundary_function", "boundary_field"]

PRESETS = ("affine", "aronsson", "cone", "scaled(t)", "zero")
_SCALED = re.compile(r"scaled\(\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*\)")


def _aronsson(x):
    # |x1|^{4/3} - |x2|^{4/3}: infinity-harmonic on the whole plane
    t = np.abs(x)
    if x.shape[-1] == 1:
        return t[..., 0] ** (4.0 / 3.0)
    return t[..., 0] ** (4.0 / 3.0) - t[..., 1] ** (4.0 / 3.0)


def check_preset(name):
    boundary_function(name)


def boundary_function(name, apex=None):
    """Vectorized ``g(x)`` for a preset name."""
    name = name.strip()
    if name == "affine":
        return lambda x: np.asarray(x, dtype=float)[..., 0]
    if name == "zero":
        return lambda x: np.zeros(np.shape(x)[:-1])
    if name == "aronsson":
        return lambda x: _aronsson(np.asarray(x, dtype=float))
    if name == "cone":
        def cone(x):
            x = np.asarray(x, dtype=float)
            c = np.full(x.shape[-1], -0.5) if apex is None else np.asarray(apex, dtype=float)[: x.shape[-1]]
            return np.linalg.norm(x - c, axis=-1)
        return cone
    m = _SCALED.fullmatch(name)
    if m:
        t = float(m.group(1))
        return lambda x: t * np.asarray(x, dtype=float)[..., 0]
    raise ValueError(f"unknown boundary preset {name!r}; expected one of {', '.join(PRESETS)}")


def boundary_field(domain, name, apex=None):
    return ScalarField.from_function(domain, boundary_function(name, apex), "boundary_data")
