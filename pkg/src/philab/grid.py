"""Cartesian grids on squares, convex subregions, and grid functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import Delaunay

__all__ = ["Disc", "Rectangle", "GridDomain", "ScalarField"]


@dataclass(frozen=True)
class Disc:
    center: tuple
    radius: float
    dim: int = 2

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center, dtype=float)
        return np.sum((x - c) ** 2, axis=-1) <= self.radius ** 2

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        d = x - np.asarray(self.center, dtype=float)
        n = np.linalg.norm(d, axis=-1, keepdims=True)
        return d / np.where(n > 0, n, 1.0)


@dataclass(frozen=True)
class Rectangle:
    lower: tuple
    upper: tuple
    dim: int = 2

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def normal(self, x):
        # outward normal of the nearest face
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        dist = np.concatenate([x - lo, hi - x], axis=-1)
        k = np.argmin(dist, axis=-1)
        d = x.shape[-1]
        n = np.zeros(x.shape)
        axis = k % d
        sign = np.where(k < d, -1.0, 1.0)
        np.put_along_axis(n, axis[..., None], sign[..., None], axis=-1)
        return n


@dataclass
class GridDomain:
    """Uniform grid on ``[lower, upper]^dim`` with ``n`` nodes per side.

    Arrays on nodes have shape ``(n,)*dim`` and are indexed so that
    ``values[i, j]`` sits at ``(lower + i h, lower + j h)``. Cells are the
    ``(n-1)^dim`` squares between nodes.
    """

    dim: int
    n: int
    lower: float = 0.0
    upper: float = 1.0
    subdomain: Optional[object] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.n < 3:
            raise ValueError("need at least 3 nodes per side")
        if not self.upper > self.lower:
            raise ValueError("empty extent")
        if self.subdomain is not None:
            if not np.any(self.subdomain_node_mask):
                raise ValueError("subdomain contains no nodes")
            if np.any(self.subdomain_node_mask & self.boundary_mask):
                raise ValueError("subdomain must lie strictly inside the domain")
            if not self.subdomain_is_convex():
                raise ValueError("subdomain mask is not convex")

    @classmethod
    def from_h(cls, h, dim=2, lower=0.0, upper=1.0, subdomain=None):
        n = int(round((upper - lower) / h)) + 1
        if not np.isclose((n - 1) * h, upper - lower, rtol=1e-9):
            raise ValueError(f"h={h} does not divide the extent")
        return cls(dim, n, lower, upper, subdomain)

    @property
    def h(self):
        return (self.upper - self.lower) / (self.n - 1)

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def cell_shape(self):
        return (self.n - 1,) * self.dim

    @property
    def cell_volume(self):
        return self.h ** self.dim

    @property
    def measure(self):
        return float(np.prod(self.cell_shape)) * self.cell_volume

    @property
    def diameter(self):
        return (self.upper - self.lower) * np.sqrt(self.dim)

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def axis(self):
        return np.linspace(self.lower, self.upper, self.n)

    @property
    def nodes(self):
        """Node coordinates, shape ``shape + (dim,)``."""
        def build():
            g = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
            return np.stack(g, axis=-1)
        return self._memo("nodes", build)

    @property
    def cell_centers(self):
        def build():
            c = 0.5 * (self.axis[:-1] + self.axis[1:])
            g = np.meshgrid(*([c] * self.dim), indexing="ij")
            return np.stack(g, axis=-1)
        return self._memo("centers", build)

    @property
    def boundary_mask(self):
        def build():
            m = np.zeros(self.shape, dtype=bool)
            for k in range(self.dim):
                idx = [slice(None)] * self.dim
                idx[k] = 0
                m[tuple(idx)] = True
                idx[k] = -1
                m[tuple(idx)] = True
            return m
        return self._memo("boundary", build)

    @property
    def interior_mask(self):
        return ~self.boundary_mask

    @property
    def boundary_nodes(self):
        return self.nodes[self.boundary_mask]

    # subdomain -------------------------------------------------------------
    @property
    def subdomain_node_mask(self):
        if self.subdomain is None:
            return np.zeros(self.shape, dtype=bool)
        return self._memo("sub_nodes", lambda: self.subdomain.contains(self.nodes))

    @property
    def subdomain_cell_mask(self):
        if self.subdomain is None:
            return np.zeros(self.cell_shape, dtype=bool)
        return self._memo("sub_cells", lambda: self.subdomain.contains(self.cell_centers))

    @property
    def interface_mask(self):
        """Subdomain nodes with at least one lattice neighbour outside."""
        def build():
            m = self.subdomain_node_mask
            out = np.zeros_like(m)
            for k in range(self.dim):
                for shift in (1, -1):
                    out |= m & ~np.roll(m, shift, axis=k)
            return out
        return self._memo("interface", build)

    @property
    def interface_normals(self):
        idx = self.interface_mask
        return self.subdomain.normal(self.nodes[idx])

    def subdomain_is_convex(self):
        """Mask equals its discrete convex hull."""
        m = self.subdomain_node_mask
        pts = self.nodes[m]
        if self.dim == 1 or len(pts) < self.dim + 2:
            if self.dim == 1:
                idx = np.flatnonzero(m)
                return idx[-1] - idx[0] + 1 == idx.size
            return True
        try:
            hull = Delaunay(pts)
        except Exception:
            return True  # degenerate (collinear) sets are convex
        inside = hull.find_simplex(self.nodes.reshape(-1, self.dim), tol=1e-12) >= 0
        return bool(np.array_equal(inside.reshape(self.shape), m))

    def is_connected(self):
        """Every interior node is reachable from the boundary."""
        labels, _ = ndimage.label(np.ones(self.shape, dtype=bool))
        return bool(np.all(labels == labels.flat[0]))


@dataclass
class ScalarField:
    """Node values of a grid function."""

    domain: GridDomain
    values: np.ndarray
    role: str = "solution"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.domain.shape:
            raise ValueError(f"shape {self.values.shape} != {self.domain.shape}")
        if self.role not in ("solution", "boundary_data", "test"):
            raise ValueError(f"unknown role {self.role!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    @classmethod
    def from_function(cls, domain, fn, role="boundary_data"):
        return cls(domain, np.asarray(fn(domain.nodes), dtype=float) * np.ones(domain.shape), role)

    def cell_values(self):
        """Cell-center values by averaging the corners."""
        return cell_average(self.values)

    def copy(self, role=None):
        return ScalarField(self.domain, self.values.copy(), role or self.role)


def cell_average(v):
    v = np.asarray(v)
    if v.ndim == 1:
        return 0.5 * (v[:-1] + v[1:])
    return 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
