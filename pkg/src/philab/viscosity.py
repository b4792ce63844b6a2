"""
Monotone scheme for the drifted infinity Laplacian
==================================================

The limit equation ``-Δ∞u - |∇u| ⟨Λ(x, |∇u|), ∇u⟩ = 0`` is solved in its
normalized form (divided by ``|∇u|²``)

    Δ∞ᴺu + ⟨Θ(x, |∇u|), ∇u⟩ = 0,        Θ = Λ / s,

by pseudo-time stepping. The second-order part uses the 8-neighbour
stencil (2-neighbour in 1D) with neighbour values projected onto the
circle of radius ``h``: ``ũ_j = u + h (u(y_j) - u) / |y_j - x|``, then
``(max ũ + min ũ - 2u) / h²``. The projection keeps the stencil monotone
and exact on quadratics whose gradient is axis aligned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .csvio import csv_text
from .grid import GridDomain, ScalarField

__all__ = [
    "NEIGHBOURS_2D",
    "infinity_laplacian",
    "infinity_laplacian_field",
    "centered_gradient",
    "LimitOperator",
    "LimitReport",
    "solve_limit",
    "limit_residual",
    "ZetaParams",
    "zeta_transform",
    "ComparisonReport",
    "comparison_audit",
]

NEIGHBOURS_2D = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
NEIGHBOURS_1D = ((-1,), (1,))
DRIFT_CLAMP = 1e-10


def _offsets(dim):
    return NEIGHBOURS_1D if dim == 1 else NEIGHBOURS_2D


def _shift(v, off):
    """Interior view of ``v`` shifted by ``off``."""
    n = v.shape[0]
    return v[tuple(slice(1 + o, n - 1 + o) for o in off)]


def _interior(v):
    return v[tuple(slice(1, -1) for _ in range(v.ndim))]


def _projected_extremes(v, h):
    offs = _offsets(v.ndim)
    c = _interior(v)
    proj = np.stack([c + (_shift(v, o) - c) / math.sqrt(sum(k * k for k in o))
                     for o in offs])
    # ties resolved by the lowest neighbour index (argmax/argmin semantics)
    hi = np.take_along_axis(proj, np.argmax(proj, axis=0)[None], 0)[0]
    lo = np.take_along_axis(proj, np.argmin(proj, axis=0)[None], 0)[0]
    return c, hi, lo


def infinity_laplacian_field(v, domain):
    """Stencil value at every interior node (zero on the boundary)."""
    v = np.asarray(v.values if isinstance(v, ScalarField) else v, dtype=float)
    h = domain.h
    c, hi, lo = _projected_extremes(v, h)
    out = np.zeros(v.shape)
    out[tuple(slice(1, -1) for _ in range(v.ndim))] = (hi + lo - 2.0 * c) / h ** 2
    return out


def infinity_laplacian(u, domain, node):
    """Stencil value at one interior node."""
    node = tuple(int(k) for k in np.atleast_1d(node))
    if domain.boundary_mask[node]:
        raise ValueError("node must be interior")
    v = np.asarray(u.values if isinstance(u, ScalarField) else u, dtype=float)
    h = domain.h
    vals = []
    for off in _offsets(domain.dim):
        y = tuple(i + o for i, o in zip(node, off))
        r = math.sqrt(sum(o * o for o in off))
        vals.append(v[node] + (v[y] - v[node]) / r)
    vals = np.array(vals)
    return float((vals[np.argmax(vals)] + vals[np.argmin(vals)] - 2.0 * v[node]) / h ** 2)


def centered_gradient(v, h):
    """Centered differences at interior nodes, shape ``interior + (d,)``."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return ((v[2:] - v[:-2]) / (2 * h))[:, None]
    gx = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * h)
    gy = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * h)
    return np.stack([gx, gy], axis=-1)


@dataclass
class LimitOperator:
    """Drift ``Λ(x, s)`` of the limit equation (``None`` for no drift)."""

    lambda_drift: Optional[Callable] = None
    lipschitz_lambda: float = 0.0

    @classmethod
    def from_family(cls, family, points=None):
        """Drift of a family; ``λ`` estimated as ``sup |∇p| / p`` for power families."""
        if not getattr(family, "has_drift", False):
            return cls(None, 0.0)
        lam = 0.0
        if hasattr(family, "grad_p"):
            pts = points if points is not None else family.default_points()
            p = np.asarray(family.exponent(pts))
            lam = float(np.max(np.linalg.norm(family.grad_p(pts), axis=-1) / p))
        return cls(family.lambda_drift, lam)

    def theta(self, x, s):
        """``Θ = Λ / s`` with the drift clamped to zero below ``s = 1e-10``."""
        s = np.asarray(s, dtype=float)
        if self.lambda_drift is None:
            return np.zeros(s.shape + (np.shape(x)[-1],))
        big = s >= DRIFT_CLAMP
        safe = np.where(big, s, 1.0)
        lam = np.asarray(self.lambda_drift(x, safe), dtype=float)
        return np.where(big[..., None], lam / safe[..., None], 0.0)

    def drift_term(self, x, grad):
        """``⟨Θ(x, |∇u|), ∇u⟩``."""
        if self.lambda_drift is None:
            return np.zeros(grad.shape[:-1])
        s = np.linalg.norm(grad, axis=-1)
        return np.sum(self.theta(x, s) * grad, axis=-1)

    def lipschitz_margin(self, x, s, a):
        """``λ|a - 1| - |Θ(x, a s) - Θ(x, s)|``; nonnegative under the assumption."""
        d = np.linalg.norm(self.theta(x, a * s) - self.theta(x, s), axis=-1)
        return self.lipschitz_lambda * np.abs(a - 1.0) - d


def _operator(v, domain, op, x_int):
    h = domain.h
    c, hi, lo = _projected_extremes(v, h)
    lap = (hi + lo - 2.0 * c) / h ** 2
    if op.lambda_drift is None:
        return lap
    return lap + op.drift_term(x_int, centered_gradient(v, h))


@dataclass
class LimitReport:
    solution: ScalarField
    iterations: int
    last_update: float
    converged: bool


def solve_limit(operator, domain, g, tol=None, max_iters=10 ** 6, warm_start=None, tau=None):
    """Pseudo-time iteration ``u ← u + τ (Δ∞ᴺu + ⟨Θ, ∇u⟩)`` with frozen boundary.

    ``τ = h²/4`` in 2D and ``h²/2`` in 1D, the largest steps for which the
    update is a monotone average. Stops when the sup of the update falls
    below ``tol`` (default ``1e-10 ‖g‖∞``).
    """
    gv = np.asarray(g.values, dtype=float)
    if tol is None:
        tol = 1e-10 * max(float(np.max(np.abs(gv))), 1e-300)
    h = domain.h
    if tau is None:
        tau = h ** 2 / (4.0 if domain.dim == 2 else 2.0)
    v = gv.copy() if warm_start is None else np.asarray(
        warm_start.values if isinstance(warm_start, ScalarField) else warm_start, dtype=float).copy()
    v[domain.boundary_mask] = gv[domain.boundary_mask]
    x_int = _interior(domain.nodes) if domain.dim == 1 else domain.nodes[1:-1, 1:-1]
    inner = tuple(slice(1, -1) for _ in range(domain.dim))
    upd = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        step = tau * _operator(v, domain, operator, x_int)
        v[inner] += step
        upd = float(np.max(np.abs(step)))
        if upd < tol:
            return LimitReport(ScalarField(domain, v, "solution"), it, upd, True)
    return LimitReport(ScalarField(domain, v, "solution"), it, upd, False)


def limit_residual(u, domain, operator):
    """Unnormalized ``-Δ∞u - |∇u|⟨Λ, ∇u⟩`` at interior nodes."""
    v = np.asarray(u.values if isinstance(u, ScalarField) else u, dtype=float)
    x_int = domain.nodes[tuple(slice(1, -1) for _ in range(domain.dim))]
    grad = centered_gradient(v, domain.h)
    s2 = np.sum(grad ** 2, axis=-1)
    return -s2 * _operator(v, domain, operator, x_int)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZetaParams:
    """``ζ(s) = ln(1 + A(e^{αs} - 1)) / α`` with ``α > 0``, ``A > 1``."""

    alpha: float
    A: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.A > 1):
            raise ValueError("need alpha > 0 and A > 1")

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(self.alpha * s > 700):
            raise OverflowError("alpha * s exceeds 700; rescale v or alpha")
        return s

    def zeta(self, s):
        s = self._check(s)
        return np.log1p(self.A * np.expm1(self.alpha * s)) / self.alpha

    def dzeta(self, s):
        s = self._check(s)
        e = np.exp(self.alpha * s)
        return self.A * e / (1.0 + self.A * (e - 1.0))

    def d2zeta(self, s):
        # -ζ''/ζ' = α(ζ' - 1)
        d = self.dzeta(s)
        return -self.alpha * d * (d - 1.0)

    def margin(self, epsilon, lam, vmax):
        """``δ = ε³(αε - λ)(ζ'(‖v‖∞) - 1)``; positive iff ``α > λ/ε``."""
        return epsilon ** 3 * (self.alpha * epsilon - lam) * (float(self.dzeta(vmax)) - 1.0)


def zeta_transform(v, params):
    """Apply ``ζ`` nodewise; returns the field and the identity certificates.

    The certificates are the worst margins of ``0 < ζ(s) - s < (A-1)/α``
    and ``0 < ζ'(s) - 1 < A - 1`` (all positive when they hold).
    """
    vals = np.asarray(v.values, dtype=float)
    if np.any(vals < 0):
        raise ValueError("zeta_transform expects v >= 0; shift by a constant first")
    z = params.zeta(vals)
    dz = params.dzeta(vals)
    gap = z - vals
    slope = dz - 1.0
    cap_v = (params.A - 1.0) / params.alpha
    cap_d = params.A - 1.0
    pos = vals > 0
    cert = {
        "value_lower": float(np.min(gap[pos])) if np.any(pos) else 0.0,
        "value_upper": float(np.min(cap_v - gap)),
        "slope_lower": float(np.min(slope)),
        "slope_upper": float(np.min(cap_d - slope)),
    }
    return ScalarField(v.domain, z, v.role), cert


# ---------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    epsilon: float
    gap: float
    bound: float
    ordering_margin: float
    ordering_ok: bool

    @property
    def passed(self):
        return self.ordering_ok and self.gap <= self.bound

    def csv(self):
        return csv_text(("epsilon", "gap", "bound", "pass"),
                        [(self.epsilon, self.gap, self.bound, self.passed)])


def comparison_audit(u_lower, u_mid, u_upper, epsilon, kappa=None, slack=1e-10):
    """Check ``u⁻ ≤ u ≤ u⁺`` and ``sup(u⁺ - u⁻) ≤ 4(1+|Ω|) diam(Ω) ε / κ``."""
    if kappa is None:
        from .inequalities import derive_kappa
        kappa = derive_kappa()
    dom = u_mid.domain
    b = dom.boundary_mask
    lo, mid, up = (np.asarray(f.values, dtype=float) for f in (u_lower, u_mid, u_upper))
    scale = max(1.0, float(np.max(np.abs(mid))))
    if (np.max(np.abs(lo[b] - mid[b])) > slack * scale
            or np.max(np.abs(up[b] - mid[b])) > slack * scale):
        raise ValueError("fields must share boundary values")
    margin = float(min(np.min(mid - lo), np.min(up - mid)))
    ok = margin >= -slack * scale
    gap = float(np.max(up - lo))
    bound = 4.0 * (1.0 + dom.measure) * dom.diameter * epsilon / kappa
    return ComparisonReport(float(epsilon), gap, bound, margin, bool(ok))
