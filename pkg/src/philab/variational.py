"""
Discrete energy minimization
============================

The energy of a node field ``u`` with Dirichlet data ``g`` is

    E(u) = Σ_cells Σ_T Φ(x_c, |∇u|_T) / φ(x_c, 1) h^d/4  -  σ Σ_cells a(x_c, ε) u_c h^d

where ``T`` runs over the four linear triangles of the two diagonal splits
of each cell (the cell itself in 1D), ``x_c`` is the cell center, ``u_c``
the corner average and ``σ ∈ {-1, 0, 1}``. Using both splits keeps the
scheme symmetric; a single forward-difference triangle per cell biases the
large-``p`` limit towards one diagonal.

Minimization is a diagonally preconditioned first-order descent with
Armijo backtracking. The default direction update is the Polak-Ribière
(PR+) nonlinear conjugate gradient; plain preconditioned steepest descent
is available as ``method="descent"``. When progress stalls the solver
falls back to nodewise Newton sweeps over the parity classes of the nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .csvio import csv_text
from .grid import GridDomain, ScalarField, cell_average
from .phi import Piecewise, PhiOverflowError

__all__ = [
    "discrete_gradient",
    "element_gradient_norms",
    "EnergyProblem",
    "energy",
    "euler_residual",
    "SolveOptions",
    "SolveReport",
    "minimize",
    "lipschitz_of_boundary",
    "gradient_lm_norms",
    "gradient_bound",
    "lower_exponent_bound_check",
    "field_csv",
    "cell_energies",
    "patch_energy",
]


def _forward_gradient(v, h):
    if v.ndim == 1:
        return ((v[1:] - v[:-1]) / h)[:, None]
    gx = (v[1:, :-1] - v[:-1, :-1]) / h
    gy = (v[:-1, 1:] - v[:-1, :-1]) / h
    return np.stack([gx, gy], axis=-1)


# Triangles of a cell as (plus, minus) corner pairs per gradient component;
# corners are offsets (0/1, 0/1) from the lower-left node.
_TRIANGLES = {
    "ll": (((1, 0), (0, 0)), ((0, 1), (0, 0))),
    "ur": (((1, 1), (0, 1)), ((1, 1), (1, 0))),
    "lr": (((1, 0), (0, 0)), ((1, 1), (1, 0))),
    "ul": (((1, 1), (0, 1)), ((0, 1), (0, 0))),
}
ELEMENTS = ("ll", "ur", "lr", "ul")


def _corner(v, off):
    n = v.shape[0]
    return v[off[0]:n - 1 + off[0], off[1]:n - 1 + off[1]]


def _element_gradients(v, h):
    """Gradients on the elements of each cell, shape ``(E,) + cell_shape + (d,)``.

    In 1D the element is the cell. In 2D each cell carries the four
    triangles of its two diagonal splits.
    """
    if v.ndim == 1:
        return _forward_gradient(v, h)[None]
    out = []
    for name in ELEMENTS:
        comps = [(_corner(v, plus) - _corner(v, minus)) / h for plus, minus in _TRIANGLES[name]]
        out.append(np.stack(comps, axis=-1))
    return np.stack(out)


def discrete_gradient(field, domain=None):
    """Per-cell forward-difference gradient, shape ``cell_shape + (d,)``."""
    domain = domain or field.domain
    return _forward_gradient(np.asarray(field.values, dtype=float), domain.h)


def element_gradient_norms(field, domain=None):
    """``|∇u|`` on every element, shape ``(E,) + cell_shape``."""
    domain = domain or field.domain
    g = _element_gradients(np.asarray(field.values, dtype=float), domain.h)
    return np.sqrt(np.sum(g ** 2, axis=-1))


def _scatter_flux(F, shape, absolute=False):
    """Transpose of the element gradients applied to element fluxes
    (without the 1/h factor). With ``absolute`` every contribution enters
    with its magnitude, which gives the natural size of each entry."""
    G = np.zeros(shape)
    sign = 1.0 if absolute else -1.0
    if absolute:
        F = np.abs(F)
    if len(shape) == 1:
        f = F[0, :, 0]
        G[:-1] += sign * f
        G[1:] += f
        return G
    n = shape[0]
    for k, name in enumerate(ELEMENTS):
        for c, (plus, minus) in enumerate(_TRIANGLES[name]):
            f = F[k, ..., c]
            G[plus[0]:n - 1 + plus[0], plus[1]:n - 1 + plus[1]] += f
            G[minus[0]:n - 1 + minus[0], minus[1]:n - 1 + minus[1]] += sign * f
    return G


def _scatter_cells(c, shape):
    """Transpose of corner averaging."""
    G = np.zeros(shape)
    if len(shape) == 1:
        G[:-1] += 0.5 * c
        G[1:] += 0.5 * c
        return G
    q = 0.25 * c
    G[:-1, :-1] += q
    G[1:, :-1] += q
    G[:-1, 1:] += q
    G[1:, 1:] += q
    return G


def _scatter_curvature(k, shape):
    """Diagonal of the element-gradient Gram matrix weighted by ``k`` (times h²)."""
    G = np.zeros(shape)
    if len(shape) == 1:
        G[:-1] += k[0]
        G[1:] += k[0]
        return G
    n = shape[0]
    for j, name in enumerate(ELEMENTS):
        for plus, minus in _TRIANGLES[name]:
            for off in (plus, minus):
                G[off[0]:n - 1 + off[0], off[1]:n - 1 + off[1]] += k[j]
    return G


@dataclass
class EnergyProblem:
    """Energy with optional ``±a(x, ε)`` source and Dirichlet data ``g``."""

    family: object
    domain: GridDomain
    g: ScalarField
    source_sign: int = 0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.source_sign not in (-1, 0, 1):
            raise ValueError("source_sign must be -1, 0 or 1")
        if self.source_sign != 0 and not self.epsilon > 0:
            raise ValueError("epsilon > 0 required with a source term")
        if isinstance(self.family, Piecewise) and self.domain.subdomain is None:
            raise ValueError("piecewise family requires a subdomain mask")
        if self.family.p_minus < 2:
            raise ValueError("energy minimization needs p_minus >= 2")
        if self.g.values.shape != self.domain.shape:
            raise ValueError("boundary data does not match the domain")
        x = self.domain.cell_centers
        self._x = x
        self._phi1 = np.asarray(self.family.phi_at_one(x), dtype=float)
        if self.source_sign:
            self._source = self.source_sign * np.asarray(
                self.family.a(x, np.full(x.shape[:-1], self.epsilon)), dtype=float)
        else:
            self._source = np.zeros(x.shape[:-1])

    # internal evaluations on raw node arrays ---------------------------------
    @property
    def element_weight(self):
        """Quadrature weight of one element."""
        return _element_weight(self.domain)

    def _cell_terms(self, v):
        grad = _element_gradients(v, self.domain.h)
        s = np.sqrt(np.sum(grad ** 2, axis=-1))
        return grad, s

    def _energy(self, v):
        grad, s = self._cell_terms(v)
        with np.errstate(over="ignore", invalid="ignore"):
            dens = self.family.big_phi(self._x, s) / self._phi1
        e = np.sum(dens) * self.element_weight
        if self.source_sign:
            e -= np.sum(self._source * cell_average(v)) * self.domain.cell_volume
        return float(e), dens, s

    def _gradient(self, v, with_curvature=False):
        grad, s = self._cell_terms(v)
        h = self.domain.h
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            a = np.asarray(self.family.a(self._x, s), dtype=float)
            psi = np.where(s > 0, a / np.where(s > 0, s, 1.0), 0.0)
        F = psi[..., None] * grad
        G = _scatter_flux(F, v.shape) * (self.element_weight / h)
        if self.source_sign:
            G -= _scatter_cells(self._source, v.shape) * self.domain.cell_volume
        G[self.domain.boundary_mask] = 0.0
        size = _scatter_flux(F, v.shape, absolute=True) * (self.element_weight / h)
        if self.source_sign:
            size += _scatter_cells(np.abs(self._source), v.shape) * self.domain.cell_volume
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(size > 0, np.abs(G) / np.where(size > 0, size, 1.0),
                           np.where(G == 0, 0.0, np.inf))
        scale = float(np.max(rel))
        if not with_curvature:
            return G, s, scale
        with np.errstate(over="ignore", invalid="ignore"):
            k = np.asarray(self.family.da_ds(self._x, s), dtype=float)
        k = np.maximum(k, psi)  # both eigenvalues of the cell Hessian
        D = _scatter_curvature(k, v.shape) * (self.element_weight / h ** 2)
        return G, s, scale, D

    def _cell_changes(self, v, dv):
        """Per-cell ``E(v + dv) - E(v)``, shape ``cell_shape``, without cancellation.

        Small changes of ``|∇u|`` are integrated with Gauss-Legendre over
        ``φ``; large ones use the difference of ``Φ`` directly.
        """
        h = self.domain.h
        grad, s = self._cell_terms(v)
        dg = _element_gradients(dv, h)
        s2diff = np.sum((2.0 * grad + dg) * dg, axis=-1)
        s_new = np.sqrt(np.maximum(s ** 2 + s2diff, 0.0))
        tot = s + s_new
        delta = np.where(tot > 0, s2diff / np.where(tot > 0, tot, 1.0), 0.0)
        small = np.abs(delta) <= 0.1 * s / self.family.p_plus
        with np.errstate(over="ignore", invalid="ignore"):
            direct = self.family.big_phi(self._x, s_new) - self.family.big_phi(self._x, s)
            quad = np.zeros_like(s)
            for node, w in zip(_GL_NODES, _GL_WEIGHTS):
                quad += w * self.family.phi(self._x, s + 0.5 * (1.0 + node) * delta)
            quad *= 0.5 * delta
        change = np.sum(np.where(small, quad, direct) / self._phi1, axis=0) * self.element_weight
        if self.source_sign:
            change = change - self._source * cell_average(dv) * self.domain.cell_volume
        return change

    def _energy_change(self, v, dv):
        """``E(v + dv) - E(v)`` summed over cells."""
        return float(np.sum(self._cell_changes(v, dv)))

    def _cell_curvatures(self, v, d):
        """Per-cell ``dᵀ ∇²E(v) d`` from the exact cell Hessians."""
        grad, s = self._cell_terms(v)
        dg = _element_gradients(d, self.domain.h)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            a = np.asarray(self.family.a(self._x, s), dtype=float)
            k = np.asarray(self.family.da_ds(self._x, s), dtype=float)
            pos = s > 0
            sp = np.where(pos, s, 1.0)
            psi = np.where(pos, a / sp, k)
            along = np.where(pos, np.sum(grad * dg, axis=-1) / sp, 0.0)
        q = psi * np.sum(dg ** 2, axis=-1) + np.where(pos, k - psi, 0.0) * along ** 2
        return np.sum(q, axis=0) * self.element_weight

    def _directional_curvature(self, v, d):
        return float(np.sum(self._cell_curvatures(v, d)))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


def _values(u):
    return np.asarray(u.values if isinstance(u, ScalarField) else u, dtype=float)


def energy(problem, u):
    """Discrete energy; raises :class:`PhiOverflowError` at the worst cell."""
    v = _values(u)
    e, dens, s = problem._energy(v)
    if not np.isfinite(e):
        k = np.unravel_index(np.argmax(np.where(np.isfinite(dens), s, np.inf)), s.shape)
        raise PhiOverflowError(tuple(problem._x[k[1:]]), float(s[k]), "energy")
    return e


def cell_energies(problem, u):
    """Energy contribution of every cell, shape ``cell_shape``."""
    v = _values(u)
    _, dens, _ = problem._energy(v)
    e = np.sum(dens, axis=0) * problem.element_weight
    if problem.source_sign:
        e = e - problem._source * cell_average(v) * problem.domain.cell_volume
    return e


def patch_energy(problem, u, node):
    """Energy of the cells that touch ``node``; the only part of the energy
    that depends on the value at that node."""
    e = cell_energies(problem, u)
    sl = tuple(slice(max(i - 1, 0), i + 1) for i in node)
    return float(np.sum(e[sl]))


def euler_residual(problem, u):
    """Gradient of the discrete energy in the interior node values, over ``h^d``."""
    v = _values(u)
    G, _, _ = problem._gradient(v)
    return ScalarField(problem.domain, G / problem.domain.cell_volume, "test")


@dataclass
class SolveOptions:
    residual_tol: float = 1e-8
    energy_rtol: float = 1e-12
    max_iters: int = 200000
    method: str = "cg"
    armijo_factor: float = 0.5
    armijo_slope: float = 1e-4
    curvature_floor: float = 1e-12
    min_step: float = 1e-30
    restart: int = 200
    stall_window: int = 50
    sweeps: int = 20
    m_list: tuple = (4.0, 8.0)


@dataclass
class SolveReport:
    solution: ScalarField
    final_energy: float
    residual_sup: float
    residual_rel: float
    iterations: int
    line_search_failures: int
    converged: bool
    gradient_field: np.ndarray
    family: object = None
    lm_norms: dict = field(default_factory=dict)

    def csv_row(self, m_list=None):
        m_list = m_list if m_list is not None else sorted(self.lm_norms)
        return ([self.family.p_minus, self.family.p_plus, self.final_energy,
                 self.residual_sup, self.iterations]
                + [self.lm_norms.get(m, float("nan")) for m in m_list])

    @staticmethod
    def csv_header(m_list):
        return (["p_minus", "p_plus", "energy", "residual_sup", "iterations"]
                + [f"lm_norm_{m:g}" for m in m_list])


def _colour_masks(shape):
    """Parity classes of the nodes; two nodes of one class never share a cell."""
    idx = np.indices(shape) % 2
    masks = []
    for code in np.ndindex(*([2] * len(shape))):
        masks.append(np.all([idx[k] == code[k] for k in range(len(shape))], axis=0))
    return masks


def _adjacent_sum(c, shape):
    """Sum of the cell values around each node."""
    G = np.zeros(shape)
    if len(shape) == 1:
        G[:-1] += c
        G[1:] += c
        return G
    G[:-1, :-1] += c
    G[1:, :-1] += c
    G[:-1, 1:] += c
    G[1:, 1:] += c
    return G


def _coloured_sweep(problem, v, opts):
    """One nonlinear Gauss-Seidel pass over the parity classes.

    Every node of a class takes its own Newton step with its own Armijo
    backtracking. Nodes of one class share no cell, so each cell change
    belongs to exactly one moving node and the local tests are exact.
    Only local energies enter, which keeps nodes with tiny fluxes visible
    next to regions whose energy is many orders of magnitude larger.
    """
    interior = problem.domain.interior_mask
    total = 0.0
    for mask in _colour_masks(v.shape):
        m = mask & interior
        if not m.any():
            continue
        G, _, _ = problem._gradient(v)
        H = _adjacent_sum(problem._cell_curvatures(v, m.astype(float)), v.shape)
        H = np.maximum(H, opts.curvature_floor)
        step = np.where(m, -G / H, 0.0)
        slope = G * step
        alpha = np.where(m & (slope < 0), 1.0, 0.0)
        for _ in range(64):
            with np.errstate(invalid="ignore"):
                change = _adjacent_sum(problem._cell_changes(v, alpha * step), v.shape)
                ok = np.isfinite(change) & (change <= opts.armijo_slope * alpha * slope)
            bad = m & (alpha > 0) & ~ok
            if not bad.any():
                break
            alpha = np.where(bad, alpha * opts.armijo_factor, alpha)
            alpha = np.where(alpha < opts.min_step, 0.0, alpha)
        else:
            alpha = np.where(bad, 0.0, alpha)
            change = _adjacent_sum(problem._cell_changes(v, alpha * step), v.shape)
        moved = m & (alpha > 0)
        assert np.all(change[moved] <= 0.0), "energy increased on a nodewise step"
        v = v + alpha * step
        total += float(np.sum(change[moved]))
    return v, total


def minimize(problem, warm_start=None, opts=None):
    """Minimize the discrete energy over interior node values.

    Parameters
    ----------
    problem : EnergyProblem
    warm_start : ScalarField, optional
        Initial iterate; its boundary values are replaced by ``g``.
    opts : SolveOptions, optional

    Returns
    -------
    SolveReport
        ``converged`` is False when the iteration cap was hit or the line
        search stalled before both stopping tests held.

    Notes
    -----
    The residual test is relative and nodewise: each residual entry is
    divided by the sum of the magnitudes of the flux and source terms that
    build it. Fluxes of a ``p``-growth energy span ``|∇u|^{p-1}``, many
    orders of magnitude at large ``p``, so a global absolute tolerance
    would either be unreachable or ignore the flat regions.

    The same spread hides the small-flux nodes inside the global inner
    products of the conjugate-gradient loop. When the residual stops
    improving for ``stall_window`` iterations, or the line search fails,
    the loop switches to nodewise Newton sweeps (:func:`_coloured_sweep`)
    before resuming.
    """
    opts = opts or SolveOptions()
    dom = problem.domain
    bmask = dom.boundary_mask
    g = problem.g.values
    v = g.copy() if warm_start is None else _values(warm_start).copy()
    v[bmask] = g[bmask]
    vol = dom.cell_volume
    last_decrease = np.inf

    e, _, _ = problem._energy(v)
    if not np.isfinite(e):
        raise PhiOverflowError(None, float("inf"), "initial energy")
    G, s, scale, D = problem._gradient(v, with_curvature=True)
    failures = 0
    converged = False
    direction = None
    z_old = G_old = None
    it = 0
    since_restart = 0
    best, best_it = np.inf, 0

    def polish(v):
        dE = 0.0
        for _ in range(opts.sweeps):
            v, dE = _coloured_sweep(problem, v, opts)
            if problem._gradient(v)[2] <= opts.residual_tol:
                break
        return v, dE

    for it in range(1, opts.max_iters + 1):
        if scale <= opts.residual_tol and it > 1 and last_decrease <= opts.energy_rtol * max(abs(e), 1e-300):
            converged = True
            break
        if scale == 0.0:
            converged = True
            break
        if scale < 0.5 * best:
            best, best_it = scale, it
        elif it - best_it >= opts.stall_window:
            v, dE = polish(v)
            e, last_decrease = e + dE, -dE
            G, s, scale, D = problem._gradient(v, with_curvature=True)
            direction = None
            best, best_it = scale, it
            continue
        D = np.maximum(D, opts.curvature_floor)
        z = np.where(bmask, 0.0, G / D)
        if opts.method == "cg" and direction is not None and since_restart < opts.restart:
            denom = float(np.sum(z_old * G_old))
            beta = max(0.0, float(np.sum(z * (G - G_old))) / denom) if denom > 0 else 0.0
            direction = -z + beta * direction
            if float(np.sum(direction * G)) >= 0:
                direction = -z
                since_restart = 0
        else:
            direction = -z
            since_restart = 0
        since_restart += 1
        slope = float(np.sum(direction * G))
        if not slope < 0:
            break
        curv = problem._directional_curvature(v, direction)
        expand = not (curv > 0 and np.isfinite(curv))
        alpha = 1.0 if expand else -slope / curv
        if opts.method != "cg":
            alpha = min(alpha, 1.0)
        accepted = False
        while alpha >= opts.min_step:
            change = problem._energy_change(v, alpha * direction)
            if np.isfinite(change) and change <= opts.armijo_slope * alpha * slope:
                accepted = True
                break
            alpha *= opts.armijo_factor
        if not accepted:
            failures += 1
            if scale <= opts.residual_tol:
                converged = True
                break
            if failures < 50:
                v, dE = polish(v)
                e, last_decrease = e + dE, -dE
                G, s, scale, D = problem._gradient(v, with_curvature=True)
                direction = None
                continue
            break
        if expand:
            # degenerate curvature (flat start): grow the step while it pays
            for _ in range(2000):
                trial = problem._energy_change(v, 2.0 * alpha * direction)
                if not (np.isfinite(trial) and trial < change):
                    break
                alpha, change = 2.0 * alpha, trial
        assert change <= 0.0, "energy increased on an accepted step"
        v = v + alpha * direction
        last_decrease = -change
        e = e + change
        z_old, G_old = z, G
        G, s, scale, D = problem._gradient(v, with_curvature=True)
    else:
        it = opts.max_iters
    e, _, _ = problem._energy(v)
    G, s, scale = problem._gradient(v)
    res_sup = float(np.max(np.abs(G))) / vol
    sol = ScalarField(dom, v, "solution")
    report = SolveReport(sol, e, res_sup, scale, it, failures, converged, s,
                         family=problem.family)
    report.lm_norms = {float(m): _lm(s, m, problem.element_weight) for m in opts.m_list}
    return report


def _element_weight(domain):
    return domain.cell_volume / (1 if domain.dim == 1 else len(ELEMENTS))


def _lm(s, m, vol):
    top = float(np.max(s))
    if top == 0:
        return 0.0
    return top * float(np.sum((s / top) ** m) * vol) ** (1.0 / m)


def lipschitz_of_boundary(g, domain=None):
    """Largest difference quotient of ``g`` over pairs of boundary nodes."""
    domain = domain or g.domain
    pts = domain.nodes[domain.boundary_mask]
    vals = _values(g)[domain.boundary_mask]
    if len(pts) < 2:
        return 0.0
    best = 0.0
    for k in range(len(pts) - 1):
        dist = np.linalg.norm(pts[k + 1:] - pts[k], axis=-1)
        q = np.abs(vals[k + 1:] - vals[k]) / dist
        best = max(best, float(np.max(q)))
    return best


def gradient_lm_norms(report, m_list):
    """``(Σ_c |∇u|_c^m h^d)^{1/m}`` for each ``m``."""
    w = _element_weight(report.solution.domain)
    return [_lm(report.gradient_field, float(m), w) for m in m_list]


def gradient_bound(family, eta, measure):
    """``12 μ (1 + η^μ)(1 + |Ω|)^2`` with ``μ = p⁺/p⁻``."""
    mu = family.p_plus / family.p_minus
    return 12.0 * mu * (1.0 + eta ** mu) * (1.0 + measure) ** 2


def lower_exponent_bound_check(report):
    """Return ``(lhs, rhs)`` of ``‖∇u‖_{p⁻}^{p⁻} ≤ |Ω| + E p⁺``."""
    fam = report.family
    dom = report.solution.domain
    lhs = float(np.sum(report.gradient_field ** fam.p_minus) * _element_weight(dom))
    rhs = dom.measure + report.final_energy * fam.p_plus
    return lhs, rhs


def field_csv(field):
    """Node dump with header ``(i, j, x1, x2, u)``."""
    dom = field.domain
    rows = []
    for idx in np.ndindex(dom.shape):
        x = dom.nodes[idx]
        i = idx[0]
        j = idx[1] if dom.dim == 2 else 0
        x2 = x[1] if dom.dim == 2 else 0.0
        rows.append((i, j, float(x[0]), float(x2), float(field.values[idx])))
    return csv_text(("i", "j", "x1", "x2", "u"), rows)
