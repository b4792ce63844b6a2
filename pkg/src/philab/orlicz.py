"""
Discrete Musielak-Orlicz quantities
===================================

Modulars and Luxemburg norms of grid functions (midpoint rule on cells),
the embedding constant between two Orlicz spaces, the local jump
condition on exponents, and an empirical Poincaré constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .csvio import csv_text
from .grid import GridDomain, ScalarField, cell_average
from .phi import PhiOverflowError, normalization_beta

__all__ = [
    "modular",
    "modular_cells",
    "luxemburg_norm",
    "luxemburg_norm_cells",
    "EmbeddingReport",
    "embedding_constant",
    "embedding_check",
    "JumpConditionReport",
    "critical_exponent",
    "jump_condition",
    "random_field",
    "PoincareReport",
    "poincare_ratio",
]

BISECTION_RTOL = 1e-10
BISECTION_MAX_ITERS = 200


def _cells(field):
    return field.domain, np.abs(field.cell_values())


def _weight(domain, magnitude):
    """Quadrature weight per entry; element arrays carry a leading axis."""
    extra = np.ndim(magnitude) - domain.dim
    if extra not in (0, 1):
        raise ValueError(f"magnitude shape {np.shape(magnitude)} does not fit the cells")
    count = np.shape(magnitude)[0] if extra else 1
    return domain.cell_volume / count


def modular_cells(family, domain, magnitude):
    """``Σ Φ(x_c, |v|) w`` over per-cell (or per-element) magnitudes.

    ``magnitude`` has the cell shape or ``(E,) + cell_shape``; in the second
    case every element of a cell carries weight ``h^d / E``.
    """
    magnitude = np.asarray(magnitude, dtype=float)
    x = np.broadcast_to(domain.cell_centers, magnitude.shape + (domain.dim,))
    with np.errstate(over="ignore", invalid="ignore"):
        vals = family.big_phi(x, magnitude)
    if not np.all(np.isfinite(vals)):
        worst = np.unravel_index(np.argmax(np.where(np.isfinite(vals), magnitude, np.inf)), vals.shape)
        raise PhiOverflowError(tuple(x[worst]), float(magnitude[worst]), "modular")
    return float(np.sum(vals) * _weight(domain, magnitude))


def modular(family, field):
    """Midpoint-rule modular of a node field (cell values by corner averaging)."""
    domain, mag = _cells(field)
    return modular_cells(family, domain, mag)


def _log_modular(family, domain, magnitude, lam):
    x = np.broadcast_to(domain.cell_centers, magnitude.shape + (domain.dim,))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        logs = family.log_big_phi(x, magnitude / lam)
    return float(logsumexp(logs)) + math.log(_weight(domain, magnitude))


def luxemburg_norm_cells(family, domain, magnitude):
    """``inf{λ > 0 : ϱ(v/λ) ≤ 1}`` for per-cell (or per-element) magnitudes,
    by geometric bisection in log space."""
    magnitude = np.abs(np.asarray(magnitude, dtype=float))
    if not np.any(magnitude > 0):
        return 0.0
    below = lambda lam: _log_modular(family, domain, magnitude, lam) <= 0.0
    pm, pp = family.p_minus, family.p_plus
    logm = _log_modular(family, domain, magnitude, 1.0)
    if np.isfinite(logm):
        a, b = logm / pm, logm / pp
        lo, hi = math.exp(min(a, b)), math.exp(max(a, b))
    else:
        lo = hi = float(np.max(magnitude))
    # the sandwich bracket holds exactly; widen only against rounding
    while not below(hi):
        hi *= 2.0
    while below(lo):
        lo *= 0.5
    for _ in range(BISECTION_MAX_ITERS):
        if hi - lo <= BISECTION_RTOL * hi:
            break
        mid = math.sqrt(lo * hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi


def luxemburg_norm(family, field):
    domain, mag = _cells(field)
    return luxemburg_norm_cells(family, domain, mag)


# ---------------------------------------------------------------------------

@dataclass
class EmbeddingReport:
    ratios: list
    bound: float
    beta: float

    @property
    def worst_ratio(self):
        return max(self.ratios) if self.ratios else 0.0

    @property
    def passed(self):
        return self.worst_ratio <= self.bound


def embedding_constant(phi, psi, measure, beta):
    """Constant ``C`` with ``‖u‖_Φ ≤ C ‖u‖_Ψ`` when ``p_Φ⁺ ≤ p_Ψ⁻``."""
    pp_phi, pp_psi = phi.p_plus, psi.p_plus
    inner = 1 + 2 * beta ** (-pp_phi) * measure + 2 * beta ** (-pp_phi - pp_psi)
    return (1 + 2 * measure) / beta * 2 ** (1 / pp_phi) * inner


def embedding_check(phi, psi, fields):
    """Compare ``‖u‖_Φ`` against ``C ‖u‖_Ψ`` on every field."""
    if phi.p_plus > psi.p_minus:
        raise ValueError("embedding needs p_plus(phi) <= p_minus(psi)")
    fields = list(fields)
    beta = min(normalization_beta(phi.c_minus, phi.c_plus, phi.p_minus),
               normalization_beta(psi.c_minus, psi.c_plus, psi.p_minus))
    measure = fields[0].domain.measure if fields else 1.0
    bound = embedding_constant(phi, psi, measure, beta)
    ratios = []
    for u in fields:
        a = luxemburg_norm(phi, u)
        b = luxemburg_norm(psi, u)
        ratios.append(0.0 if a == 0 else a / b)
    return EmbeddingReport(ratios, bound, beta)


# ---------------------------------------------------------------------------

def critical_exponent(p, d):
    """Sobolev conjugate ``p* = dp / (d - p)``, infinite for ``p ≥ d``."""
    return math.inf if p >= d else d * p / (d - p)


@dataclass
class JumpConditionReport:
    delta: float
    centers: np.ndarray
    p_minus: np.ndarray
    p_plus: np.ndarray
    verdicts: np.ndarray

    @property
    def passed(self):
        return bool(np.all(self.verdicts))


def jump_condition(family, domain, delta, s=None):
    """Ball-local exponent bounds on a cover of pitch ``δ/2``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if s is None:
        s = np.logspace(-3, 3, 25)
    d = domain.dim
    pts = np.concatenate([domain.nodes.reshape(-1, d), domain.cell_centers.reshape(-1, d)])
    ticks = np.arange(domain.lower, domain.upper + 0.5 * delta, 0.5 * delta)
    centers = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), -1).reshape(-1, d)
    with np.errstate(all="ignore"):
        ratio = family.phi_ratio(pts[:, None, :], np.asarray(s)[None, :])
    ratio = np.broadcast_to(ratio, (len(pts), np.size(s)))
    ratio = np.where(np.isfinite(ratio), ratio, np.nan)
    pt_lo = np.nanmin(ratio, axis=1)
    pt_hi = np.nanmax(ratio, axis=1)
    pm = np.empty(len(centers))
    pp = np.empty(len(centers))
    ok = np.empty(len(centers), dtype=bool)
    for k, c in enumerate(centers):
        inside = np.sum((pts - c) ** 2, axis=1) < delta ** 2
        if not np.any(inside):
            pm[k] = pp[k] = np.nan
            ok[k] = True
            continue
        pm[k] = pt_lo[inside].min()
        pp[k] = pt_hi[inside].max()
        ok[k] = pm[k] >= d or pp[k] <= critical_exponent(pm[k], d)
    return JumpConditionReport(delta, centers, pm, pp, ok)


# ---------------------------------------------------------------------------

def random_field(domain, rng, terms=8, max_frequency=6):
    """Sum of random sine products vanishing on the boundary."""
    L = domain.upper - domain.lower
    t = (domain.nodes - domain.lower) / L
    u = np.zeros(domain.shape)
    for _ in range(terms):
        c = rng.standard_normal()
        freq = rng.integers(1, max_frequency + 1, size=domain.dim)
        u += c * np.prod(np.sin(np.pi * freq * t), axis=-1)
    u[domain.boundary_mask] = 0.0
    return ScalarField(domain, u, "test")


@dataclass
class PoincareReport:
    rows: list = field(default_factory=list)

    @property
    def sup_ratio(self):
        return max((r[3] for r in self.rows), default=0.0)

    def csv(self):
        body = list(self.rows) + [("sup", "", "", self.sup_ratio)]
        return csv_text(("trial", "norm_u", "norm_grad", "ratio"), body)


def poincare_ratio(family, domain, trials, seed, terms=8, max_frequency=6):
    """Empirical ``sup ‖u‖_Φ / ‖∇u‖_Φ`` over seeded random fields."""
    from .variational import element_gradient_norms

    report = PoincareReport()
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        u = random_field(domain, rng, terms, max_frequency)
        if not np.any(u.values):
            continue
        grad = element_gradient_norms(u, domain)
        a = luxemburg_norm(family, u)
        b = luxemburg_norm_cells(family, domain, grad)
        report.rows.append((trial, a, b, a / b))
    return report
