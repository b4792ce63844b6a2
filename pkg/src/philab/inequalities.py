"""
Monotonicity inequalities for Φ-fluxes
======================================

Lower bounds for ``⟨ψ(|ξ|)ξ − ψ(|η|)η, ξ − η⟩`` with ``ψ(s) = φ(s)/s``,
the constant κ that controls the mean of ``|sξ + (1−s)η|²`` over
``s ∈ [0, 1]``, and a seeded fuzz campaign that checks every bound on
random pairs mixing tiny and huge magnitudes.

All right-hand sides are assembled in log space, so ``Φ^γ`` never
overflows even for ``p = 8`` and ``|ξ| ~ 10³``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .csvio import csv_text
from .phi import ConstantPower, PhiFamily, VariablePower

__all__ = [
    "MonotoneTestCase",
    "monotone_lhs",
    "kappa_ratio",
    "derive_kappa",
    "KAPPA_SAFETY",
    "InequalityVerdict",
    "check_inequality_main",
    "constant_c1",
    "constant_c2",
    "FuzzRow",
    "FuzzReport",
    "fuzz_campaign",
    "kappa_fuzz",
    "sample_pairs",
]

KAPPA_SAFETY = 1e-9
SLACK = 1e-12


def kappa_ratio(a, b, t):
    """``(a + b + t) / (3 (a + b − 2t))`` with ``a = |ξ|²``, ``b = |η|²``, ``t = ⟨ξ, η⟩``."""
    a, b, t = (np.asarray(v, dtype=float) for v in (a, b, t))
    den = 3.0 * (a + b - 2.0 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, (a + b + t) / np.where(den > 0, den, 1.0), np.inf)


def derive_kappa(samples=2001, refinements=30):
    """Infimum of :func:`kappa_ratio` over admissible ``(a, b, t)``, minus a safety margin.

    The ratio is homogeneous of degree zero, so ``a + b = 1`` is imposed and
    the pair ``(u, θ)`` with ``a = u``, ``t = θ √(u(1−u))`` is swept on a
    dense grid, then refined around the best cell by repeated zooming.
    """
    u_lo, u_hi, th_lo, th_hi = 0.0, 1.0, -1.0, 1.0
    best = math.inf
    n = int(math.isqrt(samples)) + 1
    for _ in range(refinements):
        u = np.linspace(u_lo, u_hi, n)
        th = np.linspace(th_lo, th_hi, n)
        U, TH = np.meshgrid(u, th, indexing="ij")
        r = kappa_ratio(U, 1.0 - U, TH * np.sqrt(U * (1.0 - U)))
        k = np.unravel_index(np.argmin(r), r.shape)
        best = min(best, float(r[k]))
        du = (u_hi - u_lo) / (n - 1)
        dt = (th_hi - th_lo) / (n - 1)
        u_lo, u_hi = max(0.0, u[k[0]] - 2 * du), min(1.0, u[k[0]] + 2 * du)
        th_lo, th_hi = max(-1.0, th[k[1]] - 2 * dt), min(1.0, th[k[1]] + 2 * dt)
    return best - KAPPA_SAFETY


@dataclass
class MonotoneTestCase:
    """A pair ``(ξ, η)`` together with the family and constants of the bounds.

    ``c_minus_coef = min(p⁻ − 1, 1)`` is the coefficient of the lower
    bound; it is unrelated to the normalization constant ``family.c_minus``.
    """

    xi: np.ndarray
    eta: np.ndarray
    family: PhiFamily
    x: Optional[np.ndarray] = None
    gamma: float = 1.0
    kappa: Optional[float] = None

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.eta = np.asarray(self.eta, dtype=float)
        if self.xi.shape != self.eta.shape or self.xi.ndim != 1:
            raise ValueError("xi and eta must be vectors of equal length")
        if self.gamma < 1:
            raise ValueError("gamma must be at least 1")
        if self.kappa is None:
            self.kappa = derive_kappa()
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")

    @property
    def d(self):
        return self.xi.size

    @property
    def c_minus_coef(self):
        return min(self.family.p_minus - 1.0, 1.0)


def _x_batch(family, x, n):
    if x is None:
        return None
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = np.broadcast_to(x, (n, x.size))
    return x


def _flux(family, x, v):
    """``ψ(x, |v|) v`` row-wise with ``ψ(0) · 0 = 0``."""
    s = np.linalg.norm(v, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        psi = np.where(s > 0, family.phi(x, s) / np.where(s > 0, s, 1.0), 0.0)
    return psi[:, None] * v


def _lhs_batch(family, x, xi, eta):
    return np.sum((_flux(family, x, xi) - _flux(family, x, eta)) * (xi - eta), axis=-1)


def monotone_lhs(case):
    """``⟨ψ(|ξ|)ξ − ψ(|η|)η, ξ − η⟩`` for a single case."""
    x = _x_batch(case.family, case.x, 1)
    return float(_lhs_batch(case.family, x, case.xi[None], case.eta[None])[0])


def constant_c1(p_minus, p_plus, gamma, kappa):
    """Constant of the single-term bound ``lhs ≥ C₁ Φ^{1+γ}(|ξ−η|) / Φ^γ(|ξ|+|η|)``.

    From the two-term bound via ``Φ(σt) ≥ σ^{p⁺} Φ(t)`` for ``σ ≤ 1`` and
    ``κ ≤ 1/3``: ``C₁ = c p⁻ κ^{p⁺(1+γ)/2} / 4`` with ``c = min(p⁻−1, 1)``.
    """
    c = min(p_minus - 1.0, 1.0)
    return c * p_minus * kappa ** (p_plus * (1.0 + gamma) / 2.0) / 4.0


def constant_c2(p_minus, p_plus, kappa):
    """Constant of ``lhs ≥ C₂ Φ(|ξ−η|)`` when ``p⁻ ≥ 2``: ``min(1, p⁻ κ^{p⁺/2} / 4)``."""
    return min(1.0, p_minus * kappa ** (p_plus / 2.0) / 4.0)


def _log_rhs_batch(family, x, xi, eta, gamma, kappa):
    """Logs of every right-hand side, keyed by bound name."""
    pm, pp = family.p_minus, family.p_plus
    diff = np.linalg.norm(xi - eta, axis=-1)
    total = np.linalg.norm(xi, axis=-1) + np.linalg.norm(eta, axis=-1)
    L = family.log_big_phi
    with np.errstate(divide="ignore", invalid="ignore"):
        l_total = L(x, total)
        l_third = L(x, diff / math.sqrt(3.0))
        l_kappa = L(x, math.sqrt(kappa) * diff)
        l_diff = L(x, diff)
        c = min(pm - 1.0, 1.0)
        out = {
            "inq1": math.log(c * pm) + np.minimum(
                (1 + gamma) * l_third - gamma * l_total,
                (1 + gamma) * l_kappa - math.log(4.0) - gamma * l_total),
            "var1": math.log(constant_c1(pm, pp, gamma, kappa))
            + (1 + gamma) * l_diff - gamma * l_total,
        }
        if pm >= 2:
            out["inq2"] = np.minimum(l_diff, math.log(pm / 4.0) + l_kappa)
            out["var2"] = math.log(constant_c2(pm, pp, kappa)) + l_diff
    for k, v in out.items():
        # ξ = η gives log 0 - log 0; both sides vanish
        out[k] = np.where(diff > 0, v, -np.inf)
    return out


def _margins(lhs, log_rhs):
    """Relative margin ``(lhs − rhs) / (|lhs| + rhs)``; zero when both vanish."""
    rhs = np.exp(np.minimum(log_rhs, 700.0))
    scale = np.abs(lhs) + rhs
    with np.errstate(invalid="ignore"):
        return lhs, rhs, np.where(scale > 0, (lhs - rhs) / np.where(scale > 0, scale, 1.0), 0.0)


@dataclass
class InequalityVerdict:
    lhs: float
    rhs: dict
    margins: dict

    @property
    def passed(self):
        return all(m >= -SLACK for m in self.margins.values())

    @property
    def worst(self):
        return min(self.margins.items(), key=lambda kv: kv[1])


def check_inequality_main(case):
    """Evaluate every applicable lower bound on one case.

    Bounds are ``inq1`` (two-term, any ``p⁻ > 1``), ``inq2`` (``p⁻ ≥ 2``),
    and the single-term forms ``var1``/``var2`` with the constants of
    :func:`constant_c1` and :func:`constant_c2`. If ``case.x`` is given,
    every Φ is evaluated at that point.
    """
    fam = case.family
    x = _x_batch(fam, case.x, 1)
    xi, eta = case.xi[None], case.eta[None]
    lhs = _lhs_batch(fam, x, xi, eta)
    logs = _log_rhs_batch(fam, x, xi, eta, case.gamma, case.kappa)
    rhs, margins = {}, {}
    for k, lr in logs.items():
        _, r, m = _margins(lhs, lr)
        rhs[k] = float(r[0])
        margins[k] = float(m[0])
    return InequalityVerdict(float(lhs[0]), rhs, margins)


# ---------------------------------------------------------------------------

def sample_pairs(rng, n, d, big=1e3, tiny=1e-3):
    """``n`` pairs in ``ℝ^d`` whose components are uniform on ``[−big, big]``
    or on ``[−tiny, tiny]``, each range chosen with probability one half."""
    def draw():
        width = np.where(rng.random((n, d)) < 0.5, big, tiny)
        return width * rng.uniform(-1.0, 1.0, (n, d))
    return draw(), draw()


@dataclass
class FuzzRow:
    family: str
    d: int
    p: float
    samples: int
    violations: int
    worst_margin: float
    witness: Optional[tuple] = None

    def as_tuple(self):
        return (self.family, self.d, self.p, self.samples, self.violations, self.worst_margin)


@dataclass
class FuzzReport:
    rows: list = field(default_factory=list)
    kappa: float = 0.0

    @property
    def violations(self):
        return sum(r.violations for r in self.rows)

    @property
    def passed(self):
        return self.violations == 0

    def csv(self):
        return csv_text(("family", "d", "p", "samples", "violations", "worst_margin"),
                        [r.as_tuple() for r in self.rows])


def _variable_family(p):
    """``Φ(x, s) = s^{p + x₁}`` on the unit square."""
    return VariablePower(lambda x: p + x[..., 0], (p, p + 1.0),
                         gradient=lambda x: np.broadcast_to([1.0, 0.0], np.shape(x)),
                         label=f"{p:g}+x1")


def fuzz_campaign(seed=0, samples=100_000, dims=(2, 3), exponents=(2, 4, 8),
                  gamma=1.0, kappa=None):
    """Check every bound on seeded random pairs for each ``(d, p)``.

    Constant-power rows use ``Φ = s^p``. Rows tagged ``x`` use the
    x-dependent family ``s^{p + x₁}`` at random points of the unit square.
    Each ``(d, p)`` shard draws from the stream ``(seed, d, p)``.
    """
    kappa = derive_kappa() if kappa is None else kappa
    report = FuzzReport(kappa=kappa)
    for d in dims:
        for p in exponents:
            rng = np.random.default_rng([seed, d, int(p)])
            xi, eta = sample_pairs(rng, samples, d)
            pts = rng.random((samples, 2))
            for tag, fam, x in (("s^p", ConstantPower(p), None),
                                ("x", _variable_family(float(p)), pts)):
                lhs = _lhs_batch(fam, x, xi, eta)
                for name, lr in _log_rhs_batch(fam, x, xi, eta, gamma, kappa).items():
                    _, _, m = _margins(lhs, lr)
                    bad = np.flatnonzero(m < -SLACK)
                    k = int(np.argmin(m))
                    witness = (xi[bad[0]], eta[bad[0]]) if bad.size else None
                    report.rows.append(FuzzRow(f"{tag}:{name}", d, float(p), samples,
                                               int(bad.size), float(m[k]), witness))
    return report


def kappa_fuzz(kappa, seed=0, samples=1_000_000, d=3):
    """Count violations of ``mean_s |sξ + (1−s)η|² ≥ κ |ξ − η|²`` on random pairs."""
    rng = np.random.default_rng([seed, d])
    xi, eta = sample_pairs(rng, samples, d)
    a = np.sum(xi * xi, axis=-1)
    b = np.sum(eta * eta, axis=-1)
    t = np.sum(xi * eta, axis=-1)
    lhs = (a + b + t) / 3.0
    rhs = kappa * (a + b - 2.0 * t)
    return int(np.sum(lhs < rhs - SLACK * (lhs + rhs)))
