"""
Generalized Φ-functions
=======================

A Φ-function is ``Φ(x, s) = ∫_0^s φ(x, t) dt`` with exponent bounds

    p⁻ - 1 ≤ s ∂ₛφ / φ ≤ p⁺ - 1,        p⁻ ≤ s φ / Φ ≤ p⁺.

All family methods are vectorized: ``x`` is an array of points with the
coordinate on the last axis (or ``None`` for x-independent families) and
``s`` broadcasts against ``x.shape[:-1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "PhiOverflowError",
    "QuadratureError",
    "UnboundedConjugateError",
    "PhiFamily",
    "ConstantPower",
    "VariablePower",
    "Custom",
    "Piecewise",
    "log_power",
    "ConjugatePhi",
    "eval_phi",
    "eval_big_phi",
    "conjugate_eval",
    "normalization_beta",
    "normalization_constants",
    "adaptive_simpson",
    "StructureCheck",
    "verify_structure",
    "structure_report_csv",
]

S_GUARD = 1e-300


class PhiOverflowError(OverflowError):
    """Raised when an evaluation is not finite; carries the offending (x, s)."""

    def __init__(self, x, s, what="phi"):
        self.x = x
        self.s = s
        super().__init__(f"{what} overflow at x={x!r}, s={s!r}")


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, achieved, requested):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"quadrature reached {achieved:.3e}, requested {requested:.3e}")


class UnboundedConjugateError(ArithmeticError):
    """No bracket for the stationary point φ(x, s) = t was found."""


def _asarray(s):
    return np.asarray(s, dtype=float)


def _log(s):
    s = _asarray(s)
    with np.errstate(divide="ignore"):
        return np.where(s >= S_GUARD, np.log(np.maximum(s, S_GUARD)), -np.inf)


def _pow_log(logbase, p):
    """exp(p * logbase) with exp(-inf) = 0 and no warnings."""
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(np.isneginf(logbase), 0.0, np.exp(p * logbase))


class PhiFamily:
    """Base class for generalized Φ-functions.

    Subclasses provide ``phi``, ``big_phi`` and ``dphi_ds``; the logarithmic
    forms and the ratios used by the structural checks have generic
    defaults which power families override with exact expressions.
    """

    kind = "Custom"
    p_minus: float
    p_plus: float
    dim: Optional[int] = None

    # core evaluations
    def phi(self, x, s):
        raise NotImplementedError

    def big_phi(self, x, s):
        raise NotImplementedError

    def dphi_ds(self, x, s):
        raise NotImplementedError

    def log_phi(self, x, s):
        return _log(self.phi(x, s))

    def log_big_phi(self, x, s):
        return _log(self.big_phi(x, s))

    def phi_at_one(self, x):
        return self.phi(x, np.ones(_batch_shape(x)))

    def a(self, x, s):
        """Normalized flux ``a(x, s) = φ(x, s) / φ(x, 1)``."""
        return self.phi(x, s) / self.phi_at_one(x)

    def da_ds(self, x, s):
        return self.dphi_ds(x, s) / self.phi_at_one(x)

    def elasticity(self, x, s):
        """``s ∂ₛφ / φ``."""
        s = _asarray(s)
        return s * self.dphi_ds(x, s) / self.phi(x, s)

    def phi_ratio(self, x, s):
        """``s φ / Φ``."""
        return np.exp(_log(s) + self.log_phi(x, s) - self.log_big_phi(x, s))

    # normalization
    c_minus: float = 1.0
    c_plus: float = 1.0

    @property
    def unit_normalized(self):
        return self.c_minus == 1.0 and self.c_plus == 1.0

    # limit drift
    def lambda_drift(self, x, s):
        return None

    def lambda_zero(self, x):
        return np.zeros(_batch_shape(x))

    @property
    def has_drift(self):
        return False

    def default_points(self):
        return None


def _batch_shape(x):
    if x is None:
        return ()
    return np.shape(x)[:-1]


class ConstantPower(PhiFamily):
    """``Φ(s) = s^p``, unit normalized."""

    kind = "ConstantPower"

    def __init__(self, p):
        if not p > 1:
            raise ValueError(f"exponent must exceed 1, got {p}")
        self.p = float(p)
        self.p_minus = self.p_plus = self.p

    def __repr__(self):
        return f"ConstantPower(p={self.p:g})"

    def _p(self, x):
        return self.p

    def phi(self, x, s):
        return self.p * _pow_log(_log(s), self.p - 1.0)

    def big_phi(self, x, s):
        return _pow_log(_log(s), self.p)

    def dphi_ds(self, x, s):
        return self.p * (self.p - 1.0) * _pow_log(_log(s), self.p - 2.0)

    def log_phi(self, x, s):
        return math.log(self.p) + (self.p - 1.0) * _log(s)

    def log_big_phi(self, x, s):
        return self.p * _log(s)

    def phi_at_one(self, x):
        return np.full(_batch_shape(x), self.p)

    def elasticity(self, x, s):
        return np.full(np.broadcast_shapes(np.shape(s), _batch_shape(x)),
                       self.p - 1.0)

    def a(self, x, s):
        return _pow_log(_log(s), self.p - 1.0)

    def da_ds(self, x, s):
        return (self.p - 1.0) * _pow_log(_log(s), self.p - 2.0)

    def lambda_drift(self, x, s):
        return None


def _central_gradient(fn, x, step=1e-6):
    x = _asarray(x)
    grad = np.empty(x.shape)
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = step
        grad[..., k] = (fn(x + e) - fn(x - e)) / (2 * step)
    return grad


class VariablePower(PhiFamily):
    """``Φₙ(x, s) = s^{n p(x)}`` with a scale index ``n``.

    Parameters
    ----------
    exponent : callable
        Vectorized ``p(x)`` on points of shape ``(..., d)``.
    bounds : (float, float)
        Range of ``p`` on the working domain.
    scale : float
        The index ``n``; the effective exponent is ``n p(x)``.
    gradient : callable, optional
        ``∇p(x)``; central differences when omitted.
    extent : (float, float)
        Box used for default sample points.
    """

    kind = "VariablePower"

    def __init__(self, exponent, bounds, scale=1.0, gradient=None, dim=2,
                 extent=(0.0, 1.0), label=None):
        lo, hi = bounds
        if not (lo * scale > 1 and hi >= lo):
            raise ValueError(f"invalid exponent bounds {bounds} at scale {scale}")
        self.exponent = exponent
        self.gradient = gradient
        self.scale = float(scale)
        self.bounds = (float(lo), float(hi))
        self.p_minus = self.scale * lo
        self.p_plus = self.scale * hi
        self.dim = dim
        self.extent = extent
        self.label = label or "p(x)"

    def __repr__(self):
        return f"VariablePower({self.label}, scale={self.scale:g})"

    def with_scale(self, scale):
        return VariablePower(self.exponent, self.bounds, scale, self.gradient,
                             self.dim, self.extent, self.label)

    def _p(self, x):
        return self.scale * _asarray(self.exponent(_asarray(x)))

    def grad_p(self, x):
        """Gradient of the unscaled exponent."""
        if self.gradient is not None:
            return _asarray(self.gradient(_asarray(x)))
        return _central_gradient(lambda y: _asarray(self.exponent(y)), x)

    def phi(self, x, s):
        p = self._p(x)
        return p * _pow_log(_log(s), p - 1.0)

    def big_phi(self, x, s):
        return _pow_log(_log(s), self._p(x))

    def dphi_ds(self, x, s):
        p = self._p(x)
        return p * (p - 1.0) * _pow_log(_log(s), p - 2.0)

    def log_phi(self, x, s):
        p = self._p(x)
        return np.log(p) + (p - 1.0) * _log(s)

    def log_big_phi(self, x, s):
        return self._p(x) * _log(s)

    def phi_at_one(self, x):
        return self._p(x) * np.ones(_batch_shape(x))

    def elasticity(self, x, s):
        p = self._p(x)
        return np.broadcast_to(p - 1.0, np.broadcast_shapes(np.shape(s), np.shape(p)))

    def a(self, x, s):
        return _pow_log(_log(s), self._p(x) - 1.0)

    def da_ds(self, x, s):
        p = self._p(x)
        return (p - 1.0) * _pow_log(_log(s), p - 2.0)

    @property
    def has_drift(self):
        return True

    def lambda_drift(self, x, s):
        """``Λ(x, s) = s ln s ∇p / p`` with ``Λ(x, 0) = 0``."""
        s = _asarray(s)
        p = _asarray(self.exponent(_asarray(x)))
        g = self.grad_p(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(s > 0, s * np.log(np.where(s > 0, s, 1.0)), 0.0)
        return (w / p)[..., None] * g

    def drift_ratio(self, x, s):
        """Finite-index ratio ``∂ₓaₙ / ∂ₛaₙ = s ln s · n∇p / (n p - 1)``."""
        s = _asarray(s)
        p = self._p(x)
        g = self.scale * self.grad_p(x)
        return (s * np.log(s) / (p - 1.0))[..., None] * g

    def default_points(self):
        lo, hi = self.extent
        t = np.linspace(lo, hi, 9)
        grids = np.meshgrid(*([t] * self.dim), indexing="ij")
        return np.stack(grids, axis=-1).reshape(-1, self.dim)


class Custom(PhiFamily):
    """User-supplied Φ-function.

    ``big_phi`` falls back to adaptive Simpson quadrature of ``phi`` when no
    closed form is given. The limit ``a₀(x)`` of ``∂ₓa`` at ``s → 0⁺`` must
    be declared explicitly.
    """

    kind = "Custom"

    def __init__(self, phi, dphi_ds, p_minus, p_plus, lambda_zero,
                 big_phi=None, c_minus=None, c_plus=None, lambda_drift=None,
                 name="custom"):
        if not (p_minus > 1 and p_plus >= p_minus):
            raise ValueError("need 1 < p_minus <= p_plus")
        self._phi = phi
        self._dphi = dphi_ds
        self._big_phi = big_phi
        self._lambda = lambda_drift
        self._lambda_zero = lambda_zero
        self.p_minus = float(p_minus)
        self.p_plus = float(p_plus)
        self.name = name
        if c_minus is None or c_plus is None:
            one = float(self.big_phi(None, 1.0))
            c_minus = one if c_minus is None else c_minus
            c_plus = one if c_plus is None else c_plus
        self.c_minus = float(c_minus)
        self.c_plus = float(c_plus)

    def __repr__(self):
        return f"Custom({self.name})"

    def phi(self, x, s):
        s = _asarray(s)
        return np.where(s > 0, self._phi(x, np.where(s > 0, s, 1.0)), 0.0)

    def dphi_ds(self, x, s):
        return _asarray(self._dphi(x, _asarray(s)))

    def big_phi(self, x, s):
        if self._big_phi is not None:
            s = _asarray(s)
            return np.where(s > 0, self._big_phi(x, np.where(s > 0, s, 1.0)), 0.0)
        s = _asarray(s)
        if x is None:
            out = np.empty(s.shape)
            for idx in np.ndindex(s.shape):
                out[idx] = adaptive_simpson(lambda t: float(self.phi(None, t)), 0.0, float(s[idx]))
            return out
        x = _asarray(x)
        shape = np.broadcast_shapes(s.shape, x.shape[:-1])
        s = np.broadcast_to(s, shape)
        x = np.broadcast_to(x, shape + x.shape[-1:])
        out = np.empty(shape)
        for idx in np.ndindex(shape):
            xi = x[idx]
            out[idx] = adaptive_simpson(lambda t: float(self.phi(xi, t)), 0.0, float(s[idx]))
        return out

    @property
    def has_drift(self):
        return self._lambda is not None

    def lambda_drift(self, x, s):
        return None if self._lambda is None else self._lambda(x, s)

    def lambda_zero(self, x):
        return self._lambda_zero(x)


def log_power(p):
    """``Φ(s) = s^p ln(e + s)``; a non-power family with ``p⁻ = p``, ``p⁺ = p + 1``."""
    p = float(p)

    def big_phi(x, s):
        return s ** p * np.log(np.e + s)

    def phi(x, s):
        return p * s ** (p - 1) * np.log(np.e + s) + s ** p / (np.e + s)

    def dphi(x, s):
        s = _asarray(s)
        e = np.e
        return (p * (p - 1) * s ** (p - 2) * np.log(e + s)
                + 2 * p * s ** (p - 1) / (e + s) - s ** p / (e + s) ** 2)

    return Custom(phi, dphi, p, p + 1, lambda_zero=lambda x: np.zeros(_batch_shape(x)),
                  big_phi=big_phi, name=f"log_power(p={p:g})")


class Piecewise(PhiFamily):
    """``inside`` on a region, ``outside`` elsewhere (selected pointwise)."""

    kind = "Custom"

    def __init__(self, inside, outside, region):
        self.inside = inside
        self.outside = outside
        self.region = region
        self.p_minus = min(inside.p_minus, outside.p_minus)
        self.p_plus = max(inside.p_plus, outside.p_plus)
        self.c_minus = min(inside.c_minus, outside.c_minus)
        self.c_plus = max(inside.c_plus, outside.c_plus)
        self.dim = getattr(region, "dim", 2)

    def __repr__(self):
        return f"Piecewise({self.inside!r} in {self.region!r}, {self.outside!r})"

    def with_inside(self, inside):
        return Piecewise(inside, self.outside, self.region)

    def _select(self, x, name, *args):
        mask = self.region.contains(_asarray(x))
        with np.errstate(all="ignore"):
            a = _asarray(getattr(self.inside, name)(x, *args))
            b = _asarray(getattr(self.outside, name)(x, *args))
        shape = np.broadcast_shapes(a.shape, b.shape, mask.shape)
        return np.where(np.broadcast_to(mask, shape), a, b)

    def phi(self, x, s):
        return self._select(x, "phi", s)

    def big_phi(self, x, s):
        return self._select(x, "big_phi", s)

    def dphi_ds(self, x, s):
        return self._select(x, "dphi_ds", s)

    def log_phi(self, x, s):
        return self._select(x, "log_phi", s)

    def log_big_phi(self, x, s):
        return self._select(x, "log_big_phi", s)

    def phi_at_one(self, x):
        return self._select(x, "phi_at_one")

    def a(self, x, s):
        return self._select(x, "a", s)

    def da_ds(self, x, s):
        return self._select(x, "da_ds", s)

    def elasticity(self, x, s):
        return self._select(x, "elasticity", s)

    def lambda_zero(self, x):
        return self._select(x, "lambda_zero")

    def default_points(self):
        t = np.linspace(0.0, 1.0, 17)
        g = np.meshgrid(t, t, indexing="ij")
        return np.stack(g, axis=-1).reshape(-1, 2)


# ---------------------------------------------------------------------------
# scalar entry points

def _check(value, x, s, what):
    value = _asarray(value)
    if not np.all(np.isfinite(value)):
        bad = np.argwhere(~np.isfinite(np.atleast_1d(value)))[0]
        s_arr = np.atleast_1d(_asarray(s))
        s_bad = s_arr[tuple(bad)] if s_arr.size > 1 else s_arr.flat[0]
        raise PhiOverflowError(x, float(s_bad), what)
    return value


def _point(x):
    return None if x is None else _asarray(x)


def eval_phi(family, x, s):
    """Derivative ``φ(x, s)``; raises :class:`PhiOverflowError` if not finite."""
    if np.any(_asarray(s) < 0):
        raise ValueError("s must be nonnegative")
    x = _point(x)
    with np.errstate(over="ignore", invalid="ignore"):
        out = family.phi(x, s)
    out = _check(out, x, s, "phi")
    return float(out) if out.ndim == 0 else out


def eval_big_phi(family, x, s):
    """``Φ(x, s)``; closed form for power families, quadrature otherwise."""
    if np.any(_asarray(s) < 0):
        raise ValueError("s must be nonnegative")
    x = _point(x)
    with np.errstate(over="ignore", invalid="ignore"):
        out = family.big_phi(x, s)
    out = _check(out, x, s, "Phi")
    return float(out) if out.ndim == 0 else out


def adaptive_simpson(f, a, b, rtol=1e-10, max_depth=40):
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``."""
    if b == a:
        return 0.0

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)
    total = 0.0
    worst = 0.0
    # explicit stack: (lo, hi, f(lo), f(mid), f(hi), estimate, tol, depth)
    tol0 = rtol * max(abs(whole), 1e-300)
    stack = [(a, b, fa, fm, fb, whole, tol0, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(flo, flm, fmid, lo, mid)
        right = simpson(fmid, frm, fhi, mid, hi)
        err = left + right - est
        if abs(err) <= 15.0 * tol or depth >= max_depth:
            if abs(err) > 15.0 * tol:
                worst = max(worst, abs(err) / 15.0)
            total += left + right + err / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1))
    if worst > 0 and worst > rtol * abs(total):
        raise QuadratureError(worst / max(abs(total), 1e-300), rtol)
    return total


# ---------------------------------------------------------------------------
# conjugate

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ConjugatePhi:
    """``Φ*(x, t) = sup_{s ≥ 0} (t s - Φ(x, s))``."""

    base: PhiFamily
    bracket_growth: float = 2.0
    rtol: float = 1e-10
    max_expansions: int = 200

    def __post_init__(self):
        if not self.bracket_growth > 1:
            raise ValueError("bracket_growth must exceed 1")

    def argmax(self, x, t):
        t = float(t)
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0:
            return 0.0
        x = _point(x)
        phi = lambda s: float(self.base.phi(x, s))
        big = lambda s: float(self.base.big_phi(x, s))
        g = self.bracket_growth
        hi = 1.0
        n = 0
        while phi(hi) < t:
            hi *= g
            n += 1
            if n > self.max_expansions:
                raise UnboundedConjugateError(f"no bracket for t={t} at x={x}")
        lo = hi / g
        n = 0
        while lo > 0 and phi(lo) >= t:
            hi = lo
            lo /= g
            n += 1
            if n > self.max_expansions:
                lo = 0.0
        f = lambda s: t * s - big(s)
        c = hi - _GOLDEN * (hi - lo)
        d = lo + _GOLDEN * (hi - lo)
        fc, fd = f(c), f(d)
        while hi - lo > self.rtol * hi:
            if fc >= fd:
                hi, d, fd = d, c, fc
                c = hi - _GOLDEN * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + _GOLDEN * (hi - lo)
                fd = f(d)
        return 0.5 * (lo + hi)

    def eval(self, x, t):
        t = float(t)
        if t == 0:
            return 0.0
        s = self.argmax(x, t)
        val = t * s - float(self.base.big_phi(_point(x), s))
        return max(val, 0.0)


def conjugate_eval(conj, x, t):
    """Evaluate ``Φ*(x, t)``; array ``t`` is handled elementwise."""
    t_arr = _asarray(t)
    if t_arr.ndim == 0:
        return conj.eval(x, float(t_arr))
    return np.array([conj.eval(x, float(v)) for v in t_arr.ravel()]).reshape(t_arr.shape)


# ---------------------------------------------------------------------------
# normalization

def normalization_beta(c_minus, c_plus, p_minus):
    """``β = min{(c⁻)^{1/p⁻}, (c⁺)^{-1/p⁻}}`` for ``0 < c⁻ ≤ 1 ≤ c⁺``."""
    if not (0 < c_minus <= 1 <= c_plus):
        raise ValueError(f"need 0 < c_minus <= 1 <= c_plus, got {c_minus}, {c_plus}")
    if not p_minus > 0:
        raise ValueError("p_minus must be positive")
    return min(c_minus ** (1.0 / p_minus), c_plus ** (-1.0 / p_minus))


def normalization_constants(beta, p_plus):
    """Inverse direction: ``(c⁻, c⁺) = (β^{p⁺}, β^{-p⁺})``."""
    if not (0 < beta <= 1):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return beta ** p_plus, beta ** (-p_plus)


# ---------------------------------------------------------------------------
# structural audit

@dataclass
class StructureCheck:
    name: str
    worst_margin: float
    passed: bool

    def row(self):
        return (self.name, self.worst_margin, self.passed)


def _second_difference_margin(logf, s):
    """Normalized second difference of ``exp(logf)`` at ``s``."""
    h = np.maximum(1e-6, 1e-6 * s)
    f0 = logf(s)
    fp = logf(s + h)
    fm = logf(np.maximum(s - h, 0.0))
    with np.errstate(invalid="ignore", over="ignore"):
        val = np.exp(fp - f0) + np.exp(fm - f0) - 2.0
    return val


def verify_structure(family, points=None, s=None, rhos=(0.25, 0.5, 2.0, 4.0),
                     gamma=1.0, rtol=1e-9):
    """Sample the structural inequalities of a Φ-function.

    Parameters
    ----------
    family : PhiFamily
    points : array (m, d), optional
        Sample points; ``family.default_points()`` when omitted.
    s : array, optional
        Sample radii; 64 log-spaced values in ``[1e-6, 1e3]`` by default.
    rhos : sequence of float
        Dilation factors for the scaling bound.
    gamma : float
        Exponent for the convexity of ``Φ^{1+γ}(√s)``.
    rtol : float
        Relative slack.

    Returns
    -------
    list of StructureCheck
        One entry per check; the margin is relative, negative on violation.
    """
    if s is None:
        s = np.logspace(-6, 3, 64)
    s = _asarray(s)
    if points is None:
        points = family.default_points()
    if points is None:
        xs = None
        S = s
    else:
        xs = _asarray(points)[:, None, :]
        S = np.broadcast_to(s, (xs.shape[0], s.size))
    pm, pp = family.p_minus, family.p_plus
    checks = []

    def add(name, margins):
        m = float(np.min(margins))
        checks.append(StructureCheck(name, m, bool(m >= -rtol)))

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        r = family.phi_ratio(xs, S)
        add("sandwich", np.minimum((r - pm) / pm, (pp - r) / pp))

        e = family.elasticity(xs, S)
        add("derivative_ratio",
            np.minimum((e - (pm - 1)) / pm, ((pp - 1) - e) / pp))

        lp = family.log_big_phi(xs, S)
        scal = []
        for rho in rhos:
            d = family.log_big_phi(xs, rho * S) - lp
            lr = math.log(rho)
            lo, hi = min(pm * lr, pp * lr), max(pm * lr, pp * lr)
            scal.append(np.minimum(np.expm1(d - lo), -np.expm1(d - hi)))
        add("scaling", np.stack(scal))

        d2 = family.log_big_phi(xs, 2 * S) - lp
        add("delta2", -np.expm1(d2 - pp * math.log(2.0)))

        zero = family.big_phi(xs, np.zeros_like(S))
        add("phi_zero", -np.abs(zero))

        big = family.log_big_phi(xs, S)
        add("increasing", np.where(np.diff(big, axis=-1) > 0, 0.0, -1.0))

        if pm >= 2:
            add("convex_sqrt", _second_difference_margin(
                lambda t: family.log_big_phi(xs, np.sqrt(t)), S))
        add("convex_sqrt_gamma", _second_difference_margin(
            lambda t: (1 + gamma) * family.log_big_phi(xs, np.sqrt(t)), S))

        if family.unit_normalized:
            one = family.big_phi(xs, np.ones_like(S))
            add("unit_normalized", -np.abs(one - 1.0))
        else:
            one = family.big_phi(xs, np.ones_like(S))
            add("normalization_bounds", np.minimum(
                (one - family.c_minus) / family.c_minus,
                (family.c_plus - one) / family.c_plus))
    return checks


def structure_report_csv(checks, family_name=None):
    """CSV text with rows ``(check_name, worst_margin, pass)``."""
    head = "family,check_name,worst_margin,pass\n" if family_name else "check_name,worst_margin,pass\n"
    lines = [head]
    for c in checks:
        prefix = f"{family_name}," if family_name else ""
        lines.append(f"{prefix}{c.name},{c.worst_margin:.6e},{str(c.passed).lower()}\n")
    return "".join(lines)
