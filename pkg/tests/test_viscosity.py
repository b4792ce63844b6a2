import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from philab.grid import GridDomain, ScalarField
from philab.phi import ConstantPower, VariablePower
from philab.viscosity import (LimitOperator, ZetaParams, centered_gradient, comparison_audit,
                              infinity_laplacian, infinity_laplacian_field, limit_residual,
                              solve_limit, zeta_transform)


def nodes_field(dom, fn, role="boundary_data"):
    return ScalarField.from_function(dom, fn, role)


def aronsson(x):
    return np.abs(x[..., 0]) ** (4 / 3) - np.abs(x[..., 1]) ** (4 / 3)


def var_family():
    return VariablePower(lambda x: 2.0 + x[..., 0], (2.0, 3.0),
                         gradient=lambda x: np.broadcast_to([1.0, 0.0], np.shape(x)))


# --- stencil ----------------------------------------------------------------

def test_stencil_affine_is_zero():
    dom = GridDomain(2, 9)
    u = nodes_field(dom, lambda x: 0.3 * x[..., 0] - 2 * x[..., 1])
    assert np.max(np.abs(infinity_laplacian_field(u, dom))) < 1e-10


def test_stencil_quadratic_near_origin():
    dom = GridDomain(2, 21, -1.0, 1.0)
    u = nodes_field(dom, lambda x: np.sum(x ** 2, axis=-1))
    # at the node (h, 0) the gradient points along x1 and u'' = 2 there
    assert infinity_laplacian(u, dom, (11, 10)) == pytest.approx(2.0, rel=1e-10)


def test_stencil_boundary_node_rejected():
    dom = GridDomain(2, 9)
    with pytest.raises(ValueError):
        infinity_laplacian(nodes_field(dom, lambda x: x[..., 0]), dom, (0, 3))


def test_stencil_node_and_field_agree():
    dom = GridDomain(2, 9)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dom.shape)
    full = infinity_laplacian_field(v, dom)
    for node in [(1, 1), (4, 5), (7, 2)]:
        assert infinity_laplacian(v, dom, node) == pytest.approx(full[node], rel=1e-12)


def test_stencil_aronsson_bounded():
    # eight directions resolve the gradient direction only up to a fixed
    # angle, so away from the axes the error levels off instead of vanishing
    errs = []
    for n in (17, 33, 65):
        dom = GridDomain(2, n, -1.0, 1.0)
        u = nodes_field(dom, aronsson)
        lap = infinity_laplacian_field(u, dom)
        x = dom.nodes
        far = (np.abs(x[..., 0]) > 0.4) & (np.abs(x[..., 1]) > 0.4) & dom.interior_mask
        errs.append(np.max(np.abs(lap[far])))
    assert max(errs) < 0.3
    assert errs[2] < 1.2 * errs[1]


def test_stencil_consistent_along_grid_direction():
    # gradient along x1: the stencil reduces to the second difference in x1
    for n in (17, 33):
        dom = GridDomain(2, n)
        u = nodes_field(dom, lambda x: x[..., 0] + 0.1 * x[..., 0] ** 2)
        lap = infinity_laplacian_field(u, dom)
        np.testing.assert_allclose(lap[dom.interior_mask], 0.2, rtol=1e-8)


def test_centered_gradient_affine():
    dom = GridDomain(2, 9)
    v = nodes_field(dom, lambda x: 2 * x[..., 0] + 3 * x[..., 1]).values
    g = centered_gradient(v, dom.h)
    np.testing.assert_allclose(g[..., 0], 2.0)
    np.testing.assert_allclose(g[..., 1], 3.0)


# --- limit solve ------------------------------------------------------------

def test_limit_1d_affine():
    dom = GridDomain(1, 33)
    g = nodes_field(dom, lambda x: 3 * x[..., 0] ** 2)
    rep = solve_limit(LimitOperator(), dom, g)
    assert rep.converged
    np.testing.assert_allclose(rep.solution.values, 3 * dom.nodes[..., 0], atol=1e-8)


def test_limit_cone():
    apex = np.array([-0.5, -0.5])
    errs = []
    for n in (17, 33):
        dom = GridDomain(2, n)
        g = nodes_field(dom, lambda x: np.linalg.norm(x - apex, axis=-1))
        rep = solve_limit(LimitOperator(), dom, g)
        assert rep.converged
        errs.append(np.max(np.abs(rep.solution.values - g.values)))
    assert errs[-1] < 0.02


def test_limit_comparison_principle():
    dom = GridDomain(2, 17)
    lo = solve_limit(LimitOperator(), dom, nodes_field(dom, lambda x: x[..., 0] * x[..., 1]))
    hi = solve_limit(LimitOperator(), dom, nodes_field(dom, lambda x: x[..., 0] * x[..., 1] + 0.1))
    assert np.all(lo.solution.values <= hi.solution.values + 1e-9)


def test_drift_operator():
    op = LimitOperator.from_family(var_family())
    assert op.lambda_drift is not None
    # λ = sup |∇p|/p = 1/2 on [0, 1]²
    assert op.lipschitz_lambda == pytest.approx(0.5)
    assert LimitOperator.from_family(ConstantPower(4)).lambda_drift is None


def test_drift_theta_clamped_at_zero():
    op = LimitOperator.from_family(var_family())
    x = np.array([[0.2, 0.3]])
    assert np.all(op.theta(x, np.array([0.0])) == 0.0)
    th = op.theta(x, np.array([np.e]))
    np.testing.assert_allclose(th[0], [1.0 / 2.2, 0.0])


def test_drift_limit_solve_residual():
    dom = GridDomain(2, 17)
    g = nodes_field(dom, aronsson)
    op = LimitOperator.from_family(var_family())
    rep = solve_limit(op, dom, g)
    assert rep.converged
    scale = np.max(np.abs(limit_residual(g, dom, op)))
    assert np.max(np.abs(limit_residual(rep.solution, dom, op))) < 1e-6 * max(scale, 1.0)


# --- ζ transform ------------------------------------------------------------

def test_zeta_zero():
    assert float(ZetaParams(2.0, 3.0).zeta(0.0)) == 0.0


def test_zeta_near_identity():
    z = ZetaParams(1.5, 1.0 + 1e-12)
    s = np.linspace(0.0, 5.0, 101)
    assert np.max(np.abs(z.zeta(s) - s)) <= 1e-12 / 1.5 * (1 + 1e-3)


def test_zeta_ode_identity():
    z = ZetaParams(1.7, 2.5)
    s = np.linspace(0.05, 3.0, 100)
    d = 1e-3
    f = lambda k: z.zeta(s + k * d)
    d1 = (8 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12 * d)
    d2 = (16 * (f(1) + f(-1)) - (f(2) + f(-2)) - 30 * f(0)) / (12 * d ** 2)
    np.testing.assert_allclose(-d2 / d1, 1.7 * (d1 - 1), rtol=1e-6)


def test_zeta_rejects_bad_params():
    with pytest.raises(ValueError):
        ZetaParams(0.0, 2.0)
    with pytest.raises(ValueError):
        ZetaParams(1.0, 1.0)
    with pytest.raises(OverflowError):
        ZetaParams(10.0, 2.0).zeta(100.0)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.1, 5.0), A=st.floats(1.01, 10.0), t=st.floats(1e-3, 25.0))
def test_zeta_bounds(alpha, A, t):
    # t = αs; beyond αs ≈ 36 the slope gap ζ' - 1 drops below double precision
    s = t / alpha
    z = ZetaParams(alpha, A)
    gap = float(z.zeta(s)) - s
    assert 0 < gap < (A - 1) / alpha * (1 + 1e-12)
    assert 0 < float(z.dzeta(s)) - 1 < A - 1


def test_zeta_transform_certificates():
    dom = GridDomain(2, 9)
    v = nodes_field(dom, lambda x: x[..., 0] + x[..., 1], "solution")
    out, cert = zeta_transform(v, ZetaParams(1.0, 2.0))
    assert out.values.shape == dom.shape
    assert cert["value_lower"] > 0 and cert["value_upper"] > 0 and cert["slope_lower"] > 0
    # ζ'(0) = A exactly, so the upper slope bound is attained at v = 0
    assert cert["slope_upper"] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        zeta_transform(nodes_field(dom, lambda x: x[..., 0] - 1.0, "solution"), ZetaParams(1.0, 2.0))


def test_zeta_margin_sign():
    z = ZetaParams(3.0, 2.0)
    assert z.margin(0.5, 1.0, 1.0) > 0
    assert z.margin(0.5, 2.0, 1.0) < 0


# --- comparison audit -------------------------------------------------------

def test_audit_identical_fields():
    dom = GridDomain(2, 9)
    u = nodes_field(dom, lambda x: x[..., 0], "solution")
    rep = comparison_audit(u, u, u, 0.1, kappa=1 / 12)
    assert rep.passed and rep.gap == 0.0


def test_audit_bound_value():
    dom = GridDomain(2, 9)
    u = nodes_field(dom, lambda x: x[..., 0], "solution")
    rep = comparison_audit(u, u, u, 0.05, kappa=1 / 12)
    assert rep.bound == pytest.approx(4 * 2 * np.sqrt(2) * 0.05 * 12)
    assert rep.bound == pytest.approx(6.79, abs=0.01)


def test_audit_detects_misordering():
    dom = GridDomain(2, 9)
    mid = nodes_field(dom, lambda x: x[..., 0], "solution")
    bump = np.where(dom.interior_mask, 0.01, 0.0)
    up = ScalarField(dom, mid.values - bump)
    rep = comparison_audit(mid, mid, up, 0.1, kappa=1 / 12)
    assert not rep.ordering_ok and not rep.passed


def test_audit_rejects_boundary_mismatch():
    dom = GridDomain(2, 9)
    mid = nodes_field(dom, lambda x: x[..., 0], "solution")
    with pytest.raises(ValueError):
        comparison_audit(ScalarField(dom, mid.values + 1.0), mid, mid, 0.1, kappa=1 / 12)
