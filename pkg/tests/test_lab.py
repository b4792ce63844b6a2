import csv
import io
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from philab.grid import Disc, GridDomain, ScalarField
from philab.lab.cli import ACCEPTANCE, acceptance_config, main
from philab.lab.config import ConfigError, parse_config
from philab.lab.experiments import (Verdict, build_domain, build_family, interface_proxy,
                                    inversions, run_experiment)
from philab.lab.expr import ExpressionError, parse_expression
from philab.lab.presets import boundary_function
from philab.phi import ConstantPower, Piecewise, VariablePower


# --- expressions ------------------------------------------------------------

def test_expression_value_and_gradient():
    e = parse_expression("2 + x1 * (3 - x2) / 4")
    x = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(e(x), 2 + x[:, 0] * (3 - x[:, 1]) / 4)
    np.testing.assert_allclose(e.gradient(x), np.stack([(3 - x[:, 1]) / 4, -x[:, 0] / 4], -1))


def test_expression_unicode_and_unary():
    e = parse_expression("−x₁ × 2 + +3")
    assert float(e(np.array([1.5, 0.0]))) == pytest.approx(0.0)


def test_expression_constants():
    e = parse_expression("1/64")
    assert e.is_constant and e.constant_value() == pytest.approx(1 / 64)
    assert not parse_expression("x2").is_constant


@pytest.mark.parametrize("text,col", [("2 +", 4), ("(x1", 4), ("x3", 1), ("2 $ 3", 3), ("", 1)])
def test_expression_errors_report_column(text, col):
    with pytest.raises(ExpressionError) as info:
        parse_expression(text)
    assert f"column {col}" in str(info.value)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3), c=st.floats(0.1, 10))
def test_expression_matches_python(a, b, c):
    text = f"({a!r}) * x1 - ({b!r}) / {c!r} + x2"
    x = np.array([0.25, -0.75])
    assert float(parse_expression(text)(x)) == pytest.approx(a * 0.25 - b / c - 0.75, rel=1e-12, abs=1e-9)


# --- configs ----------------------------------------------------------------

BASE = """\
experiment = gamma_energy
seed = 3

[domain]
dim = 2
h = 1/16

[family]
kind = VariablePower
p = 2 + x1

[sweep]
p = 4, 8
"""


def test_config_parses():
    cfg = parse_config(BASE)
    assert cfg.experiment == "gamma_energy" and cfg.seed == 3
    assert cfg.h == pytest.approx(1 / 16) and cfg.p_sweep == [4.0, 8.0]
    assert cfg.p_expr.text == "2 + x1"


def test_config_missing_experiment():
    with pytest.raises(ConfigError) as info:
        parse_config(BASE.replace("experiment = gamma_energy\n", ""))
    assert "experiment" in str(info.value)


@pytest.mark.parametrize("text,line", [
    (BASE + "bogus = 1\n", 14),
    (BASE + "[nowhere]\n", 14),
    (BASE.replace("seed = 3", "seed = x"), 2),
    (BASE + "[domain]\ndim = 2\n", 15),
    (BASE.replace("h = 1/16", "h ="), 6),
    (BASE.replace("p = 4, 8", "p = 8, 4"), 13),
])
def test_config_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line


def test_config_disc_needs_radius():
    text = BASE.replace("h = 1/16", "h = 1/16\nsubdomain = disc\ncenter = 0.5, 0.5")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == "radius"


def test_config_unknown_preset():
    with pytest.raises(ConfigError):
        parse_config(BASE + "[boundary]\npreset = wavy\n")


@pytest.mark.parametrize("name", ACCEPTANCE)
def test_shipped_configs_parse(name):
    cfg = parse_config(acceptance_config(name))
    assert cfg.seed == 0


# --- presets and builders ---------------------------------------------------

def test_presets():
    x = np.array([[0.5, -0.25], [-1.0, 1.0]])
    np.testing.assert_allclose(boundary_function("affine")(x), [0.5, -1.0])
    np.testing.assert_allclose(boundary_function("scaled(2)")(x), [1.0, -2.0])
    np.testing.assert_allclose(boundary_function("zero")(x), 0.0)
    np.testing.assert_allclose(boundary_function("aronsson")(x),
                               [0.5 ** (4 / 3) - 0.25 ** (4 / 3), 0.0])
    np.testing.assert_allclose(boundary_function("cone", [0.0, 0.0])(x), [np.hypot(0.5, 0.25), np.sqrt(2)])
    with pytest.raises(ValueError):
        boundary_function("scaled()")


def test_variable_family_sweep_scaling():
    cfg = parse_config(BASE)
    dom = build_domain(cfg)
    fam = build_family(cfg, dom, 16.0)
    assert isinstance(fam, VariablePower)
    assert fam.p_minus == pytest.approx(16.0) and fam.p_plus == pytest.approx(24.0)


def test_piecewise_family_builder():
    cfg = parse_config(acceptance_config("subdomain"))
    dom = build_domain(cfg, h=1 / 16)
    fam = build_family(cfg, dom, 8.0)
    assert isinstance(fam, Piecewise)
    assert (fam.p_minus, fam.p_plus) == (3.0, 8.0)


def test_inversions():
    assert inversions([4.0, 3.0, 2.0]) == []
    assert inversions([4.0, 2.0, 2.2, 1.0]) == [pytest.approx(0.1)]


def test_verdict_line():
    assert Verdict("C6.x", True, 0.5, 1.0).line() == "PASS C6.x 0.5 1"
    assert Verdict("C9.y", False, 2, 1).line().startswith("FAIL C9.y")


def test_interface_proxy_vanishes_for_unit_slope():
    disc = Disc((0.5, 0.5), 0.3)
    dom = GridDomain(2, 33, subdomain=disc)
    u = ScalarField.from_function(dom, lambda x: x[..., 0], "solution")
    prox = interface_proxy(u, dom)
    assert prox.size > 0 and np.max(np.abs(prox)) < 1e-12


def test_interface_proxy_sign():
    disc = Disc((0.5, 0.5), 0.3)
    dom = GridDomain(2, 33, subdomain=disc)
    u = ScalarField.from_function(dom, lambda x: 2.0 * x[..., 0], "solution")
    prox = interface_proxy(u, dom)
    # |∇u| = 2: the proxy is ⟨∇u, ν⟩/|∇u| = ν₁ up to the mask normals
    nu = dom.interface_normals
    assert np.max(np.abs(prox)) == pytest.approx(np.max(np.abs(nu[:, 0])), rel=0.05)


# --- experiments on small grids ---------------------------------------------

def test_gamma_energy_small():
    cfg = parse_config(acceptance_config("gamma_energy"))
    cfg.n, cfg.p_sweep = 17, [4.0, 8.0]
    res = run_experiment(cfg)
    assert res.passed
    rows = list(csv.DictReader(io.StringIO(res.files["energy_sweep.csv"])))
    assert [float(r["energy"]) for r in rows] == [pytest.approx(0.25), pytest.approx(0.125)]


def test_zero_data_gives_zero_energy():
    cfg = parse_config(acceptance_config("gamma_energy"))
    cfg.n, cfg.p_sweep, cfg.preset = 9, [4.0, 8.0], "zero"
    res = run_experiment(cfg)
    rows = list(csv.DictReader(io.StringIO(res.files["energy_sweep.csv"])))
    assert all(float(r["energy"]) == 0.0 for r in rows)


def test_limit_1d_all_affine():
    cfg = parse_config("experiment = limit_convergence\n[domain]\ndim = 1\nn = 33\n"
                       "[family]\nkind = ConstantPower\n[boundary]\npreset = aronsson\n"
                       "[sweep]\np = 4, 8\n")
    res = run_experiment(cfg)
    rows = list(csv.DictReader(io.StringIO(res.files["limit_sweep.csv"])))
    assert all(float(r["sup_diff"]) < 1e-7 for r in rows)


def test_subdomain_inactive_constraint():
    cfg = parse_config(acceptance_config("subdomain"))
    cfg.n, cfg.preset, cfg.p_sweep = 17, "scaled(0.5)", [8.0, 16.0]
    res = run_experiment(cfg)
    rows = list(csv.DictReader(io.StringIO(res.files["subdomain_sweep.csv"])))
    # slope 1/2 data never pushes the gradient inside the disc up to 1
    assert all(float(r["max_grad_inside"]) < 1.0 for r in rows)


def test_eps_sandwich_small():
    cfg = parse_config(acceptance_config("eps_sandwich"))
    cfg.n, cfg.p_sweep = 9, [8.0]
    res = run_experiment(cfg)
    assert res.passed, res.verdict_text()


# --- command line -----------------------------------------------------------

def _write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_cli_run_writes_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, acceptance_config("gamma_energy"), "gamma_energy.cfg")
    out = tmp_path / "out"
    status = main(["run", cfg, "--out", str(out), "--h", "1/16"])
    assert status == 0
    assert (out / "energy_sweep.csv").exists() and (out / "verdict.txt").exists()
    assert all(line.startswith("PASS") for line in (out / "verdict.txt").read_text().splitlines())


def test_cli_p_sweep_override(tmp_path):
    cfg = _write(tmp_path, acceptance_config("gamma_energy"))
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--h", "1/8", "--p-sweep", "4,8"]) == 0
    rows = list(csv.DictReader(open(out / "energy_sweep.csv")))
    assert [float(r["p"]) for r in rows] == [4.0, 8.0]


def test_cli_missing_experiment(tmp_path, capsys):
    cfg = _write(tmp_path, "seed = 1\n")
    assert main(["run", cfg]) == 2
    assert "experiment" in capsys.readouterr().err


def test_cli_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.cfg")]) == 2


def test_cli_verify_subset(tmp_path):
    out = tmp_path / "v"
    status = main(["verify", "--out", str(out), "--only", "inequality_fuzz"])
    assert status == 0
    text = (out / "verdict.txt").read_text()
    assert text.count("PASS C4.") == 3
    assert os.path.exists(out / "inequality_fuzz" / "inequality_fuzz.csv")


def test_run_is_deterministic():
    cfg = parse_config(acceptance_config("poincare_jump"))
    cfg.trials, cfg.h_list = 20, [1 / 8, 1 / 16]
    a = run_experiment(cfg).files
    b = run_experiment(cfg).files
    assert a == b
