# %% [markdown]
# Φ-functions: exponents, conjugates and Luxemburg norms
#
# A family Φ(x, s) is described by its derivative φ, the exponent bounds
# p⁻ ≤ sφ/Φ ≤ p⁺ and the normalization constants. This walk-through
# checks those structural bounds on a few families, evaluates the convex
# conjugate two ways and compares the Luxemburg norm with its closed form.

# %%
import numpy as np

from philab import ConstantPower, GridDomain, ScalarField, VariablePower, log_power
from philab.orlicz import luxemburg_norm, modular
from philab.phi import ConjugatePhi, verify_structure

families = {
    "s^4": ConstantPower(4.0),
    "s^(2+x1)": VariablePower(lambda x: 2.0 + x[..., 0], (2.0, 3.0)),
    "s^3 log(e+s)": log_power(3.0),
}

# %% structure checks: margins are non-negative up to rounding
for name, fam in families.items():
    for c in verify_structure(fam):
        print(f"{name:14s} {c.name:22s} worst margin {c.worst_margin: .3e}")

# %% [markdown]
# The conjugate Φ*(t) = sup_s (ts − Φ(s)). ConjugatePhi brackets the
# stationary point φ(s) = t; a plain grid search gives the same number
# without using that condition.

# %%
fam = ConstantPower(4.0)
conj = ConjugatePhi(fam)
for t in (0.1, 1.0, 10.0):
    s = np.linspace(0.0, 10.0, 200001)
    brute = np.max(t * s - fam.big_phi(None, s))
    print(f"t={t:5.1f}  conjugate {conj.eval(None, t):.10f}  grid {brute:.10f}")

# %% Luxemburg norm of a constant field: c |Ω|^{1/p}
dom = GridDomain(2, 33, 0.0, 2.0)
u = ScalarField(dom, np.full(dom.shape, 3.0), "test")
for p in (2.0, 4.0, 64.0):
    print(f"p={p:4.0f}  norm {luxemburg_norm(ConstantPower(p), u):.12f}"
          f"  closed form {3.0 * dom.measure ** (1 / p):.12f}")

# %% modular against norm: ‖u‖^{p⁺} and ‖u‖^{p⁻} bracket ϱ(u)
fam = families["s^(2+x1)"]
dom = GridDomain(2, 33)
rng = np.random.default_rng(0)
for scale in (0.1, 1.0, 10.0):
    v = ScalarField(dom, scale * rng.standard_normal(dom.shape), "test")
    n = luxemburg_norm(fam, v)
    lo, hi = sorted((n ** fam.p_minus, n ** fam.p_plus))
    print(f"scale {scale:5.1f}  {lo:.4e} <= {modular(fam, v):.4e} <= {hi:.4e}")
