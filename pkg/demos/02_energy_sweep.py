# %% [markdown]
# Energies along p → ∞
#
# For boundary data with Lipschitz constant at most 1 the minimal energies
# fall like |Ω|/p; with slope 2 they blow up. The exponent here is
# p(x) = P(2 + x1)/2. With slope 1 the normalized flux of the affine field
# is constant, so the solver stops at once; with slope 2 it is not, and the
# minimizer bends away from the data.

# %%
import numpy as np

from philab import GridDomain, ScalarField, VariablePower
from philab.variational import EnergyProblem, SolveOptions, gradient_bound, minimize

dom = GridDomain(2, 33)
base = VariablePower(lambda x: 2.0 + x[..., 0], (2.0, 3.0),
                     gradient=lambda x: np.broadcast_to([1.0, 0.0], np.shape(x)))

for slope in (1.0, 2.0):
    g = ScalarField.from_function(dom, lambda x: slope * x[..., 0], "boundary_data")
    print(f"boundary slope {slope}")
    warm = None
    for P in (4.0, 8.0, 16.0, 32.0):
        fam = base.with_scale(P / 2.0)
        rep = minimize(EnergyProblem(fam, dom, g), warm, SolveOptions(m_list=(4.0, 8.0, 3.0)))
        warm = rep.solution
        bound = gradient_bound(fam, slope, dom.measure)
        print(f"  p- = {fam.p_minus:4.0f}  energy {rep.final_energy:.5e}  "
              f"|Ω|/p- {dom.measure / fam.p_minus:.4f}  "
              f"max L^m gradient {max(rep.lm_norms.values()):.4f} (bound {bound:.1f})  "
              f"iterations {rep.iterations}")
