# %% [markdown]
# The limit equation and the variational route
#
# The p-minimizers with Aronsson boundary data |x1|^{4/3} − |x2|^{4/3}
# should approach the infinity-harmonic extension. The monotone
# 8-direction scheme solves the limit equation directly. Both are compared
# with the exact function; the scheme carries a fixed anisotropy error, so
# the p-minimizers overtake it at moderate p.

# %%
import numpy as np

from philab import ConstantPower, GridDomain, ScalarField
from philab.lab.presets import boundary_function
from philab.variational import EnergyProblem, minimize
from philab.viscosity import LimitOperator, solve_limit

dom = GridDomain(2, 33, -1.0, 1.0)
exact = ScalarField.from_function(dom, boundary_function("aronsson"), "boundary_data")

lim = solve_limit(LimitOperator(), dom, exact)
print(f"limit scheme: {lim.iterations} iterations, "
      f"sup error vs exact {np.max(np.abs(lim.solution.values - exact.values)):.4f}")

warm = None
for p in (4.0, 8.0, 16.0, 32.0, 64.0):
    rep = minimize(EnergyProblem(ConstantPower(p), dom, exact), warm)
    warm = rep.solution
    u = rep.solution.values
    print(f"p={p:4.0f}  vs scheme {np.max(np.abs(u - lim.solution.values)):.4f}  "
          f"vs exact {np.max(np.abs(u - exact.values)):.4f}")
