"""Worst-case equilibrium revenue for uniform values, and the hardness gadget."""

import numpy as np

from pubgood.graphs import CnfFormula, ReductionSpec, cycle, random_gnp
from pubgood.repro import unsat_formula
from pubgood.worstcase import hardness_experiment, min_sum_x, worst_case_revenue_curve

print("min sum x on C5:", round(min_sum_x(cycle(5))["value"], 6))

g = random_gnp(9, 0.4, seed=3)
prices = np.linspace(0.1, 0.9, 9)
print(" p     lower     exact     upper")
for r in worst_case_revenue_curve(g, prices):
    print(f"{r.price:.1f}  {r.lower_bound:8.4f}  {r.exact_min_revenue:8.4f}  {r.upper_bound:8.4f}")

for label, formula in (("x1 or x1 or x1", CnfFormula(1, [(1, 1, 1)])),
                       ("all 8 patterns", unsat_formula())):
    res = hardness_experiment(ReductionSpec(formula))
    print(f"{label}: {res['num_nodes']} nodes, min sum x {res['min_sum_x']:.3f}, "
          f"verdict {res['verdict']}")
