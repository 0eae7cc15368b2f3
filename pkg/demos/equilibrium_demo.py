"""Threshold equilibria: solving, verifying, and the pentagon gap."""

from pubgood.distributions import uniform
from pubgood.equilibrium import expected_revenue, solve_fixed_point, verify_equilibrium
from pubgood.graphs import random_gnp
from pubgood.repro import pentagon_equilibria

unit = uniform(0, 1)
g = random_gnp(10, 0.35, seed=4)
t = solve_fixed_point(g, unit, 0.3)
check = verify_equilibrium(g, unit, 0.3, t)
rev = expected_revenue(0.3, t, unit)
print(f"G(10, .35) at p=0.3: valid={check['valid']}, revenue {rev.expected_revenue:.4f}")
print("thresholds:", [round(x, 3) if x != "never" else x for x in t.to_json()])

# Same graph and price, two equilibria with very different revenue.
for big_n in (10, 100):
    graph, ta, tb = pentagon_equilibria(big_n, 0.5)
    ra = expected_revenue(0.5, ta, unit).expected_revenue
    rb = expected_revenue(0.5, tb, unit).expected_revenue
    print(f"pentagon N={big_n}: {graph.n} nodes, revenues {ra:.4f} vs {rb:.4f}")
