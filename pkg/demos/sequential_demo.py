"""Selling one buyer at a time: live players, cliques with and without commitment."""

from pubgood.distributions import uniform
from pubgood.graphs import cycle, path
from pubgood.sequential import (
    Ordering, best_ordering_revenue, clique_committed_optimum, clique_subgame_perfect,
    greedy_reverse_mis, live_set, pn_formula,
)

unit = uniform(0, 1)

for order in ((1, 0, 2), (0, 1, 2)):
    o = Ordering(order)
    print(f"path, order {order}: live {live_set(path(3), o)}, "
          f"greedy reverse {greedy_reverse_mis(path(3), o)}")

best = best_ordering_revenue(cycle(7), unit)
print(f"C7: alpha={best['mis_size']}, best ordering {best['ordering'].order}, "
      f"revenue {best['revenue']:.3f}")

print(" n   first price   P(n)      revenue   committed")
for n in (1, 2, 5, 10, 20):
    pol = clique_subgame_perfect(n)
    committed = clique_committed_optimum(n, restarts=2)["revenue"]
    print(f"{n:2d}   {pol.prices[0]:.6f}   {pn_formula(n):.6f}   {pol.revenue:.6f}   {committed:.6f}")
