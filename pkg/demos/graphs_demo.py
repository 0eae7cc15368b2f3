"""Graph generators and the 3-SAT reduction."""

from pubgood.graphs import (
    CnfFormula, ReductionSpec, d_regular_bipartite, pentagon_gadget, random_gnp, sat_reduction,
)

g = pentagon_gadget(3)
print(f"pentagon gadget N=3: {g.n} nodes, {g.num_edges} edges, cycle degree {g.degrees[0]}")

b = d_regular_bipartite(40, 10)
print("bipartite sides independent:", b.is_independent(range(20)), b.is_independent(range(20, 40)))

print("G(12, 0.3) edges:", random_gnp(12, 0.3, seed=1).num_edges)

formula = CnfFormula(3, [(1, 2, 3), (-1, 2, -3), (1, -2, 3)])
spec = ReductionSpec(formula, L=1)
red = sat_reduction(spec)
print(f"reduction of {formula.num_clauses} clauses: {red.n} nodes "
      f"(expected {spec.num_nodes}), satisfiable={formula.is_satisfiable()}")
