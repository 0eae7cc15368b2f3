"""Recommended prices and how they compare with the revenue caps."""

from pubgood.distributions import exponential, uniform
from pubgood.pricing import (
    mwis_upper_bound, myerson_upper_bound, price_clique, price_d_regular, price_uniform_general,
)
from pubgood.graphs import random_gnp

unit, exp1 = uniform(0, 1), exponential(1.0)

print(" n   clique price   symmetric rev   R^M_n    ratio")
for n in (2, 5, 10, 50):
    rec = price_clique(exp1, n)
    cap = myerson_upper_bound(exp1, n)
    print(f"{n:2d}   {rec.price:10.5f}   {rec.symmetric_revenue:12.5f}   {cap:7.4f}   "
          f"{rec.symmetric_revenue / cap:.3f}")

for d in (2, 4, 8):
    print(f"d={d}: d-regular price {price_d_regular(unit, d).price:.5f}")

rec = price_uniform_general()
print(f"any graph, uniform values: price {rec.price}, guarantee factor {rec.guarantee_factor:.5f}")

g = random_gnp(12, 0.3, seed=2)
bound = mwis_upper_bound(g, unit, trials=20_000, seed=0)
print(f"E[MWIS] on G(12, .3): {bound['estimate']:.4f} +- {bound['stderr']:.4f}")
