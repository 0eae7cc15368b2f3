"""Value distributions: reserves, Myerson revenue and the prophet price."""

from pubgood.distributions import (
    check_regularity, exponential, myerson_reserve, myerson_revenue_n,
    prophet_price, tabulated, uniform,
)

unit, exp1 = uniform(0, 1), exponential(1.0)

for dist in (unit, exp1):
    r = myerson_reserve(dist)
    print(f"{dist.name}: reserve {r:.4f}, one-buyer revenue {r * (1 - dist.cdf(r)):.4f}")

# More bidders push the optimal auction revenue towards E[max v].
for n in (1, 2, 5, 20):
    res = myerson_revenue_n(unit, n)
    print(f"n={n:2d}  R^M = {res['revenue']:.5f}  (cap {res['bound']:.5f})")

# A single posted price run sequentially keeps at least half of it.
for n in (1, 10, 100):
    res = prophet_price(exp1, n)
    print(f"n={n:3d}  prophet price {res['price']:.4f}  "
          f"ratio {res['seq_revenue'] / res['myerson_revenue']:.3f}")

# Density that drops sharply is not regular.
lumpy = tabulated([0, 0.5, 1.0], [0, 0.9, 1.0])
print("lumpy regular?", check_regularity(lumpy)["regular"])
