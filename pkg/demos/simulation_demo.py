"""Monte Carlo play against solved thresholds."""

from pubgood.distributions import exponential
from pubgood.equilibrium import solve_fixed_point
from pubgood.graphs import random_gnp
from pubgood.simulation import check_hipster_welfare_bound, simulate

exp1 = exponential(1.0)
g = random_gnp(10, 0.4, seed=6)
t = solve_fixed_point(g, exp1, 0.6)

res = simulate(g, exp1, 0.6, t, trials=100_000, seed=7, workers=2)
print(f"closed form {res['expected_revenue']:.4f}, simulated {res['mean_revenue']:.4f} "
      f"+- {res['stderr']:.4f}")
print(f"welfare: public {res['mean_welfare_public']:.4f}, hipster {res['mean_welfare_hipster']:.4f}")
print("hipster revenue identical:", res["hipster_revenue_identical"])

bound = check_hipster_welfare_bound(g, exp1, 0.6, t, trials=20_000, seed=7)
print(f"MWIS bound violations: {bound['violations']}, E[MWIS] ~ {bound['mean_mwis']:.4f}")
