"""Named reproduction experiments with pass/fail checks.

Each experiment returns an :class:`Experiment` holding plot-ready rows
and a list of checks. Everything is deterministic given ``seed``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .distributions import exponential, myerson_revenue_n, prophet_price, uniform
from .equilibrium import (
    ThresholdVector,
    expected_revenue,
    solve_fixed_point,
    symmetric_threshold,
    thresholds_from_x,
    verify_equilibrium,
)
from .graphs import (
    CnfFormula,
    ReductionSpec,
    clique,
    d_regular_bipartite,
    pentagon_gadget,
    random_gnp,
)
from .pricing import myerson_upper_bound, price_clique, symmetric_revenue
from .sequential import clique_committed_optimum, clique_subgame_perfect, pn_formula
from .simulation import check_hipster_welfare_bound, simulate
from .worstcase import enumerate_vertices, hardness_experiment, worst_case_revenue_curve

__all__ = ["Check", "Experiment", "EXPERIMENTS", "run_experiment"]

UNIT = uniform(0.0, 1.0)
EXP1 = exponential(1.0)


@dataclass
class Check:
    label: str
    passed: bool
    detail: str = ""
    exploratory: bool = False

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        note = " (exploratory)" if self.exploratory else ""
        return f"{tag} {self.label}{note}: {self.detail}"


@dataclass
class Experiment:
    name: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    elapsed: float = 0.0
    time_limit: float | None = None

    @property
    def passed(self) -> bool:
        """All non-exploratory checks pass."""
        return all(c.passed for c in self.checks if not c.exploratory)

    def check(self, label, passed, detail="", exploratory=False):
        self.checks.append(Check(label, bool(passed), detail, exploratory))

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "elapsed": self.elapsed,
                "checks": [c.__dict__ for c in self.checks], "rows": self.rows}


def _timed(limit):
    def wrap(fn):
        def run(**kw):
            start = time.perf_counter()
            exp = fn(**kw)
            exp.elapsed = time.perf_counter() - start
            exp.time_limit = limit
            exp.check("runtime", exp.elapsed < limit, f"{exp.elapsed:.2f}s < {limit}s")
            return exp
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


@_timed(5.0)
def clique_approx(n_max: int = 50, **_) -> Experiment:
    """Symmetric revenue at the clique price versus the Myerson benchmark."""
    exp = Experiment("clique-approx")
    worst = math.inf
    ok_upper = True
    for label, dist in (("uniform", UNIT), ("exponential", EXP1)):
        for n in range(2, n_max + 1):
            rec = price_clique(dist, n)
            bench = myerson_upper_bound(dist, n)
            ratio = rec.symmetric_revenue / bench
            worst = min(worst, ratio)
            ok_upper &= rec.symmetric_revenue <= bench + 1e-9
            exp.rows.append({"dist": label, "n": n, "price": rec.price,
                             "symmetric_revenue": rec.symmetric_revenue,
                             "myerson_revenue": bench, "ratio": ratio})
    exp.check("revenue >= R^M_n / 4", worst >= 0.25 - 1e-9, f"min ratio {worst:.6f}")
    exp.check("revenue <= R^M_n", ok_upper)
    return exp


@_timed(10.0)
def clique_worst(n_max: int = 20, samples: int = 200, seed: int = 0, **_) -> Experiment:
    """Random equilibria on K_n at the clique price all earn at least p/2."""
    exp = Experiment("clique-worst")
    rng = np.random.default_rng(seed)
    worst_gap = math.inf
    all_valid = True
    for n in range(2, n_max + 1):
        p = price_clique(UNIT, n).price
        g = clique(n)
        lowest = math.inf
        for _ in range(samples):
            # x on the simplex with a random support; T = p**x has product p.
            support = rng.random(n) < rng.uniform(0.1, 1.0)
            support[rng.integers(n)] = True
            x = np.where(support, rng.exponential(size=n), 0.0)
            x /= x.sum()
            t = thresholds_from_x(x, p)
            all_valid &= verify_equilibrium(g, UNIT, p, t)["valid"]
            lowest = min(lowest, expected_revenue(p, t, UNIT).expected_revenue)
        worst_gap = min(worst_gap, lowest - 0.5 * p)
        exp.rows.append({"n": n, "price": p, "min_revenue": lowest, "half_price": 0.5 * p})
    exp.check("sampled equilibria verify", all_valid)
    exp.check("revenue >= p/2", worst_gap >= -1e-9, f"min margin {worst_gap:.3e}")
    return exp


@_timed(2.0)
def myerson_gap(sizes=(10**3, 10**4, 10**5, 10**6), **_) -> Experiment:
    """The reserve price 1 against a larger price on exponential cliques."""
    exp = Experiment("myerson-gap")
    low_ok = high_ok = True
    for n in sizes:
        t1 = symmetric_threshold(n - 1, EXP1, 1.0)
        r_reserve = n * (1.0 - float(EXP1.cdf(t1)))
        p = math.log(n) * (1.0 - 1.0 / n) ** (n - 1)
        r_better = symmetric_revenue(n, n - 1, EXP1, p)
        low_ok &= r_reserve < 2 * math.log(math.log(n))
        high_ok &= r_better > 0.25 * math.log(n)
        exp.rows.append({"n": n, "revenue_at_reserve": r_reserve,
                         "two_loglog_n": 2 * math.log(math.log(n)),
                         "price": p, "revenue_at_price": r_better,
                         "quarter_log_n": 0.25 * math.log(n)})
    exp.check("R(1) < 2 log log n", low_ok)
    exp.check("R(log n (1-1/n)^(n-1)) > log(n)/4", high_ok)
    return exp


def pentagon_equilibria(big_n: int, p: float):
    """The two equilibria of the pentagon gadget: all-cycle and free-riding."""
    g = pentagon_gadget(big_n)
    a = ["never"] * g.n
    for i in range(5):
        a[i] = p ** (1.0 / 3.0)
    b = ["never"] * g.n
    b[0] = b[2] = p
    # The block of extra nodes attached to the complement triple {1, 3, 4}.
    for i in g.label_nodes("triple-134"):
        b[i] = p
    return g, ThresholdVector.from_sequence(a), ThresholdVector.from_sequence(b)


@_timed(2.0)
def pentagon_gap(sizes=(10, 100, 1000), p: float = 0.5, **_) -> Experiment:
    """Revenue gap between two equilibria grows linearly in N."""
    exp = Experiment("pentagon-gap")
    ratios = []
    valid = closed = True
    for big_n in sizes:
        g, ta, tb = pentagon_equilibria(big_n, p)
        va = verify_equilibrium(g, UNIT, p, ta, tol=1e-9)
        vb = verify_equilibrium(g, UNIT, p, tb, tol=1e-9)
        valid &= va["valid"] and vb["valid"]
        ra = expected_revenue(p, ta, UNIT).expected_revenue
        rb = expected_revenue(p, tb, UNIT).expected_revenue
        closed &= (abs(ra - 5 * p * (1 - p ** (1 / 3))) < 1e-12
                   and abs(rb - (big_n + 2) * p * (1 - p)) < 1e-9)
        bound = (big_n + 2) * (1 - p) / (5 * (1 - p ** (1 / 3)))
        ratios.append(rb / ra)
        exp.rows.append({"N": big_n, "nodes": g.n, "p": p, "revenue_A": ra, "revenue_B": rb,
                         "ratio": rb / ra, "ratio_bound": bound})
        closed &= rb / ra >= bound - 1e-9
    per_n = [r / (n + 2) for r, n in zip(ratios, sizes)]
    exp.check("both equilibria verify at 1e-9", valid)
    exp.check("revenues match closed forms and ratio bound", closed)
    exp.check("ratio linear in N", max(per_n) - min(per_n) < 1e-9 * max(per_n),
              f"ratio/(N+2) = {per_n[0]:.6f}")
    return exp


@_timed(2.0)
def bipartite(n: int = 40, d: int = 10, p: float = 0.5, **_) -> Experiment:
    """One side buys, the other free-rides, on a d-regular bipartite graph."""
    exp = Experiment("bipartite")
    g = d_regular_bipartite(n, d)
    t = ThresholdVector.from_sequence([p] * (n // 2) + ["never"] * (n // 2))
    check = verify_equilibrium(g, UNIT, p, t, tol=1e-9)
    rev = expected_revenue(p, t, UNIT).expected_revenue
    t_star = float(UNIT.ppf(1 - 1 / d))
    f_star = float(UNIT.cdf(t_star))
    comparison = n / d * sum(t_star * (1 - f_star) * f_star ** (i - 1) for i in range(1, d + 1))
    cap = 2 * n / d * t_star
    grid = np.linspace(0.01, 0.99, 99)
    best_symmetric = max(symmetric_revenue(n, d, UNIT, float(q)) for q in grid)
    myerson_ref = n / d * myerson_revenue_n(UNIT, d)["revenue"]
    exp.rows.append({"n": n, "d": d, "p": p, "free_riding_revenue": rev,
                     "residual": check["residual"], "T_star": t_star,
                     "comparison_sum": comparison, "cap_2n_over_d_T_star": cap,
                     "best_symmetric_revenue": best_symmetric,
                     "n_over_d_myerson": myerson_ref})
    exp.check("free-riding equilibrium verifies", check["valid"], f"residual {check['residual']:.1e}")
    exp.check("revenue = n/8", rev == n / 8, f"{rev}")
    exp.check("reference revenue <= (2n/d) T*",
              max(comparison, best_symmetric, myerson_ref) <= cap + 1e-12,
              f"{max(comparison, best_symmetric, myerson_ref):.6f} <= {cap:.6f}")
    return exp


def random_instances(count: int = 30, n_max: int = 10, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(3, n_max + 1))
        out.append(random_gnp(n, float(rng.uniform(0.2, 0.7)), seed=int(rng.integers(2**31))))
    return out


@_timed(600.0)
def uniform_general(count: int = 30, n_max: int = 10, seed: int = 0, **_) -> Experiment:
    """Price 1/2 versus the best grid price, plus the sandwich bounds."""
    exp = Experiment("uniform-general")
    grid = np.round(np.linspace(0.01, 0.99, 99), 12)
    sandwich_prices = np.round(np.linspace(0.1, 0.9, 9), 12)
    worst_ratio = math.inf
    violations = 0
    for k, g in enumerate(random_instances(count, n_max, seed)):
        verts = enumerate_vertices(g)
        curve = worst_case_revenue_curve(g, grid, vertices=verts)
        wc = np.array([r.exact_min_revenue for r in curve])
        half = wc[49]
        ratio = half / wc.max()
        worst_ratio = min(worst_ratio, ratio)
        for r in worst_case_revenue_curve(g, sandwich_prices, vertices=verts):
            if not r.lower_bound - 1e-12 <= r.exact_min_revenue <= r.upper_bound + 1e-12:
                violations += 1
        exp.rows.append({"instance": k, "n": g.n, "edges": g.num_edges,
                         "min_sum_x": curve[0].min_sum_x, "wc_half": half,
                         "wc_best": float(wc.max()), "best_price": float(grid[np.argmax(wc)]),
                         "ratio": ratio})
        if half < math.e / 4 * wc.max() - 1e-6:
            exp.rows[-1]["violates"] = True
    exp.check("WC(1/2) >= (e/4) max_p WC(p)", worst_ratio >= math.e / 4 - 1e-6,
              f"min ratio {worst_ratio:.6f} vs e/4 = {math.e / 4:.6f}")
    exp.check("sandwich bounds hold", violations == 0, f"{violations} violations")
    return exp


def unsat_formula() -> CnfFormula:
    """All eight sign patterns over three variables: unsatisfiable."""
    clauses = [tuple(s * v for s, v in zip(signs, (1, 2, 3)))
               for signs in np.array(np.meshgrid([1, -1], [1, -1], [1, -1])).T.reshape(-1, 3)]
    return CnfFormula(3, [tuple(int(l) for l in c) for c in clauses])


@_timed(300.0)
def hardness(L: int = 1, **_) -> Experiment:
    """Gap between satisfiable and unsatisfiable reduction graphs."""
    exp = Experiment("hardness")
    sat = hardness_experiment(ReductionSpec(CnfFormula(1, [(1, 1, 1)]), L=L))
    unsat = hardness_experiment(ReductionSpec(unsat_formula(), L=L))
    for label, res in (("satisfiable", sat), ("unsatisfiable", unsat)):
        exp.rows.append({"instance": label, "nodes": res["num_nodes"],
                         "min_sum_x": res["min_sum_x"], "verdict": res["verdict"],
                         "low": res["threshold"]["low"], "high": res["threshold"]["high"],
                         "gadget_integral": res["gadget_integral"],
                         "nodes_explored": res["nodes_explored"]})
    exp.check("satisfiable: min sum x = 3m", abs(sat["min_sum_x"] - 3) < 1e-7,
              f"{sat['min_sum_x']:.9f}")
    high = unsat["threshold"]["high"]
    exp.check(f"unsatisfiable: min sum x >= {high}", unsat["min_sum_x"] >= high - 1e-7,
              f"{unsat['min_sum_x']:.9f} on {unsat['num_nodes']} nodes")
    exp.check("gadget pairs integral", sat["gadget_integral"] and unsat["gadget_integral"])
    return exp


@_timed(60.0)
def seq_clique(n_max: int = 30, commit_max: int = 20, restarts: int = 3, seed: int = 0,
               workers: int = 1, **_) -> Experiment:
    """Stage-wise clique pricing against the product formula, and commitment."""
    exp = Experiment("seq-clique")
    price_err = rev_err = 0.0
    sp = {}
    for n in range(1, n_max + 1):
        pol = clique_subgame_perfect(n)
        pn = pn_formula(n)
        sp[n] = pol.revenue
        price_err = max(price_err, abs(pol.prices[0] - pn))
        rev_err = max(rev_err, abs(pol.revenue - (1 - 2.0 ** -n) * pn))
        exp.rows.append({"n": n, "first_price": pol.prices[0], "P_n": pn,
                         "revenue": pol.revenue, "committed_revenue": None})
    exp.check("first price = P(n)", price_err <= 1e-9, f"max error {price_err:.1e}")
    exp.check("revenue = (1 - 2^-n) P(n)", rev_err <= 1e-9, f"max error {rev_err:.1e}")
    exp.check("revenue at n=30 ~ 0.2888", abs(sp[n_max] - 0.2888) <= 1e-3, f"{sp[n_max]:.6f}")
    committed = []
    for n in range(1, commit_max + 1):
        res = clique_committed_optimum(n, restarts=restarts, seed=seed, workers=workers)
        committed.append(res["revenue"])
        exp.rows[n - 1]["committed_revenue"] = res["revenue"]
    dominance = all(c >= sp[n] - 1e-12 for n, c in enumerate(committed, start=1))
    monotone = all(b >= a - 1e-12 for a, b in zip(committed, committed[1:]))
    last = committed[-1]
    exp.check("commitment >= no commitment", dominance, exploratory=True)
    exp.check("committed revenue nondecreasing in n", monotone, exploratory=True)
    exp.check(f"committed revenue at n={commit_max} in (0.2888, 1/e + 1e-3]",
              0.2888 < last <= 1 / math.e + 1e-3, f"{last:.6f}", exploratory=True)
    return exp


@_timed(60.0)
def montecarlo(count: int = 10, trials: int = 100_000, seed: int = 0, workers: int = 1,
               **_) -> Experiment:
    """Simulated revenue against the closed form, and the hipster checks."""
    exp = Experiment("montecarlo")
    rng = np.random.default_rng(seed)
    within = 0
    identical = True
    violations = 0
    for k in range(count):
        n = int(rng.integers(5, 13))
        g = random_gnp(n, float(rng.uniform(0.2, 0.6)), seed=int(rng.integers(2**31)))
        dist = UNIT if k % 2 == 0 else EXP1
        p = float(rng.uniform(0.2, 0.6))
        t = solve_fixed_point(g, dist, p)
        sim = simulate(g, dist, p, t, trials, seed=seed + k, workers=workers)
        hip = check_hipster_welfare_bound(g, dist, p, t, trials, seed=seed + k)
        z = abs(sim["mean_revenue"] - sim["expected_revenue"]) / max(sim["stderr"], 1e-300)
        within += z <= 3
        identical &= sim["hipster_revenue_identical"]
        violations += hip["violations"]
        exp.rows.append({"instance": k, "n": n, "dist": dist.name, "p": p,
                         "expected": sim["expected_revenue"], "empirical": sim["mean_revenue"],
                         "stderr": sim["stderr"], "z": z, "mean_mwis": hip["mean_mwis"],
                         "mwis_violations": hip["violations"]})
    exp.check("empirical within 3 sigma", within >= math.ceil(0.9 * count),
              f"{within}/{count} instances")
    exp.check("hipster revenue bit-identical", identical)
    exp.check("no MWIS-bound violations", violations == 0, f"{violations}")
    return exp


@_timed(1.0)
def prophet(n_max: int = 100, **_) -> Experiment:
    """Prophet price earns at least half the Myerson revenue."""
    exp = Experiment("prophet")
    worst = math.inf
    for label, dist in (("uniform", UNIT), ("exponential", EXP1)):
        for n in range(1, n_max + 1):
            res = prophet_price(dist, n)
            ratio = res["seq_revenue"] / res["myerson_revenue"]
            worst = min(worst, ratio)
            exp.rows.append({"dist": label, "n": n, **res, "ratio": ratio})
    exp.check("prophet revenue >= R^M_n / 2", worst >= 0.5, f"min ratio {worst:.6f}")
    return exp


EXPERIMENTS = {
    "clique-approx": clique_approx,
    "clique-worst": clique_worst,
    "myerson-gap": myerson_gap,
    "pentagon-gap": pentagon_gap,
    "bipartite": bipartite,
    "uniform-general": uniform_general,
    "sandwich": uniform_general,
    "hardness": hardness,
    "seq-clique": seq_clique,
    "montecarlo": montecarlo,
    "prophet": prophet,
}


def run_experiment(name: str, **params) -> Experiment:
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name](**params)
