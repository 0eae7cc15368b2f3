import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from pubgood.equilibrium import thresholds_from_x, verify_equilibrium
from pubgood.graphs import CnfFormula, ReductionSpec, clique, cycle, empty, path, pentagon_gadget, star
from pubgood.repro import unsat_formula
from pubgood.worstcase import (
    SizeLimitError,
    enumerate_vertices,
    feasible_assignment,
    hardness_experiment,
    min_sum_x,
    revenue_of_x,
    worst_case_revenue_bounds,
    worst_case_revenue_curve,
    worst_case_revenue_exact,
)

from conftest import UNIT
from strategies import small_graphs


def support_oracle(g):
    """min sum x over X by one LP per support set (independent of the package)."""
    a = g.closed_matrix()
    best = math.inf
    for mask in range(1, 2 ** g.n):
        s = [i for i in range(g.n) if mask >> i & 1]
        bounds = [(0, None) if i in s else (0, 0) for i in range(g.n)]
        res = linprog(np.ones(g.n), A_ub=-a, b_ub=-np.ones(g.n),
                      A_eq=a[s], b_eq=np.ones(len(s)), bounds=bounds, method="highs")
        if res.status == 0:
            best = min(best, res.fun)
    return best


def grid_oracle_k2(p, steps=100_001):
    # Equilibria of K_2 in x: x1 + x2 = 1 with both in [0, 1].
    x1 = np.linspace(0, 1, steps)
    return float(np.min(p * ((1 - p ** x1) + (1 - p ** (1 - x1)))))


# -- min sum x ------------------------------------------------------------------

def test_min_sum_x_examples():
    assert min_sum_x(clique(6))["value"] == pytest.approx(1.0)
    assert min_sum_x(empty(5))["value"] == pytest.approx(5.0)
    res = min_sum_x(cycle(5))
    assert res["value"] == pytest.approx(5 / 3, abs=1e-9)
    assert support_oracle(cycle(5)) == pytest.approx(5 / 3, abs=1e-9)


@settings(max_examples=25)
@given(small_graphs(max_n=7))
def test_min_sum_x_matches_support_oracle(g):
    assert min_sum_x(g)["value"] == pytest.approx(support_oracle(g), abs=1e-7)


@settings(max_examples=25)
@given(small_graphs(max_n=9))
def test_vertex_enumeration_matches_branch_and_bound(g):
    verts = enumerate_vertices(g)
    assert verts.sum(axis=1).min() == pytest.approx(min_sum_x(g)["value"], abs=1e-7)
    for x in verts:
        assert feasible_assignment(g, x).is_valid()


@given(small_graphs(max_n=8))
def test_isolated_node_adds_one(g):
    assert min_sum_x(g.with_isolated())["value"] == pytest.approx(min_sum_x(g)["value"] + 1, abs=1e-7)


def test_size_limits():
    with pytest.raises(SizeLimitError):
        enumerate_vertices(cycle(13))
    with pytest.raises(SizeLimitError):
        min_sum_x(cycle(200))


# -- feasible assignments -------------------------------------------------------------

def test_feasible_assignment_invariants():
    g = cycle(5)
    ok = feasible_assignment(g, np.full(5, 1 / 3))
    assert ok.is_valid() and ok.total == pytest.approx(5 / 3)
    assert ok.support == frozenset(range(5))
    bad = feasible_assignment(g, [1, 1, 0, 0, 0])   # node 0 oversubscribed
    assert not bad.is_valid() and bad.violations()
    under = feasible_assignment(path(3), [0, 0, 0])
    assert not under.is_valid()


# -- exact worst case --------------------------------------------------------------

def test_exact_examples():
    assert worst_case_revenue_exact(empty(1), 0.5).exact_min_revenue == pytest.approx(0.25)
    res = worst_case_revenue_exact(clique(2), 0.25)
    assert res.exact_min_revenue == pytest.approx(3 / 16, abs=1e-12)
    assert grid_oracle_k2(0.25) == pytest.approx(3 / 16, abs=1e-12)
    assert sorted(res.argmin.x) == [0.0, 1.0]
    res = worst_case_revenue_exact(pentagon_gadget(1), 0.5, max_nodes=15)
    assert res.exact_min_revenue <= 5 * 0.5 * (1 - 0.5 ** (1 / 3)) + 1e-12


def test_bounds_examples():
    b = worst_case_revenue_bounds(clique(2), 0.25)
    assert b.lower_bound == pytest.approx(3 / 16)
    assert b.upper_bound == pytest.approx(0.25 * math.log(4))
    b = worst_case_revenue_bounds(cycle(5), 0.5)
    assert b.lower_bound == pytest.approx(5 / 12)
    assert b.upper_bound == pytest.approx(0.5 * math.log(2) * 5 / 3)


def test_price_domain():
    for p in (0.0, 1.0, 1e-7):
        with pytest.raises(ValueError):
            worst_case_revenue_exact(clique(2), p)


@settings(max_examples=30)
@given(small_graphs(max_n=10), st.lists(st.floats(0.05, 0.95), min_size=1, max_size=5))
def test_sandwich_and_argmin_verifies(g, prices):
    for r in worst_case_revenue_curve(g, prices):
        assert r.lower_bound - 1e-12 <= r.exact_min_revenue <= r.upper_bound + 1e-12
        t = thresholds_from_x(r.argmin.x, r.price)
        assert verify_equilibrium(g, UNIT, r.price, t, tol=1e-8)["valid"]
        assert revenue_of_x(r.argmin.x, r.price) == pytest.approx(r.exact_min_revenue)


@pytest.mark.parametrize("seed", range(3))
def test_random_search_never_beats_enumerator(seed):
    """Random feasible points of X (built from vertices) stay above the minimum."""
    rng = np.random.default_rng(seed)
    g = star(3) if seed == 0 else cycle(6 + seed)
    p = 0.3
    exact = worst_case_revenue_exact(g, p).exact_min_revenue
    # Supports of random equilibria: solve the LP over a random support with a
    # random objective; every feasible result is an equilibrium.
    a = g.closed_matrix()
    found = 0
    for _ in range(3000):
        s = [i for i in range(g.n) if rng.random() < 0.6]
        if not s:
            continue
        bounds = [(0, 1) if i in s else (0, 0) for i in range(g.n)]
        res = linprog(rng.normal(size=g.n), A_ub=-a, b_ub=-np.ones(g.n), A_eq=a[s],
                      b_eq=np.ones(len(s)), bounds=bounds, method="highs")
        if res.status != 0:
            continue
        x = np.clip(res.x, 0, 1)
        fa = feasible_assignment(g, x)
        if not fa.is_valid(tol=1e-8):
            continue
        found += 1
        assert revenue_of_x(x, p) >= exact - 1e-9
    assert found > 100


# -- hardness ---------------------------------------------------------------------------

def test_hardness_satisfiable_single_clause():
    res = hardness_experiment(ReductionSpec(CnfFormula(1, [(1, 1, 1)])))
    assert res["min_sum_x"] == pytest.approx(3.0, abs=1e-9)
    assert res["verdict"] == "low" and res["gadget_integral"]
    from pubgood.graphs import sat_reduction
    assert support_oracle(sat_reduction(ReductionSpec(CnfFormula(1, [(1, 1, 1)])))) \
        == pytest.approx(3.0, abs=1e-9)


def test_hardness_unsatisfiable():
    res = hardness_experiment(ReductionSpec(unsat_formula()))
    assert res["num_nodes"] == 82
    assert res["min_sum_x"] >= 17 - 1e-7
    assert res["verdict"] == "high" and res["gadget_integral"]
    assert res["satisfiable"] is False


def test_hardness_satisfiable_formula_stays_low():
    formula = CnfFormula(3, [(1, 2, 3), (-1, 2, 3), (1, -2, 3), (1, 2, -3),
                             (-1, -2, 3), (-1, 2, -3), (1, -2, -3)])
    res = hardness_experiment(ReductionSpec(formula))
    assert res["satisfiable"]
    assert res["min_sum_x"] == pytest.approx(9.0, abs=1e-7)
    for xu, xv in res["gadget_pairs"]:
        assert (round(xu), round(xv)) in {(0, 1), (1, 0), (0, 0)}
