import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pubgood.equilibrium import ThresholdVector, expected_revenue, solve_fixed_point
from pubgood.graphs import clique, empty, path, random_gnp
from pubgood.simulation import (
    BLOCK,
    check_hipster_welfare_bound,
    draw_values,
    independent_sets,
    mwis_batch,
    mwis_exact,
    play,
    simulate,
)

from conftest import EXP1, UNIT
from strategies import small_graphs


def brute_mwis(g, w):
    best = 0.0
    for r in range(g.n + 1):
        for s in itertools.combinations(range(g.n), r):
            if g.is_independent(s):
                best = max(best, sum(max(w[i], 0.0) for i in s))
    return best


# -- simulate -------------------------------------------------------------------------

def test_symmetric_clique_matches_closed_form():
    p = 0.8 ** 5
    t = ThresholdVector.from_sequence([0.8] * 5)
    res = simulate(clique(5), UNIT, p, t, trials=100_000, seed=0)
    assert res["expected_revenue"] == pytest.approx(0.32768, abs=1e-12)
    assert abs(res["mean_revenue"] - p) <= 3 * res["stderr"]
    assert res["hipster_revenue_identical"]


def test_never_buy_earns_nothing():
    t = ThresholdVector.from_sequence(["never"] * 4)
    res = simulate(clique(4), UNIT, 0.3, t, trials=5000, keep_outcomes=True)
    assert res["mean_revenue"] == 0.0
    assert all(not o.buyers.any() for o in res["outcomes"])


def test_hipster_and_public_revenue_identical_per_trial():
    g = random_gnp(10, 0.4, seed=1)
    t = solve_fixed_point(g, UNIT, 0.4)
    res = simulate(g, UNIT, 0.4, t, trials=10_000, keep_outcomes=True)
    for o in res["outcomes"]:
        assert np.array_equal(o.revenue_realized, o.revenue_hipster)
        assert np.all(o.welfare_hipster <= o.welfare_public + 1e-12)


def test_seed_determinism_and_worker_invariance():
    g = random_gnp(8, 0.5, seed=2)
    t = solve_fixed_point(g, EXP1, 0.5)
    a = simulate(g, EXP1, 0.5, t, trials=3 * BLOCK + 17, seed=7)
    b = simulate(g, EXP1, 0.5, t, trials=3 * BLOCK + 17, seed=7)
    c = simulate(g, EXP1, 0.5, t, trials=3 * BLOCK + 17, seed=7, workers=2)
    assert a == b == c
    d = simulate(g, EXP1, 0.5, t, trials=3 * BLOCK + 17, seed=8)
    assert d["mean_revenue"] != a["mean_revenue"]


def test_draws_are_keyed_per_agent():
    # Adding agents does not change the draws of existing ones.
    assert np.array_equal(draw_values(UNIT, 3, 5, 2), draw_values(UNIT, 6, 5, 2)[:, :3])


def test_simulate_rejects_zero_trials():
    with pytest.raises(ValueError):
        simulate(empty(1), UNIT, 0.5, ThresholdVector.from_sequence([0.5]), trials=0)


def test_estimator_consistency_over_repeats():
    g = random_gnp(7, 0.5, seed=3)
    t = solve_fixed_point(g, UNIT, 0.3)
    exact = expected_revenue(0.3, t, UNIT).expected_revenue
    hits = 0
    for seed in range(100):
        res = simulate(g, UNIT, 0.3, t, trials=4000, seed=seed)
        hits += abs(res["mean_revenue"] - exact) <= 3 * res["stderr"]
    # 3 sigma covers 99.7%; allow a little slack for 100 repeats.
    assert hits >= 97


@given(small_graphs(), st.integers(0, 10**6))
def test_buyer_set_monotone_in_thresholds(g, seed):
    rng = np.random.default_rng(seed)
    values = rng.random((20, g.n))
    lo = rng.random(g.n)
    i = int(rng.integers(g.n))
    hi = lo.copy()
    hi[i] = min(1.0, hi[i] + rng.random())
    no = np.zeros(g.n, bool)
    a = play(g, 0.1, ThresholdVector(lo, no), values).buyers
    b = play(g, 0.1, ThresholdVector(hi, no), values).buyers
    assert np.all(b[:, i] <= a[:, i])


def test_play_outcome_fields():
    g = path(3)
    t = ThresholdVector.from_sequence([0.5, 0.5, 0.5])
    out = play(g, 0.2, t, [[0.6, 0.1, 0.7]])
    assert out.buyers.tolist() == [[True, False, True]]
    assert out.revenue_realized[0] == pytest.approx(0.4)
    assert out.welfare_public[0] == pytest.approx(1.4 - 0.4)
    assert out.welfare_hipster[0] == pytest.approx(1.3 - 0.4)
    out = play(g, 0.2, t, [[0.6, 0.9, 0.1]])
    assert out.welfare_hipster[0] == pytest.approx(-0.4)


# -- MWIS -----------------------------------------------------------------------------

def test_mwis_examples():
    w = [0.3, 0.9, 0.2, 0.5]
    assert mwis_exact(clique(4), w)["weight"] == pytest.approx(0.9)
    assert mwis_exact(empty(4), w)["weight"] == pytest.approx(1.9)
    res = mwis_exact(path(3), [1, 3, 1])
    assert res == {"weight": 3.0, "set": [1]}
    with pytest.raises(ValueError):
        mwis_exact(empty(26), np.ones(26))


@settings(max_examples=30)
@given(st.integers(1, 16), st.integers(0, 10**6))
def test_mwis_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    g = random_gnp(n, rng.uniform(0.1, 0.7), seed=seed)
    w = rng.normal(0.5, 0.5, n)
    res = mwis_exact(g, w)
    assert g.is_independent(res["set"])
    assert res["weight"] == pytest.approx(sum(w[i] for i in res["set"]), abs=1e-12)
    assert res["weight"] == pytest.approx(brute_mwis(g, w), abs=1e-12)


@given(small_graphs(max_n=9), st.integers(0, 10**6))
def test_batch_enumeration_agrees_with_branch_and_bound(g, seed):
    w = np.random.default_rng(seed).random((5, g.n))
    sets = independent_sets(g)
    assert np.allclose(mwis_batch(g, w, sets), [mwis_exact(g, row)["weight"] for row in w])


# -- hipster welfare bound ----------------------------------------------------------

def test_welfare_bound_random_graphs():
    for seed in range(5):
        g = random_gnp(12, 0.3, seed=seed)
        t = solve_fixed_point(g, UNIT, 0.4)
        res = check_hipster_welfare_bound(g, UNIT, 0.4, t, trials=10_000, seed=seed)
        assert res["violations"] == 0
        assert res["mean_revenue"] <= res["mean_mwis"] + 3 * res["mwis_stderr"]


def test_welfare_bound_single_node():
    t = ThresholdVector.from_sequence([0.5])
    res = check_hipster_welfare_bound(empty(1), UNIT, 0.5, t, trials=2000)
    assert res["violations"] == 0
    assert res["mean_mwis"] == pytest.approx(0.5, abs=0.03)
