"""Monte Carlo play of the purchasing game and exact MWIS bounds.

Values are drawn from counter-based streams keyed by ``(seed, agent,
block)``, so trial ``t`` of agent ``i`` sees the same draw no matter how
trials are split across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import ValueDistribution
from .equilibrium import PriceVector, ThresholdVector, expected_revenue
from .graphs import Graph

__all__ = [
    "BLOCK",
    "Outcome",
    "draw_values",
    "play",
    "simulate",
    "mwis_exact",
    "independent_sets",
    "mwis_batch",
    "check_hipster_welfare_bound",
    "default_workers",
]

BLOCK = 4096
MAX_MWIS_NODES = 25
MAX_ENUM_NODES = 20


def default_workers() -> int:
    env = os.environ.get("PUBGOOD_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def draw_values(dist: ValueDistribution, n: int, seed: int, block: int) -> np.ndarray:
    """Values for trials ``block*BLOCK .. (block+1)*BLOCK - 1``, shape (BLOCK, n)."""
    u = np.empty((BLOCK, n))
    for i in range(n):
        u[:, i] = np.random.default_rng([seed, i, block]).random(BLOCK)
    return dist.ppf(u)


@dataclass(frozen=True)
class Outcome:
    """One realized play (or a batch of plays, row-wise)."""

    values: np.ndarray
    buyers: np.ndarray
    revenue_realized: np.ndarray
    welfare_public: np.ndarray
    welfare_hipster: np.ndarray
    revenue_hipster: np.ndarray


def _buyers(values: np.ndarray, thresholds: ThresholdVector) -> np.ndarray:
    # Ties buy; NEVER_BUY agents never do.
    t = np.where(thresholds.never, np.inf, thresholds.values)
    return values >= t


def _public_goods(values, buyers, adj, p):
    """Payments and welfare when every buyer serves its whole neighborhood."""
    served = buyers | ((buyers.astype(float) @ adj) > 0)
    payments = buyers.astype(float) @ p
    return payments, np.sum(values * served, axis=1) - payments


def _hipster(values, buyers, adj, p):
    """Payments and welfare when a buyer gains only if no neighbor bought."""
    alone = buyers & ((buyers.astype(float) @ adj) == 0)
    payments = buyers.astype(float) @ p
    return payments, np.sum(values * alone, axis=1) - payments


def play(graph: Graph, prices, thresholds: ThresholdVector, values) -> Outcome:
    """Evaluate both utility models on given value profiles (rows)."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    p = PriceVector.of(prices, graph.n).values
    adj = graph.adjacency_matrix()
    buyers = _buyers(values, thresholds)
    revenue, welfare_public = _public_goods(values, buyers, adj, p)
    revenue_h, welfare_hipster = _hipster(values, buyers, adj, p)
    return Outcome(values, buyers, revenue, welfare_public, welfare_hipster, revenue_h)


def _run_block(args):
    graph, dist, prices, thresholds, seed, block, count = args
    values = draw_values(dist, graph.n, seed, block)[:count]
    out = play(graph, prices, thresholds, values)
    identical = bool(np.array_equal(out.revenue_realized, out.revenue_hipster))
    r = out.revenue_realized
    return (count, r.sum(), (r * r).sum(), out.welfare_public.sum(),
            out.welfare_hipster.sum(), identical, out)


def _blocks(trials: int):
    full, rest = divmod(trials, BLOCK)
    sizes = [BLOCK] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def simulate(graph: Graph, dist: ValueDistribution, prices, thresholds: ThresholdVector,
             trials: int, seed: int = 0, keep_outcomes: bool = False,
             workers: int = 1) -> dict:
    """Play ``trials`` i.i.d. value profiles against fixed thresholds.

    Aggregates are summed block by block in block order, so results are
    bit-identical for any ``workers``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    jobs = [(graph, dist, prices, thresholds, seed, b, c) for b, c in _blocks(trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    s = s2 = wp = wh = 0.0
    identical = True
    for count, r1, r2, w1, w2, same, _ in parts:
        s += r1; s2 += r2; wp += w1; wh += w2
        identical &= same
    mean = s / trials
    var = max(s2 / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    result = {
        "trials": trials,
        "mean_revenue": float(mean),
        "stderr": math.sqrt(var / trials),
        "mean_welfare_public": float(wp / trials),
        "mean_welfare_hipster": float(wh / trials),
        "hipster_revenue_identical": identical,
        "expected_revenue": expected_revenue(prices if np.ndim(prices) else
                                             np.full(graph.n, float(prices)),
                                             thresholds, dist).expected_revenue,
    }
    if keep_outcomes:
        result["outcomes"] = [part[-1] for part in parts]
    return result


# -- maximum weight independent set -----------------------------------------

def mwis_exact(graph: Graph, weights) -> dict:
    """Exact maximum weight independent set by branch and bound.

    Branches on the remaining node of largest remaining degree (take it,
    dropping its neighbors, or discard it) and prunes with the sum of the
    remaining positive weights.
    """
    n = graph.n
    if n > MAX_MWIS_NODES:
        raise ValueError(f"mwis_exact limited to {MAX_MWIS_NODES} nodes (graph has {n})")
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError("need one weight per node")
    nbr = [0] * n
    for i, nb in enumerate(graph.adjacency):
        for j in nb:
            nbr[i] |= 1 << j
    pos = [max(float(x), 0.0) for x in w]
    best = [0.0, 0]

    def bound(mask):
        total = 0.0
        while mask:
            low = mask & -mask
            total += pos[low.bit_length() - 1]
            mask ^= low
        return total

    def search(mask, value, chosen):
        if value > best[0]:
            best[0], best[1] = value, chosen
        if not mask or value + bound(mask) <= best[0]:
            return
        # Highest-degree node within the remaining subgraph.
        v, vdeg = -1, -1
        m = mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            d = bin(nbr[i] & mask).count("1")
            if d > vdeg:
                v, vdeg = i, d
            m ^= low
        bit = 1 << v
        if vdeg == 0:
            # Isolated in the remainder: take every positive node.
            rest = mask
            add, extra = 0.0, 0
            while rest:
                low = rest & -rest
                i = low.bit_length() - 1
                if pos[i] > 0:
                    add += pos[i]
                    extra |= low
                rest ^= low
            if value + add > best[0]:
                best[0], best[1] = value + add, chosen | extra
            return
        if pos[v] > 0:
            search(mask & ~bit & ~nbr[v], value + pos[v], chosen | bit)
        search(mask & ~bit, value, chosen)

    search((1 << n) - 1, 0.0, 0)
    nodes = [i for i in range(n) if best[1] >> i & 1]
    return {"weight": best[0], "set": nodes}


def independent_sets(graph: Graph) -> np.ndarray:
    """Indicator matrix (nodes x sets) of all maximal independent sets."""
    n = graph.n
    if n > MAX_ENUM_NODES:
        raise ValueError(f"independent-set enumeration limited to {MAX_ENUM_NODES} nodes")
    everyone = frozenset(range(n))
    # Bron-Kerbosch with pivoting on the complement graph: its maximal
    # cliques are the maximal independent sets here.
    comp = [everyone - set(a) - {i} for i, a in enumerate(graph.adjacency)]
    found: list[frozenset] = []

    def expand(r, p, x):
        if not p and not x:
            found.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda u: len(p & comp[u]))
        for v in list(p - comp[pivot]):
            expand(r | {v}, p & comp[v], x & comp[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(range(n)), set())
    mat = np.zeros((n, max(len(found), 1)))
    for k, s in enumerate(found):
        mat[list(s), k] = 1.0
    return mat


def mwis_batch(graph: Graph, weights: np.ndarray, sets: np.ndarray | None = None) -> np.ndarray:
    """MWIS weight for every row of ``weights`` (non-negative weights)."""
    weights = np.atleast_2d(weights)
    if graph.n == 0:
        return np.zeros(len(weights))
    if graph.n <= MAX_ENUM_NODES:
        if sets is None:
            sets = independent_sets(graph)
        return np.max(np.maximum(weights, 0.0) @ sets, axis=1)
    return np.array([mwis_exact(graph, w)["weight"] for w in weights])


def check_hipster_welfare_bound(graph: Graph, dist: ValueDistribution, prices,
                                thresholds: ThresholdVector, trials: int,
                                seed: int = 0) -> dict:
    """Count trials whose hipster welfare exceeds the realized MWIS weight.

    Hipster welfare sums values over an independent set of buyers, so the
    count should be zero; the MWIS sample mean is also returned as an
    estimate of the expected-revenue upper bound.
    """
    if graph.n > MAX_MWIS_NODES:
        raise ValueError(f"welfare check limited to {MAX_MWIS_NODES} nodes")
    sets = independent_sets(graph) if graph.n <= MAX_ENUM_NODES else None
    violations = 0
    mw_sum = mw_sq = rev_sum = 0.0
    for block, count in _blocks(trials):
        values = draw_values(dist, graph.n, seed, block)[:count]
        out = play(graph, prices, thresholds, values)
        mw = mwis_batch(graph, values, sets)
        violations += int(np.sum(out.welfare_hipster > mw + 1e-12))
        mw_sum += mw.sum()
        mw_sq += (mw * mw).sum()
        rev_sum += out.revenue_realized.sum()
    mean = mw_sum / trials
    var = max(mw_sq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    return {"violations": violations, "trials": trials, "mean_mwis": float(mean),
            "mwis_stderr": math.sqrt(var / trials), "mean_revenue": float(rev_sum / trials)}
