"""Selling the good by approaching players one at a time.

Under a fixed ordering a player only considers buying if nobody in its
closed neighborhood is approached later (a "live" player); otherwise it
waits for a neighbor. On cliques the seller can also re-optimize prices
stage by stage, or commit to a whole price vector up front.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .distributions import ValueDistribution, myerson_reserve
from .graphs import Graph
from .simulation import MAX_MWIS_NODES, mwis_exact

__all__ = [
    "Ordering",
    "SequentialPolicy",
    "live_set",
    "sequential_revenue",
    "best_ordering_revenue",
    "greedy_reverse_mis",
    "clique_subgame_perfect",
    "pn_formula",
    "committed_revenue",
    "clique_committed_optimum",
]


@dataclass(frozen=True)
class Ordering:
    """Order in which players are approached; ``order[0]`` goes first."""

    order: tuple

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"ordering is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n: int) -> "Ordering":
        return cls(tuple(range(n)))

    def position(self) -> list[int]:
        pos = [0] * len(self.order)
        for k, i in enumerate(self.order):
            pos[i] = k
        return pos

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True)
class SequentialPolicy:
    """Stage-by-stage quantities for a clique sale, first stage first."""

    prices: tuple
    thresholds: tuple
    sale_probabilities: tuple  # probability the good is bought at this stage
    revenue: float
    flags: dict = field(default_factory=dict)

    def recompute_revenue(self) -> float:
        return float(sum(p * q for p, q in zip(self.prices, self.sale_probabilities)))

    def to_json(self) -> dict:
        return {"prices": list(self.prices), "thresholds": list(self.thresholds),
                "sale_probabilities": list(self.sale_probabilities),
                "revenue": self.revenue, "flags": dict(self.flags)}


def _check_ordering(graph: Graph, ordering: Ordering) -> None:
    if len(ordering) != graph.n:
        raise ValueError(f"ordering has {len(ordering)} players, graph has {graph.n}")


def live_set(graph: Graph, ordering: Ordering) -> list[int]:
    """Players approached after all of their neighbors."""
    _check_ordering(graph, ordering)
    pos = ordering.position()
    live = [i for i in range(graph.n) if all(pos[j] < pos[i] for j in graph.neighbors(i))]
    assert graph.is_independent(live)
    return live


def sequential_revenue(graph: Graph, ordering: Ordering, dist: ValueDistribution,
                       p: float) -> dict:
    """Expected revenue ``|live| p (1 - F(p))``; also the optimum at the reserve."""
    k = len(live_set(graph, ordering))
    r = myerson_reserve(dist)
    return {"revenue": k * p * (1.0 - float(dist.cdf(p))), "live": k,
            "optimal_price": r, "optimal_revenue": k * r * (1.0 - float(dist.cdf(r)))}


def best_ordering_revenue(graph: Graph, dist: ValueDistribution) -> dict:
    """Approach a maximum independent set last and charge the reserve."""
    if graph.n > MAX_MWIS_NODES:
        raise ValueError(f"exact maximum independent set limited to {MAX_MWIS_NODES} nodes")
    mis = mwis_exact(graph, np.ones(graph.n))["set"]
    chosen = set(mis)
    order = Ordering(tuple([i for i in range(graph.n) if i not in chosen] + sorted(chosen)))
    r = myerson_reserve(dist)
    return {"revenue": len(mis) * r * (1.0 - float(dist.cdf(r))), "ordering": order,
            "mis_size": len(mis)}


def greedy_reverse_mis(graph: Graph, ordering: Ordering) -> list[int]:
    """Walk the ordering backwards, keeping nodes with no kept neighbor."""
    _check_ordering(graph, ordering)
    kept: set[int] = set()
    for i in reversed(ordering.order):
        if not any(j in kept for j in graph.neighbors(i)):
            kept.add(i)
    out = sorted(kept)
    assert graph.is_independent(out)
    assert all(i in kept or any(j in kept for j in graph.neighbors(i)) for i in range(graph.n))
    return out


def pn_formula(n: int) -> float:
    """``prod_{k=1..n} (1 - 2^-k)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.prod(1.0 - 2.0 ** -k for k in range(1, n + 1))


def clique_subgame_perfect(n: int) -> SequentialPolicy:
    """Backward induction for uniform(0,1) values on ``K_n`` without commitment.

    With continuation revenue ``R`` and continuation sale probability ``s``,
    a threshold ``T`` costs price ``T (1 - s)`` and earns
    ``T (1 - s)(1 - T) + T R``, maximized at ``T = (1 + R/(1 - s)) / 2``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rev, s = 0.0, 0.0
    stages = []
    for _ in range(n):
        t = min(1.0, 0.5 * (1.0 + rev / (1.0 - s))) if s < 1.0 else 1.0
        p = t * (1.0 - s)
        stages.append((p, t))
        rev = p * (1.0 - t) + t * rev
        s = (1.0 - t) + t * s
    stages.reverse()
    return _policy([p for p, _ in stages], [t for _, t in stages], rev)


def _policy(prices, thresholds, revenue, flags=None) -> SequentialPolicy:
    reach = 1.0
    sale = []
    for t in thresholds:
        sale.append(reach * (1.0 - t))
        reach *= t
    return SequentialPolicy(tuple(float(p) for p in prices), tuple(float(t) for t in thresholds),
                            tuple(sale), float(revenue), flags or {})


def _committed_from_thresholds(t: np.ndarray):
    """Prices and revenue induced by thresholds ``t`` (first stage first)."""
    n = len(t)
    s_next = np.zeros(n)
    s = 0.0
    for i in range(n - 1, -1, -1):
        s_next[i] = s
        s = (1.0 - t[i]) + t[i] * s
    prices = t * (1.0 - s_next)
    reach = np.concatenate(([1.0], np.cumprod(t)[:-1]))
    return prices, float(np.sum(prices * (1.0 - t) * reach))


def committed_revenue(prices) -> dict:
    """Thresholds and revenue when the seller commits to ``prices`` in advance.

    A threshold of 1 means the player never buys.
    """
    p = np.asarray(prices, dtype=float)
    n = len(p)
    t = np.empty(n)
    s = 0.0
    for i in range(n - 1, -1, -1):
        t[i] = min(1.0, p[i] / (1.0 - s)) if s < 1.0 else 1.0
        s = (1.0 - t[i]) + t[i] * s
    reach = np.concatenate(([1.0], np.cumprod(t)[:-1]))
    return {"thresholds": t, "revenue": float(np.sum(p * (1.0 - t) * reach))}


def _descend(start: np.ndarray, tol: float = 1e-13, max_sweeps: int = 500):
    """Coordinate descent over thresholds, then a shrinking pattern search."""
    t = start.copy()
    best = _committed_from_thresholds(t)[1]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        before = best
        for i in range(len(t)):
            def neg(x, i=i):
                trial = t.copy()
                trial[i] = x
                return -_committed_from_thresholds(trial)[1]
            res = minimize_scalar(neg, bounds=(0.0, 1.0), method="bounded",
                                  options={"xatol": 1e-12})
            if -res.fun > best:
                t[i], best = res.x, -res.fun
        if best - before < tol:
            break
    step = 1e-3
    while step > 1e-10:
        improved = False
        for i in range(len(t)):
            for sign in (1.0, -1.0):
                trial = t.copy()
                trial[i] = min(1.0, max(0.0, trial[i] + sign * step))
                val = _committed_from_thresholds(trial)[1]
                if val > best + 1e-15:
                    t, best, improved = trial, val, True
        if not improved:
            step /= 2.0
    return t, best, sweeps


def clique_committed_optimum(n: int, restarts: int = 4, seed: int = 0,
                             workers: int = 1) -> dict:
    """Best committed price vector for uniform(0,1) values on ``K_n``.

    Optimizes over the induced thresholds, which determine the prices
    one-to-one. The first start is the subgame-perfect policy, the rest are
    random; results depend only on ``seed``.
    """
    if not 1 <= n <= 20:
        raise ValueError("committed optimization supports 1 <= n <= 20")
    rng = np.random.default_rng(seed)
    starts = [np.array(clique_subgame_perfect(n).thresholds)]
    starts += [rng.uniform(0.3, 1.0, n) for _ in range(max(restarts - 1, 0))]
    if workers > 1 and len(starts) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_descend, starts))
    else:
        runs = [_descend(s) for s in starts]
    values = [r[1] for r in runs]
    k = int(np.argmax(values))
    t, revenue, _ = runs[k]
    prices, revenue = _committed_from_thresholds(t)
    # Agreement among restarts is the only convergence evidence available.
    stagnant = bool(np.sum(np.isclose(values, revenue, rtol=0, atol=1e-9)) < min(2, len(values)))
    policy = _policy(prices, t, revenue, {"warning_no_restart_agreement": stagnant})
    return {"prices": prices.tolist(), "revenue": revenue, "policy": policy,
            "restart_revenues": values, "warning": stagnant}
