"""Recommended uniform prices and the revenue bounds that certify them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    DistributionError,
    ValueDistribution,
    check_regularity,
    myerson_revenue_n,
    quantile,
)
from .equilibrium import UnsupportedDistributionError, symmetric_threshold
from .graphs import Graph
from .simulation import MAX_MWIS_NODES, draw_values, mwis_batch, independent_sets, _blocks

__all__ = [
    "PriceRecommendation",
    "price_clique",
    "price_d_regular",
    "price_uniform_general",
    "myerson_upper_bound",
    "mwis_upper_bound",
    "symmetric_revenue",
]

UNIFORM_GENERAL_FACTOR = math.e / 4


@dataclass(frozen=True)
class PriceRecommendation:
    price: float
    setting: str
    threshold_T: float
    guarantee_note: str
    size: int | None = None
    symmetric_revenue: float | None = None
    guarantee_factor: float | None = None

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _require_regular(dist: ValueDistribution) -> None:
    if dist.kind == "tabulated" and not check_regularity(dist)["regular"]:
        raise DistributionError(f"{dist} is not regular")


def price_clique(dist: ValueDistribution, n: int) -> PriceRecommendation:
    """``p = F^{-1}(1 - 1/n) (1 - 1/n)^{n-1}`` for the complete graph ``K_n``.

    At this price every equilibrium earns a constant fraction of the best
    revenue of any price vector. ``symmetric_revenue`` is the revenue of
    the symmetric equilibrium, ``n T (1 - F(T)) F(T)^{n-1}``.
    """
    if n < 2:
        raise ValueError("n=1 degenerates to F^{-1}(0); use myerson_reserve for one agent")
    _require_regular(dist)
    t = quantile(dist, 1.0 - 1.0 / n)
    f = float(dist.cdf(t))
    price = t * (1.0 - 1.0 / n) ** (n - 1)
    return PriceRecommendation(
        price=price, setting=f"clique({n})", threshold_T=t, size=n,
        symmetric_revenue=n * t * (1.0 - f) * f ** (n - 1),
        guarantee_note="worst equilibrium within a constant of the best equilibrium "
                       "at any price vector; symmetric revenue >= R^M_n / 4")


def price_d_regular(dist: ValueDistribution, d: int) -> PriceRecommendation:
    """``p = F^{-1}(1 - 1/d) (1 - 1/d)^d``; depends on ``d`` and ``F`` only."""
    if d <= 1:
        raise ValueError("degenerate: F^{-1}(0) at support edge for d <= 1")
    _require_regular(dist)
    t = quantile(dist, 1.0 - 1.0 / d)
    return PriceRecommendation(
        price=t * (1.0 - 1.0 / d) ** d, setting=f"d_regular({d})", threshold_T=t, size=d,
        guarantee_note="worst equilibrium within a constant of the best worst-case "
                       "revenue over uniform prices on any d-regular graph")


def price_uniform_general(dist: ValueDistribution | None = None) -> PriceRecommendation:
    """Price 1/2 for uniform(0,1) values on any graph, within ``e/4`` of optimal."""
    if dist is not None and not (dist.kind == "uniform" and dist.params == (0.0, 1.0)):
        raise UnsupportedDistributionError(
            "the graph-independent price 1/2 is only guaranteed for uniform(0,1) values")
    return PriceRecommendation(
        price=0.5, setting="uniform_general", threshold_T=0.5,
        guarantee_factor=UNIFORM_GENERAL_FACTOR,
        guarantee_note="worst-case revenue at 1/2 >= e/4 of the best worst-case "
                       "revenue over uniform prices; the bound p log(1/p) peaks at 1/e")


def symmetric_revenue(n: int, d: int, dist: ValueDistribution, p: float) -> float:
    """Revenue ``n p (1 - F(T))`` of the symmetric equilibrium on an ``n``-node ``d``-regular graph."""
    t = symmetric_threshold(d, dist, p)
    if not math.isfinite(t):
        return 0.0
    return n * p * (1.0 - float(dist.cdf(t)))


def myerson_upper_bound(dist: ValueDistribution, n: int) -> float:
    """Revenue cap ``R^M_n`` for any equilibrium at any prices on ``K_n``."""
    return myerson_revenue_n(dist, n)["revenue"]


def mwis_upper_bound(graph: Graph, dist: ValueDistribution, trials: int = 20_000,
                     seed: int = 0) -> dict:
    """Monte Carlo estimate of ``E[MWIS(v)]``, an upper bound on revenue."""
    if graph.n > MAX_MWIS_NODES:
        raise ValueError(f"exact MWIS sampling limited to {MAX_MWIS_NODES} nodes; "
                         "omit the sampled bound for larger graphs")
    if trials < 2:
        raise ValueError("need at least two trials for a standard error")
    sets = independent_sets(graph) if graph.n <= 20 else None
    total = total_sq = 0.0
    for block, count in _blocks(trials):
        mw = mwis_batch(graph, draw_values(dist, graph.n, seed, block)[:count], sets)
        total += mw.sum()
        total_sq += (mw * mw).sum()
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / (trials - 1)
    return {"estimate": float(mean), "stderr": math.sqrt(var / trials)}
