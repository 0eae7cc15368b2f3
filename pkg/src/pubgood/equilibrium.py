"""Threshold equilibria of the posted-price purchasing game.

Agent ``i`` facing price ``p_i`` buys iff its value is at least
``T_i = p_i / prod_{j in N(i)} F(T_j)``; the equilibria are exactly the
fixed points of this best-response map. Thresholds at or above the top
of the support are represented by the :data:`NEVER_BUY` sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .distributions import ValueDistribution
from .graphs import Graph

__all__ = [
    "NEVER_BUY",
    "ConvergenceError",
    "UnsupportedDistributionError",
    "PriceVector",
    "ThresholdVector",
    "RevenueReport",
    "best_response",
    "solve_fixed_point",
    "symmetric_threshold",
    "verify_equilibrium",
    "expected_revenue",
    "x_from_thresholds",
    "thresholds_from_x",
]


class _NeverBuy:
    """Threshold above every possible value: the agent never purchases."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NEVER_BUY"

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __reduce__(self):
        return (_NeverBuy, ())


NEVER_BUY = _NeverBuy()
NEVER_TOKEN = "never"


class ConvergenceError(RuntimeError):
    """The damped best-response iteration did not reach the tolerance."""

    def __init__(self, message, best: ThresholdVector | None = None,
                 pair: tuple[np.ndarray, np.ndarray] | None = None):
        super().__init__(message)
        self.best = best
        self.pair = pair


class UnsupportedDistributionError(ValueError):
    pass


@dataclass(frozen=True)
class PriceVector:
    values: np.ndarray

    @classmethod
    def of(cls, prices, n: int) -> PriceVector:
        if isinstance(prices, PriceVector):
            prices = prices.values
        arr = np.asarray(prices, dtype=float)
        if arr.ndim == 0:
            arr = np.full(n, float(arr))
        if arr.shape != (n,):
            raise ValueError(f"expected {n} prices, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("prices must be finite and non-negative")
        arr = arr.copy()
        arr.setflags(write=False)
        return cls(arr)

    @property
    def uniform(self) -> bool:
        return len(self.values) == 0 or bool(np.all(self.values == self.values[0]))

    @property
    def scalar(self) -> float | None:
        return float(self.values[0]) if self.uniform and len(self.values) else None

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class ThresholdVector:
    """Per-node thresholds; ``never[i]`` marks ``T_i = NEVER_BUY``.

    ``values[i]`` is meaningless where ``never[i]`` is set (it holds NaN).
    """

    values: np.ndarray
    never: np.ndarray
    residual: float = math.nan
    status: str = "candidate"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        nv = np.array(self.never, dtype=bool)
        v[nv] = np.nan
        v.setflags(write=False)
        nv.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "never", nv)

    @classmethod
    def from_sequence(cls, items: Iterable, **kw) -> ThresholdVector:
        """Accept floats, :data:`NEVER_BUY`, ``"never"`` or ``inf``."""
        vals, never = [], []
        for t in items:
            is_never = t is NEVER_BUY or t == NEVER_TOKEN or (
                isinstance(t, (int, float)) and math.isinf(t) and t > 0)
            never.append(is_never)
            vals.append(math.nan if is_never else float(t))
        return cls(np.array(vals, dtype=float), np.array(never, dtype=bool), **kw)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return NEVER_BUY if self.never[i] else float(self.values[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def stay_probabilities(self, dist: ValueDistribution) -> np.ndarray:
        """``F(T_i)`` with ``F(NEVER_BUY) = 1``."""
        out = np.ones(len(self))
        finite = ~self.never
        out[finite] = dist.cdf(self.values[finite])
        return out

    def to_json(self) -> list:
        return [NEVER_TOKEN if nv else float(v) for v, nv in zip(self.values, self.never)]

    def replace(self, **kw) -> ThresholdVector:
        args = dict(values=self.values, never=self.never, residual=self.residual,
                    status=self.status)
        args.update(kw)
        return ThresholdVector(**args)


@dataclass(frozen=True)
class RevenueReport:
    prices: PriceVector
    thresholds: ThresholdVector
    expected_revenue: float
    per_node_sale_prob: np.ndarray
    annotations: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "prices": self.prices.values.tolist(),
            "thresholds": self.thresholds.to_json(),
            "status": self.thresholds.status,
            "residual": self.thresholds.residual,
            "expected_revenue": self.expected_revenue,
            "per_node_sale_prob": self.per_node_sale_prob.tolist(),
            "annotations": self.annotations,
        }


def _neighbor_index(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Flattened neighbor lists, each ending in index ``n`` (a constant 1).

    The trailing entry keeps every segment non-empty for ``reduceat``.
    """
    flat = np.fromiter(
        (j for nbrs in graph.adjacency for j in (*nbrs, graph.n)),
        dtype=np.intp, count=2 * graph.num_edges + graph.n)
    starts = np.zeros(graph.n, dtype=np.intp)
    if graph.n:
        starts[1:] = np.cumsum([len(a) + 1 for a in graph.adjacency])[:-1]
    return flat, starts


def _neighbor_products(stay: np.ndarray, nbr_idx) -> np.ndarray:
    flat, starts = nbr_idx
    if len(starts) == 0:
        return np.ones(0)
    ext = np.append(stay, 1.0)
    return np.multiply.reduceat(ext[flat], starts)


def best_response(graph: Graph, dist: ValueDistribution, prices,
                  thresholds: ThresholdVector) -> ThresholdVector:
    """``Psi_i(T) = p_i / prod_{j in N(i)} F(T_j)``.

    A zero neighbor product, or a response above the support, gives
    :data:`NEVER_BUY`.
    """
    p = PriceVector.of(prices, graph.n).values
    prod = _neighbor_products(thresholds.stay_probabilities(dist), _neighbor_index(graph))
    never = prod <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(never, np.nan, p / np.where(never, 1.0, prod))
    never |= psi > dist.support_hi
    return ThresholdVector(psi, never)


def _peel_zero_cdf(graph: Graph, dist: ValueDistribution, p: np.ndarray):
    """Agents with ``F(p_i) = 0`` buy for sure; their neighbors never buy.

    Returns (buyers, never) masks. Processing in index order keeps the
    set of sure buyers independent.
    """
    zero = np.asarray(dist.cdf(p)) <= 0
    buyer = np.zeros(graph.n, dtype=bool)
    never = np.zeros(graph.n, dtype=bool)
    for i in np.flatnonzero(zero):
        if never[i]:
            continue
        buyer[i] = True
        never[list(graph.adjacency[i])] = True
    return buyer, never


def solve_fixed_point(graph: Graph, dist: ValueDistribution, prices,
                      damping: float = 0.5, max_iter: int = 100_000,
                      tol: float = 1e-10, start=None,
                      verify_tol: float = 1e-9) -> ThresholdVector:
    """Find an equilibrium by damped best-response iteration.

    Iterates ``T <- (1 - g) T + g Psi(T)`` from the lower corner ``T = p``
    of the invariant box (or from ``start``). The step ``g`` starts at
    ``damping`` and is halved whenever the residual stalls or a period-2
    oscillation appears. Raises :class:`ConvergenceError` carrying the best
    iterate if ``max_iter`` is exhausted.
    """
    n = graph.n
    p = PriceVector.of(prices, n).values
    buyer, fixed_never = _peel_zero_cdf(graph, dist, p)
    active = ~(buyer | fixed_never)
    nbr_idx = _neighbor_index(graph)
    cap = dist.support_hi

    stay = np.ones(n)
    stay[buyer] = 0.0  # F(p_i) = 0 for sure buyers

    if start is None:
        t = p.copy()
    else:
        s = start if isinstance(start, ThresholdVector) else ThresholdVector.from_sequence(start)
        t = np.where(s.never, cap if math.isfinite(cap) else p, s.values)
        t = np.clip(np.nan_to_num(t, nan=cap), p, None)
    t[buyer] = p[buyer]

    def psi_raw(tv):
        st = stay.copy()
        st[active] = dist.cdf(tv[active])
        prod = _neighbor_products(st, nbr_idx)
        with np.errstate(divide="ignore"):
            return np.where(prod > 0, p / np.where(prod > 0, prod, 1.0), np.inf)

    gamma = damping
    best_res, best_t = math.inf, t.copy()
    last_improve = 0
    prev2 = None
    prev1 = t.copy()
    res = math.inf
    for it in range(max_iter):
        raw = psi_raw(t)
        target = np.minimum(raw, cap)
        diff = np.where(active, target - t, 0.0)
        res = float(np.max(np.abs(diff))) if n else 0.0
        if res < best_res:
            if res < 0.999 * best_res:
                last_improve = it
            best_res, best_t = res, t.copy()
        if res <= tol:
            break
        stalled = it - last_improve > 200
        oscillating = (prev2 is not None and it > 20
                       and float(np.max(np.abs(t - prev2))) <= tol < res)
        if stalled or oscillating:
            gamma *= 0.5
            last_improve = it
            if gamma < 1e-7:
                break
        prev2, prev1 = prev1, t.copy()
        t = t + gamma * diff
        # Iterates stay inside the box [p, p / prod F(p)].
        assert np.all(t[active] >= p[active] * (1 - 1e-12) - 1e-300)
    if res > tol:
        t = best_t
        res = best_res
        candidate = _finalize(t, psi_raw(t), active, buyer, fixed_never, cap, res, "candidate")
        raise ConvergenceError(
            f"best-response iteration did not converge: best residual {best_res:.3e}",
            best=candidate, pair=(prev1, t))
    result = _finalize(t, raw, active, buyer, fixed_never, cap, res, "candidate")
    check = verify_equilibrium(graph, dist, p, result, tol=max(verify_tol, 10 * tol))
    if check["valid"]:
        result = result.replace(status="verified", residual=check["residual"])
    return result


def _finalize(t, raw, active, buyer, fixed_never, cap, res, status):
    never = fixed_never.copy()
    never |= active & (raw >= cap)
    never |= active & ~np.isfinite(raw)
    vals = np.where(never, np.nan, t)
    return ThresholdVector(vals, never, residual=res, status=status)


def symmetric_threshold(d: int, dist: ValueDistribution, p: float) -> float:
    """Solve ``T F(T)^d = p`` by bisection on ``[p, p / F(p)^d]`` in log space.

    Comparisons are made on logarithms so that huge ``d`` cannot overflow.
    Returns ``inf`` when the solution lies beyond a bounded support
    (nobody buys) and ``p`` itself when ``F(p) = 0``.
    """
    if d < 0:
        raise ValueError("degree must be non-negative")
    if p < 0:
        raise ValueError("price must be non-negative")
    if p == 0 or dist.cdf(p) <= 0:
        return float(p)
    log_p = math.log(p)

    def log_g(t):
        f = float(dist.cdf(t))
        if f <= 0:
            return -math.inf
        return math.log(t) + d * math.log(f)

    # Bisect on log T: the initial bracket can span hundreds of e-folds.
    lo = log_p
    hi = log_p - d * math.log(float(dist.cdf(p)))
    if not math.isfinite(hi) or hi > 700:
        hi = log_p + math.log(2.0)
        while log_g(math.exp(hi)) < log_p:
            hi += math.log(2.0)
    if math.isfinite(dist.support_hi) and hi > math.log(dist.support_hi) \
            and log_g(dist.support_hi) < log_p:
        return math.inf
    for _ in range(400):
        if hi - lo <= 1e-13:
            break
        mid = 0.5 * (lo + hi)
        if log_g(math.exp(mid)) >= log_p:
            hi = mid
        else:
            lo = mid
    return math.exp(0.5 * (lo + hi))


def verify_equilibrium(graph: Graph, dist: ValueDistribution, prices,
                       thresholds: ThresholdVector, tol: float = 1e-9) -> dict:
    """Check the equilibrium condition node by node.

    A finite threshold must satisfy ``|T_i prod F(T_j) - p_i| <= tol``. A
    NEVER_BUY node (or a finite threshold at the top of a bounded support)
    must satisfy ``support_hi * prod F(T_j) <= p_i + tol``.
    """
    p = PriceVector.of(prices, graph.n).values
    if len(thresholds) != graph.n:
        raise ValueError("threshold vector length does not match graph")
    prod = _neighbor_products(thresholds.stay_probabilities(dist), _neighbor_index(graph))
    hi = dist.support_hi
    finite = ~thresholds.never
    t = np.where(finite, thresholds.values, 0.0)
    err_a = np.where(finite, np.abs(t * prod - p), np.inf)
    if math.isfinite(hi):
        err_b = np.maximum(hi * prod - p, 0.0)
    else:
        err_b = np.where(prod <= 0, 0.0, np.inf)
    cap_ok = thresholds.never | (finite & (t >= hi))
    err = np.where(cap_ok, np.minimum(err_a, err_b), err_a)
    witnesses = [int(i) for i in np.flatnonzero(err > tol)]
    return {"valid": not witnesses, "residual": float(err.max(initial=0.0)),
            "witnesses": witnesses}


def expected_revenue(prices, thresholds: ThresholdVector,
                     dist: ValueDistribution) -> RevenueReport:
    """``R(p, T) = sum_i p_i (1 - F(T_i))``; NEVER_BUY nodes contribute 0."""
    pv = PriceVector.of(prices, len(thresholds))
    sale = 1.0 - thresholds.stay_probabilities(dist)
    return RevenueReport(pv, thresholds, float(np.dot(pv.values, sale)), sale)


def _require_unit_uniform(dist: ValueDistribution | None) -> None:
    if dist is not None and not (dist.kind == "uniform" and dist.params == (0.0, 1.0)):
        raise UnsupportedDistributionError(
            f"the x-transformation needs uniform(0,1) values, got {dist}")


def _check_price(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"price must lie in (0, 1), got {p}")
    return math.log(1.0 / p)


def x_from_thresholds(thresholds: ThresholdVector, p: float,
                      dist: ValueDistribution | None = None) -> np.ndarray:
    """``x_i = log(1/T_i) / log(1/p)``; NEVER_BUY maps to 0."""
    _require_unit_uniform(dist)
    scale = _check_price(p)
    t = np.where(thresholds.never, 1.0, thresholds.values)
    if np.any(t < p * (1 - 1e-12)) or np.any(t > 1.0 + 1e-12):
        raise ValueError("thresholds must lie in [p, 1] or be NEVER_BUY")
    return np.clip(np.log(1.0 / np.minimum(t, 1.0)) / scale, 0.0, 1.0)


def thresholds_from_x(x: Sequence[float], p: float,
                      dist: ValueDistribution | None = None) -> ThresholdVector:
    """``T_i = p ** x_i``; ``x_i = 0`` gives NEVER_BUY."""
    _require_unit_uniform(dist)
    _check_price(p)
    x = np.asarray(x, dtype=float)
    never = x <= 0.0
    return ThresholdVector(np.power(p, x), never)
