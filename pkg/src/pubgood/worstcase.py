"""Worst-case equilibrium revenue for uniform(0,1) values.

With ``T_i = p ** x_i`` the equilibria at a uniform price ``p`` become the
set ``X`` of vectors ``x in [0, 1]^n`` with closed-neighborhood sums at
least 1, where any node with a sum above 1 has ``x_i = 0``. The revenue is
``p * sum_i (1 - p ** x_i)``, a concave function of ``x``. ``X`` depends on
the graph only, so worst-case revenue at every price follows from its
vertices; ``m = min_{x in X} sum_i x_i`` brackets the worst case between
``p (1 - p) m`` and ``p log(1/p) m``.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .equilibrium import thresholds_from_x, verify_equilibrium
from .distributions import uniform
from .graphs import Graph, ReductionSpec, gadget_pairs, sat_reduction

__all__ = [
    "FeasibleAssignment",
    "WorstCaseResult",
    "SizeLimitError",
    "feasible_assignment",
    "min_sum_x",
    "enumerate_vertices",
    "worst_case_revenue_exact",
    "worst_case_revenue_curve",
    "worst_case_revenue_bounds",
    "hardness_experiment",
    "revenue_of_x",
]

FEAS_TOL = 1e-9
ZERO_TOL = 1e-12
PRICE_MIN, PRICE_MAX = 1e-6, 1.0 - 1e-6

MAX_NODES_SUM = 128
MAX_NODES_EXACT = 12

_UNIT = uniform(0.0, 1.0)


class SizeLimitError(ValueError):
    pass


@dataclass(frozen=True)
class FeasibleAssignment:
    x: np.ndarray
    support: frozenset
    closed_nbhd_sums: np.ndarray

    @property
    def total(self) -> float:
        return float(self.x.sum())

    def violations(self, tol: float = FEAS_TOL) -> list[str]:
        out = []
        x, s = self.x, self.closed_nbhd_sums
        if np.any(x < -tol) or np.any(x > 1 + tol):
            out.append("x outside [0, 1]")
        for i in np.flatnonzero(s < 1 - tol):
            out.append(f"node {i}: closed sum {s[i]:.12g} < 1")
        for i in np.flatnonzero((x > ZERO_TOL) & (np.abs(s - 1) > tol)):
            out.append(f"node {i}: x={x[i]:.3g} > 0 but closed sum {s[i]:.12g} != 1")
        return out

    def is_valid(self, tol: float = FEAS_TOL) -> bool:
        return not self.violations(tol)

    def boundary_nodes(self, tol: float = FEAS_TOL) -> list[int]:
        """Nodes within tolerance of both complementarity branches."""
        x, s = self.x, self.closed_nbhd_sums
        ambiguous = ((x > 0) & (x <= tol)) | ((s > 1) & (s - 1 <= tol) & (x > ZERO_TOL))
        return [int(i) for i in np.flatnonzero(ambiguous)]

    def to_json(self) -> dict:
        return {"x": self.x.tolist(), "support": sorted(self.support),
                "closed_nbhd_sums": self.closed_nbhd_sums.tolist()}


def feasible_assignment(graph: Graph, x) -> FeasibleAssignment:
    x = np.asarray(x, dtype=float).copy()
    x[np.abs(x) <= ZERO_TOL] = 0.0
    sums = graph.closed_matrix() @ x
    x.setflags(write=False)
    sums.setflags(write=False)
    return FeasibleAssignment(x, frozenset(int(i) for i in np.flatnonzero(x > 0)), sums)


@dataclass(frozen=True)
class WorstCaseResult:
    price: float
    min_sum_x: float
    lower_bound: float
    upper_bound: float
    exact_min_revenue: float | None = None
    argmin: FeasibleAssignment | None = None
    flags: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = {"price": self.price, "min_sum_x": self.min_sum_x,
               "lower_bound": self.lower_bound, "upper_bound": self.upper_bound,
               "exact_min_revenue": self.exact_min_revenue, "flags": self.flags}
        if self.argmin is not None:
            out["argmin"] = self.argmin.to_json()
        return out


def _check_price(p: float) -> float:
    if not PRICE_MIN <= p <= PRICE_MAX:
        raise ValueError(f"price must lie in [{PRICE_MIN}, {PRICE_MAX}], got {p}")
    return float(p)


def revenue_of_x(x, p: float) -> float:
    x = np.asarray(x, dtype=float)
    return float(p * np.sum(-np.expm1(x * math.log(p))))


# -- min sum x: branch and bound over complementarity choices ---------------

_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _solve_lp(a: np.ndarray, zero: np.ndarray, tight: np.ndarray):
    n = len(a)
    a_ub = [-a]
    b_ub = [-np.ones(n)]
    if tight.any():
        a_ub.append(a[tight])
        b_ub.append(np.ones(int(tight.sum())))
    bounds = [(0.0, 0.0) if z else (0.0, 1.0) for z in zero]
    res = linprog(np.ones(n), A_ub=np.vstack(a_ub), b_ub=np.concatenate(b_ub),
                  bounds=bounds, method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        return None
    return np.clip(res.x, 0.0, 1.0)


def _polish(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Re-solve the active constraint system to remove LP round-off."""
    sums = a @ x
    zero = x <= 1e-9
    one = x >= 1 - 1e-9
    tight = np.abs(sums - 1) <= 1e-7
    rows, rhs = [], []
    n = len(x)
    eye = np.eye(n)
    for i in np.flatnonzero(zero):
        rows.append(eye[i]); rhs.append(0.0)
    for i in np.flatnonzero(one):
        rows.append(eye[i]); rhs.append(1.0)
    for i in np.flatnonzero(tight):
        rows.append(a[i]); rhs.append(1.0)
    if not rows:
        return x
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    sol[np.abs(sol) <= 1e-10] = 0.0
    sol[np.abs(sol - 1) <= 1e-10] = 1.0
    if np.max(np.abs(np.array(rows) @ sol - rhs)) > 1e-9:
        return x
    return sol


def min_sum_x(graph: Graph, max_nodes: int = MAX_NODES_SUM) -> dict:
    """Exact ``min sum_i x_i`` over the feasible set ``X``.

    Best-first branch and bound: each subproblem fixes some nodes to
    ``x_i = 0`` and others to a tight closed sum, relaxes complementarity
    for the rest and solves the resulting LP. A relaxed optimum that
    violates complementarity at node ``i`` is split on those two choices.

    Returns ``{"value", "argmin", "nodes_explored"}``.
    """
    n = graph.n
    if n > max_nodes:
        raise SizeLimitError(f"min_sum_x limited to {max_nodes} nodes (graph has {n}); "
                             "use worst_case_revenue_bounds with a known m instead")
    if n == 0:
        return {"value": 0.0, "argmin": feasible_assignment(graph, []), "nodes_explored": 0}
    a = graph.closed_matrix()
    best_val, best_x = math.inf, None
    counter = itertools.count()
    root_zero = np.zeros(n, dtype=bool)
    root_tight = np.zeros(n, dtype=bool)
    x0 = _solve_lp(a, root_zero, root_tight)
    heap = [(float(x0.sum()), next(counter), root_zero, root_tight, x0)]
    explored = 0
    while heap:
        bound, _, zero, tight, x = heapq.heappop(heap)
        if bound >= best_val - 1e-9:
            break
        explored += 1
        sums = a @ x
        slack = np.where((x > ZERO_TOL) & (sums > 1 + 1e-9) & ~tight & ~zero,
                         x * (sums - 1), 0.0)
        if not slack.any():
            xp = _polish(a, x)
            if feasible_assignment(graph, xp).is_valid():
                x = xp
            fa = feasible_assignment(graph, x)
            if fa.total < best_val:
                best_val, best_x = fa.total, fa
            continue
        i = int(np.argmax(slack))
        for child_zero, child_tight in ((True, False), (False, True)):
            z, t = zero.copy(), tight.copy()
            z[i] |= child_zero
            t[i] |= child_tight
            xc = _solve_lp(a, z, t)
            if xc is not None and xc.sum() < best_val - 1e-9:
                heapq.heappush(heap, (float(xc.sum()), next(counter), z, t, xc))
    if best_x is None:
        raise AssertionError("no feasible assignment found; X is never empty")
    return {"value": best_val, "argmin": best_x, "nodes_explored": explored}


# -- vertex enumeration -----------------------------------------------------

def enumerate_vertices(graph: Graph, max_nodes: int = MAX_NODES_EXACT) -> np.ndarray:
    """All vertices of the polytopes whose union is ``X``.

    Each vertex labels every node as zero, one or fractional. Ones form an
    independent set with no fractional neighbor; the fractional values
    solve the tight closed-neighborhood equations of the fractional nodes,
    completed, if those are rank deficient, by tight equations of zero
    nodes. Returns an array with one vertex per row.
    """
    n = graph.n
    if n > max_nodes:
        raise SizeLimitError(f"vertex enumeration limited to {max_nodes} nodes (graph has {n})")
    if n == 0:
        return np.zeros((1, 0))
    a = graph.closed_matrix()
    adj = [set(nb) for nb in graph.adjacency]
    # Node i's domination can be checked once its whole closed nbhd is labeled.
    last = [max((i,) + graph.adjacency[i]) for i in range(n)]
    check_at: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        check_at[last[i]].append(i)

    ZERO, ONE, FRAC = 0, 1, 2
    label = [ZERO] * n
    found: dict[tuple, np.ndarray] = {}

    def may_cover(i: int) -> bool:
        return any(label[j] != ZERO for j in (i, *graph.adjacency[i]))

    def leaf():
        ones = [i for i in range(n) if label[i] == ONE]
        frac = [i for i in range(n) if label[i] == FRAC]
        x = np.zeros(n)
        x[ones] = 1.0
        if frac:
            sub = a[np.ix_(frac, frac)]
            zeros = [i for i in range(n) if label[i] == ZERO]
            extra = [z for z in zeros
                     if not (adj[z] & set(ones)) and adj[z] & set(frac)]
            rank = np.linalg.matrix_rank(sub)
            deficiency = len(frac) - rank
            if deficiency == 0:
                solutions = [np.linalg.solve(sub, np.ones(len(frac)))]
            else:
                solutions = []
                for combo in itertools.combinations(extra, deficiency):
                    rows = np.vstack([sub, a[np.ix_(list(combo), frac)]])
                    if np.linalg.matrix_rank(rows) < len(frac):
                        continue
                    sol, *_ = np.linalg.lstsq(rows, np.ones(len(rows)), rcond=None)
                    if np.max(np.abs(rows @ sol - 1)) <= 1e-10:
                        solutions.append(sol)
            for sol in solutions:
                if np.any(sol <= ZERO_TOL) or np.any(sol >= 1 - ZERO_TOL):
                    continue
                xv = x.copy()
                xv[frac] = sol
                _accept(xv)
        else:
            _accept(x)

    def _accept(xv):
        sums = a @ xv
        if np.any(sums < 1 - FEAS_TOL):
            return
        if np.any((xv > ZERO_TOL) & (np.abs(sums - 1) > FEAS_TOL)):
            return
        key = tuple(np.round(xv, 9))
        found.setdefault(key, xv)

    def dfs(i: int):
        if i == n:
            leaf()
            return
        for lab in (ZERO, ONE, FRAC):
            if lab == ONE and any(label[j] != ZERO for j in graph.adjacency[i] if j < i):
                continue
            if lab == FRAC and any(label[j] == ONE for j in graph.adjacency[i] if j < i):
                continue
            label[i] = lab
            if all(may_cover(k) for k in check_at[i]):
                dfs(i + 1)
        label[i] = ZERO

    dfs(0)
    if not found:
        raise AssertionError("vertex enumeration found nothing; X is never empty")
    return np.array(sorted(found.values(), key=lambda v: tuple(v)))


def _revenue_matrix(vertices: np.ndarray, prices: np.ndarray) -> np.ndarray:
    """Revenue of every vertex (columns) at every price (rows)."""
    logs = np.log(prices)[:, None, None]
    return prices[:, None] * np.sum(-np.expm1(vertices[None, :, :] * logs), axis=2)


def _verify_argmin(graph: Graph, p: float, x: np.ndarray) -> None:
    t = thresholds_from_x(x, p)
    check = verify_equilibrium(graph, _UNIT, p, t, tol=1e-8)
    if not check["valid"]:
        raise AssertionError(f"argmin at p={p} is not an equilibrium: {check}")


def worst_case_revenue_curve(graph: Graph, prices, vertices: np.ndarray | None = None,
                             max_nodes: int = MAX_NODES_EXACT) -> list[WorstCaseResult]:
    """Exact worst-case revenue at several prices, sharing one vertex enumeration."""
    prices = np.atleast_1d(np.asarray(prices, dtype=float))
    for p in prices:
        _check_price(p)
    if vertices is None:
        vertices = enumerate_vertices(graph, max_nodes=max_nodes)
    m = float(vertices.sum(axis=1).min())
    revenues = _revenue_matrix(vertices, prices)
    out = []
    for p, row in zip(prices, revenues):
        k = int(np.argmin(row))
        fa = feasible_assignment(graph, vertices[k])
        _verify_argmin(graph, float(p), fa.x)
        out.append(WorstCaseResult(
            price=float(p), min_sum_x=m,
            lower_bound=float(p * (1 - p) * m), upper_bound=float(p * math.log(1 / p) * m),
            exact_min_revenue=float(row[k]), argmin=fa, flags=fa.boundary_nodes()))
    return out


def worst_case_revenue_exact(graph: Graph, p: float,
                             max_nodes: int = MAX_NODES_EXACT) -> WorstCaseResult:
    """Minimum equilibrium revenue at uniform price ``p`` (uniform(0,1) values).

    The concave objective attains its minimum at a vertex, so every vertex
    of ``X`` is evaluated. The argmin is converted back to thresholds and
    verified as an equilibrium.
    """
    return worst_case_revenue_curve(graph, [_check_price(p)], max_nodes=max_nodes)[0]


def worst_case_revenue_bounds(graph: Graph, p: float, m: float | None = None,
                              max_nodes: int = MAX_NODES_SUM) -> WorstCaseResult:
    """``p (1-p) m <= min revenue <= p log(1/p) m`` with ``m = min sum x``."""
    p = _check_price(p)
    argmin = None
    if m is None:
        res = min_sum_x(graph, max_nodes=max_nodes)
        m, argmin = res["value"], res["argmin"]
    return WorstCaseResult(price=p, min_sum_x=float(m),
                           lower_bound=p * (1 - p) * m, upper_bound=p * math.log(1 / p) * m,
                           argmin=argmin)


def hardness_experiment(spec: ReductionSpec, max_nodes: int = MAX_NODES_SUM) -> dict:
    """Solve ``min sum x`` on the 3-SAT reduction graph and classify it.

    A satisfiable formula gives exactly ``3m`` (``m`` variables); an
    unsatisfiable one gives at least ``3m + k**L``.
    """
    graph = sat_reduction(spec)
    res = min_sum_x(graph, max_nodes=max_nodes)
    m_vars = spec.formula.num_vars
    low, high = 3 * m_vars, 3 * m_vars + spec.copies
    value = res["value"]
    x = res["argmin"].x
    allowed = {(0, 1), (1, 0), (0, 0)}
    pairs = []
    integral = True
    for u, v in gadget_pairs(spec.formula):
        xu, xv = float(x[u]), float(x[v])
        ru, rv = round(xu), round(xv)
        ok = abs(xu - ru) <= FEAS_TOL and abs(xv - rv) <= FEAS_TOL and (ru, rv) in allowed
        integral &= ok
        pairs.append([xu, xv])
    if abs(value - low) <= 1e-7:
        verdict = "low"
    elif value >= high - 1e-7:
        verdict = "high"
    else:
        verdict = "inconsistent"
    return {
        "num_nodes": graph.n,
        "min_sum_x": value,
        "verdict": verdict,
        "threshold": {"low": low, "high": high},
        "gadget_integral": bool(integral),
        "gadget_pairs": pairs,
        "satisfiable": spec.formula.is_satisfiable() if m_vars <= 20 else None,
        "nodes_explored": res["nodes_explored"],
        "argmin": res["argmin"],
    }
