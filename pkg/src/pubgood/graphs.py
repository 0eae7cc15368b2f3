"""Graphs, instance generators, the 3-SAT gadget reduction and file I/O."""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

__all__ = [
    "Graph",
    "GraphFormatError",
    "CnfFormula",
    "ReductionSpec",
    "from_edges",
    "generate",
    "clique",
    "cycle",
    "path",
    "empty",
    "star",
    "d_regular_bipartite",
    "pentagon_gadget",
    "random_gnp",
    "random_d_regular",
    "sat_reduction",
    "load_graph",
    "save_graph",
    "load_cnf",
    "parse_cnf",
    "format_cnf",
    "gadget_pairs",
    "graph_to_dict",
    "graph_from_dict",
]

# Largest graph sat_reduction will build unless told otherwise.
DEFAULT_NODE_BUDGET = 1_000_000


class GraphFormatError(ValueError):
    """Malformed graph or CNF input."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    ``adjacency[i]`` is the sorted tuple of neighbors of ``i``; ``labels``
    optionally tags nodes with their role in a construction.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    labels: Mapping[int, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.adjacency) != self.n:
            raise GraphFormatError("adjacency length does not match n")
        for i, nbrs in enumerate(self.adjacency):
            if i in nbrs:
                raise GraphFormatError(f"self-loop at node {i}")
            if list(nbrs) != sorted(set(nbrs)):
                raise GraphFormatError(f"neighbors of {i} not sorted and distinct")
            for j in nbrs:
                if not 0 <= j < self.n or i not in self.adjacency[j]:
                    raise GraphFormatError(f"edge ({i}, {j}) is not symmetric")

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def closed_neighborhood(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(self.adjacency[i] + (i,)))

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=int)

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=float)
        for i, j in self.edges():
            a[i, j] = a[j, i] = 1.0
        return a

    def closed_matrix(self) -> np.ndarray:
        """``I + adjacency``: row ``i`` selects the closed neighborhood of ``i``."""
        return self.adjacency_matrix() + np.eye(self.n)

    def is_independent(self, nodes: Iterable[int]) -> bool:
        s = set(nodes)
        return all(s.isdisjoint(self.adjacency[i]) for i in s)

    def is_regular(self) -> bool:
        d = self.degrees
        return self.n == 0 or bool(np.all(d == d[0]))

    def with_isolated(self, count: int = 1) -> Graph:
        return Graph(self.n + count, self.adjacency + ((),) * count, dict(self.labels))

    def label_nodes(self, label: str) -> list[int]:
        return sorted(i for i, lab in self.labels.items() if lab == label)


def from_edges(n: int, edges: Iterable[Sequence[int]],
               labels: Mapping[int, str] | None = None) -> Graph:
    """Build a graph; duplicate edges are collapsed with a warning."""
    nbrs: list[set[int]] = [set() for _ in range(n)]
    duplicates = 0
    for e in edges:
        i, j = int(e[0]), int(e[1])
        if i == j:
            raise GraphFormatError(f"self-loop at node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise GraphFormatError(f"edge ({i}, {j}) out of range for n={n}")
        if j in nbrs[i]:
            duplicates += 1
        nbrs[i].add(j)
        nbrs[j].add(i)
    if duplicates:
        warnings.warn(f"collapsed {duplicates} duplicate edge(s)", stacklevel=2)
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs), dict(labels or {}))


# -- generators -------------------------------------------------------------

def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def clique(n: int) -> Graph:
    _check(n >= 1, "clique needs n >= 1")
    return from_edges(n, itertools.combinations(range(n), 2))


def cycle(n: int) -> Graph:
    _check(n >= 3, "cycle needs n >= 3")
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)],
                      {i: "cycle-node" for i in range(n)})


def path(n: int) -> Graph:
    _check(n >= 1, "path needs n >= 1")
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def empty(n: int) -> Graph:
    _check(n >= 0, "empty needs n >= 0")
    return Graph(n, ((),) * n)


def star(leaves: int) -> Graph:
    """Center 0 joined to ``leaves`` leaf nodes."""
    _check(leaves >= 1, "star needs at least one leaf")
    labels = {0: "center", **{i: "leaf" for i in range(1, leaves + 1)}}
    return from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)], labels)


def d_regular_bipartite(n: int, d: int) -> Graph:
    """Circulant ``d``-regular bipartite graph with ``n/2`` nodes per side.

    Left node ``i`` is joined to right nodes ``(i + k) mod n/2`` for
    ``k < d``. Left nodes are ``0..n/2-1``.
    """
    _check(n >= 2 and n % 2 == 0, "bipartite graph needs an even n")
    half = n // 2
    _check(1 <= d <= half, f"need 1 <= d <= n/2, got d={d}, n={n}")
    edges = [(i, half + (i + k) % half) for i in range(half) for k in range(d)]
    labels = {i: ("left" if i < half else "right") for i in range(n)}
    return from_edges(n, edges, labels)


def pentagon_gadget(big_n: int) -> Graph:
    """Five-cycle plus ``big_n`` extra nodes per triple of cycle nodes.

    Nodes ``0..4`` form the cycle; the extra nodes follow, grouped by
    triple in ``itertools.combinations(range(5), 3)`` order, each joined to
    the three nodes of its triple.
    """
    _check(big_n >= 0, "pentagon gadget needs N >= 0")
    edges = [(i, (i + 1) % 5) for i in range(5)]
    labels = {i: "cycle-node" for i in range(5)}
    node = 5
    for triple in itertools.combinations(range(5), 3):
        for _ in range(big_n):
            edges.extend((node, t) for t in triple)
            labels[node] = "triple-" + "".join(map(str, triple))
            node += 1
    return from_edges(node, edges, labels)


def random_gnp(n: int, prob: float, seed: int | None = None) -> Graph:
    _check(n >= 0 and 0.0 <= prob <= 1.0, "random_gnp needs n >= 0 and prob in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < prob
    return from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def random_d_regular(n: int, d: int, seed: int | None = None) -> Graph:
    """Random ``d``-regular graph (networkx incremental pairing with restarts)."""
    _check(n >= 1 and 0 <= d < n and (n * d) % 2 == 0,
           f"no simple {d}-regular graph on {n} nodes")
    g = nx.random_regular_graph(d, n, seed=seed)
    return from_edges(n, g.edges())


_GENERATORS = {
    "clique": (clique, ("n",)),
    "cycle": (cycle, ("n",)),
    "path": (path, ("n",)),
    "empty": (empty, ("n",)),
    "star": (star, ("leaves",)),
    "d_regular_bipartite": (d_regular_bipartite, ("n", "d")),
    "pentagon_gadget": (pentagon_gadget, ("N",)),
    "random_gnp": (random_gnp, ("n", "prob", "seed")),
    "random_d_regular": (random_d_regular, ("n", "d", "seed")),
}


def generate(kind: str, **params) -> Graph:
    """Dispatch to a named generator, e.g. ``generate("cycle", n=5)``."""
    try:
        fn, names = _GENERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown graph kind {kind!r}; choose from {sorted(_GENERATORS)}") from None
    unknown = set(params) - set(names)
    if unknown:
        raise ValueError(f"{kind} does not take {sorted(unknown)}")
    return fn(*(params[k] for k in names if k in params))


# -- 3-SAT reduction --------------------------------------------------------

@dataclass(frozen=True)
class CnfFormula:
    """3-CNF formula; literals are signed 1-based variable indices."""

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(l) for l in c) for c in self.clauses))
        for c in self.clauses:
            if len(c) != 3:
                raise GraphFormatError(f"clause {c} does not have exactly 3 literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise GraphFormatError(f"literal {lit} outside variables 1..{self.num_vars}")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any(assignment[abs(l) - 1] == (l > 0) for l in c) for c in self.clauses)

    def is_satisfiable(self) -> bool:
        """Brute force; meant for the tiny formulas used in experiments."""
        return any(self.satisfied_by(a)
                   for a in itertools.product((False, True), repeat=self.num_vars))


@dataclass(frozen=True)
class ReductionSpec:
    formula: CnfFormula
    L: int = 1
    node_budget: int = DEFAULT_NODE_BUDGET

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")

    @property
    def copies(self) -> int:
        """Clause-node multiplicity ``k**L``."""
        return self.formula.num_clauses ** self.L

    @property
    def num_nodes(self) -> int:
        return 6 * self.formula.num_vars + self.formula.num_clauses * self.copies


def sat_reduction(spec: ReductionSpec) -> Graph:
    """Graph whose worst-case-revenue program encodes the formula.

    Per variable ``v`` (0-based) nodes ``6v..6v+5`` are
    T, F, two leaves on T, two leaves on F. Clause nodes follow, ``k**L``
    per clause, each joined to the T-node (positive literal) or F-node
    (negative literal) of its three literals.
    """
    m, k = spec.formula.num_vars, spec.formula.num_clauses
    if spec.num_nodes > spec.node_budget:
        raise ValueError(f"reduction needs {spec.num_nodes} nodes, over the node budget "
                         f"of {spec.node_budget}")
    edges, labels = [], {}
    for v in range(m):
        t, f = 6 * v, 6 * v + 1
        labels.update({t: f"T{v + 1}", f: f"F{v + 1}"})
        edges.append((t, f))
        for leaf, owner in zip(range(6 * v + 2, 6 * v + 6), (t, t, f, f)):
            edges.append((owner, leaf))
            labels[leaf] = "leaf"
    node = 6 * m
    for c, clause in enumerate(spec.formula.clauses):
        targets = {6 * (abs(l) - 1) + (0 if l > 0 else 1) for l in clause}
        for _ in range(spec.copies):
            edges.extend((node, t) for t in targets)
            labels[node] = f"clause-{c}"
            node += 1
    return from_edges(node, edges, labels)


def gadget_pairs(formula: CnfFormula) -> list[tuple[int, int]]:
    """``(T-node, F-node)`` indices per variable in a reduction graph."""
    return [(6 * v, 6 * v + 1) for v in range(formula.num_vars)]


# -- I/O --------------------------------------------------------------------

def graph_to_dict(graph: Graph) -> dict:
    return {"n": graph.n, "edges": [list(e) for e in graph.edges()],
            "labels": {str(i): lab for i, lab in sorted(graph.labels.items())}}


def graph_from_dict(doc: dict) -> Graph:
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise GraphFormatError("graph document needs 'n' and 'edges'")
    n = doc["n"]
    if not isinstance(n, int) or n < 0:
        raise GraphFormatError(f"'n' must be a non-negative integer, got {n!r}")
    edges = doc["edges"]
    for e in edges:
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)):
            raise GraphFormatError(f"edge entries must be [i, j] integer pairs, got {e!r}")
    try:
        labels = {int(k): str(v) for k, v in (doc.get("labels") or {}).items()}
    except ValueError:
        raise GraphFormatError("label keys must be node indices") from None
    return from_edges(n, edges, labels)


def save_graph(graph: Graph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=1) + "\n")


def load_graph(path: str | Path) -> Graph:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return graph_from_dict(doc)
    except GraphFormatError as exc:
        raise GraphFormatError(f"{path}: {exc}") from None


def parse_cnf(text: str, source: str = "<cnf>") -> CnfFormula:
    """Parse DIMACS CNF. Every clause must have exactly three literals."""
    num_vars = declared = None
    clauses: list[tuple[int, int, int]] = []
    pending: list[int] = []
    pending_line = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise GraphFormatError(f"{source}:{lineno}: bad problem line {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        if num_vars is None:
            raise GraphFormatError(f"{source}:{lineno}: clause before 'p cnf' line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise GraphFormatError(f"{source}:{lineno}: bad literal {tok!r}") from None
            if not pending:
                pending_line = lineno
            if lit == 0:
                if len(pending) != 3:
                    raise GraphFormatError(
                        f"{source}:{pending_line}: clause has {len(pending)} literals, need 3")
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if pending:
        raise GraphFormatError(f"{source}:{pending_line}: unterminated clause")
    if num_vars is None:
        raise GraphFormatError(f"{source}: missing 'p cnf' line")
    if declared is not None and declared != len(clauses):
        warnings.warn(f"{source}: header declares {declared} clauses, found {len(clauses)}",
                      stacklevel=2)
    try:
        return CnfFormula(num_vars, tuple(clauses))
    except GraphFormatError as exc:
        raise GraphFormatError(f"{source}: {exc}") from None


def load_cnf(path: str | Path) -> CnfFormula:
    return parse_cnf(Path(path).read_text(), source=str(path))


def format_cnf(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_vars} {formula.num_clauses}"]
    lines += [" ".join(map(str, c)) + " 0" for c in formula.clauses]
    return "\n".join(lines) + "\n"
