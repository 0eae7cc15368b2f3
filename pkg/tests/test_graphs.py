import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pubgood.graphs import (
    CnfFormula,
    GraphFormatError,
    ReductionSpec,
    clique,
    cycle,
    d_regular_bipartite,
    empty,
    format_cnf,
    from_edges,
    gadget_pairs,
    generate,
    load_cnf,
    load_graph,
    parse_cnf,
    path,
    pentagon_gadget,
    random_d_regular,
    random_gnp,
    sat_reduction,
    save_graph,
    star,
)

from strategies import small_graphs


def assert_simple(g):
    for i in range(g.n):
        nb = g.neighbors(i)
        assert i not in nb
        assert list(nb) == sorted(set(nb))
        for j in nb:
            assert i in g.neighbors(j)


# -- generators ---------------------------------------------------------------

def test_generator_examples():
    g = clique(3)
    assert g.num_edges == 3 and list(g.degrees) == [2, 2, 2]
    assert pentagon_gadget(4).n == 45
    b = d_regular_bipartite(8, 3)
    assert b.num_edges == 12 and set(b.degrees) == {3}


def test_simple_generators():
    assert cycle(5).num_edges == 5 and set(cycle(5).degrees) == {2}
    assert path(3).edges() == [(0, 1), (1, 2)]
    assert empty(4).num_edges == 0
    s = star(4)
    assert s.n == 5 and s.degrees[0] == 4


def test_bipartite_sides_are_independent():
    g = d_regular_bipartite(40, 10)
    assert g.is_independent(range(20)) and g.is_independent(range(20, 40))
    assert g.is_regular()


@pytest.mark.parametrize("n,d", [(7, 2), (8, 5), (8, 0)])
def test_bipartite_rejects_bad_parameters(n, d):
    with pytest.raises(ValueError):
        d_regular_bipartite(n, d)


@pytest.mark.parametrize("big_n", [0, 1, 3, 10])
def test_pentagon_degrees(big_n):
    g = pentagon_gadget(big_n)
    assert g.n == 10 * big_n + 5
    deg = g.degrees
    assert all(deg[:5] == 2 + 6 * big_n)
    assert all(deg[5:] == 3)
    assert_simple(g)


@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 1000))
def test_random_d_regular_is_regular(n, d, seed):
    if d >= n or (n * d) % 2:
        with pytest.raises(ValueError):
            random_d_regular(n, d, seed=seed)
        return
    g = random_d_regular(n, d, seed=seed)
    assert set(g.degrees) == {d}
    assert_simple(g)


def test_random_gnp_is_seeded():
    assert random_gnp(20, 0.3, seed=4) == random_gnp(20, 0.3, seed=4)
    assert_simple(random_gnp(20, 0.3, seed=4))


def test_generate_dispatch():
    assert generate("cycle", n=5) == cycle(5)
    assert generate("pentagon_gadget", N=2).n == 25
    with pytest.raises(ValueError):
        generate("hypercube", n=3)
    with pytest.raises(ValueError):
        generate("cycle", n=5, d=2)


@given(small_graphs())
def test_graph_invariants_hold_for_arbitrary_edges(g):
    assert_simple(g)
    assert g.closed_matrix().sum() == g.n + 2 * g.num_edges


# -- edges, errors and I/O ----------------------------------------------------

def test_self_loop_and_range_errors():
    with pytest.raises(GraphFormatError, match="self-loop"):
        from_edges(3, [(2, 2)])
    with pytest.raises(GraphFormatError):
        from_edges(3, [(0, 3)])


def test_duplicate_edge_collapses_with_warning():
    with pytest.warns(UserWarning):
        g = from_edges(3, [(0, 1), (1, 0)])
    assert g.num_edges == 1


@given(small_graphs())
def test_save_load_round_trip(tmp_path_factory, g):
    p = tmp_path_factory.mktemp("g") / "g.json"
    save_graph(g, p)
    assert load_graph(p) == g


def test_load_graph_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 3,\n "edges": [[0, 1],]}')
    with pytest.raises(GraphFormatError, match=r"bad.json:2:"):
        load_graph(p)
    p.write_text(json.dumps({"n": 3, "edges": [[1, 1]]}))
    with pytest.raises(GraphFormatError, match="self-loop"):
        load_graph(p)


def test_labels_survive_round_trip(tmp_path):
    g = pentagon_gadget(1)
    save_graph(g, tmp_path / "p.json")
    h = load_graph(tmp_path / "p.json")
    assert h.label_nodes("cycle-node") == [0, 1, 2, 3, 4]


# -- CNF and the reduction ----------------------------------------------------

def all_patterns():
    return CnfFormula(3, [tuple(s * v for s, v in zip(signs, (1, 2, 3)))
                          for signs in itertools.product((1, -1), repeat=3)])


def test_parse_cnf_examples(tmp_path):
    f = parse_cnf("p cnf 1 1\n1 1 1 0\n")
    assert f.num_vars == 1 and f.num_clauses == 1
    p = tmp_path / "u.cnf"
    p.write_text(format_cnf(all_patterns()))
    g = load_cnf(p)
    assert g.num_clauses == 8 and not g.is_satisfiable()
    with pytest.raises(GraphFormatError, match="4 literals"):
        parse_cnf("p cnf 4 1\n1 2 3 4 0\n")


def test_parse_cnf_other_errors():
    with pytest.raises(GraphFormatError):
        parse_cnf("1 2 3 0\n")
    with pytest.raises(GraphFormatError):
        parse_cnf("p cnf 2 1\n1 2 3 0\n")
    with pytest.raises(GraphFormatError):
        parse_cnf("p cnf 3 1\n1 2 3\n")


def test_reduction_examples():
    g = sat_reduction(ReductionSpec(CnfFormula(1, [(1, 1, 1)])))
    assert g.n == 7
    # Repeated literals collapse to a single edge.
    assert g.neighbors(6) == (0,)
    spec = ReductionSpec(all_patterns())
    assert spec.num_nodes == 6 * 3 + 8 * 8
    assert sat_reduction(spec).n == 82


def test_reduction_gadget_shape():
    formula = all_patterns()
    g = sat_reduction(ReductionSpec(formula))
    for t, f in gadget_pairs(formula):
        for node, partner in ((t, f), (f, t)):
            nb = g.neighbors(node)
            assert partner in nb
            assert sum(g.labels[j] == "leaf" for j in nb) == 2
    clause_nodes = [i for i in range(g.n) if g.labels[i].startswith("clause")]
    assert all(g.degrees[i] == 3 for i in clause_nodes)


def test_reduction_node_budget():
    with pytest.raises(ValueError, match="node budget"):
        sat_reduction(ReductionSpec(all_patterns(), L=3, node_budget=1000))


@st.composite
def formulas(draw):
    m = draw(st.integers(1, 4))
    lit = st.integers(1, m).flatmap(lambda v: st.sampled_from([v, -v]))
    clauses = draw(st.lists(st.tuples(lit, lit, lit), min_size=1, max_size=4))
    return CnfFormula(m, clauses)


@given(formulas(), st.integers(1, 2))
def test_reduction_counts(formula, L):
    spec = ReductionSpec(formula, L=L)
    g = sat_reduction(spec)
    k = formula.num_clauses
    assert g.n == 6 * formula.num_vars + k * k ** L
    distinct = sum(len({(abs(l), l > 0) for l in c}) for c in formula.clauses)
    assert g.num_edges == 5 * formula.num_vars + distinct * k ** L
    assert_simple(g)
