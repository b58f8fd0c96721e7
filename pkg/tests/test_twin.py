import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dags_with_selection
from cdis.equivalence import enumerate_models
from cdis.errors import InvalidArgument
from cdis.graph import VertexKind, d_separated, descendants
from cdis.twin import TargetCollection, build_twin, implies_ci, implies_invariance


def named_edges(tw):
    names = tw.graph.names
    return {(names[a], names[b]) for a, b in tw.graph.edges}


def _subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def test_clinical_twin_for_first_variable(clinical):
    tw = build_twin(clinical, {0})
    assert set(tw.graph.names) == {"X1", "X2", "zeta", "X1*", "eps_X1", "S1*"}
    assert named_edges(tw) == {("zeta", "X1"), ("eps_X1", "X1"), ("eps_X1", "X1*"),
                               ("X1*", "S1*"), ("X2", "S1*")}


def test_chain_twin_splits_only_the_last_variable(chain):
    tw = build_twin(chain, {2})
    assert tw.affected == {2}
    assert named_edges(tw) == {("X1", "X2"), ("X2", "X3"), ("X2", "X3*"), ("eps_X3", "X3"),
                               ("eps_X3", "X3*"), ("X3*", "S1*"), ("zeta", "X3")}


def test_chain_twin_for_first_variable_splits_everything(chain):
    tw = build_twin(chain, {0})
    assert named_edges(tw) == {
        ("zeta", "X1"), ("X1", "X2"), ("X2", "X3"), ("X1*", "X2*"), ("X2*", "X3*"), ("X3*", "S1*"),
        ("eps_X1", "X1"), ("eps_X1", "X1*"), ("eps_X2", "X2"), ("eps_X2", "X2*"),
        ("eps_X3", "X3"), ("eps_X3", "X3*"),
    }


@given(dags_with_selection())
def test_empty_target_is_base_graph_plus_isolated_zeta(g):
    tw = build_twin(g, set())
    assert tw.graph.n == g.n + 1
    relabel = {v: v if v < g.d else v + 1 for v in range(g.n)}
    assert tw.graph.edges == {(relabel[a], relabel[b]) for a, b in g.edges}
    assert not tw.graph.parents[tw.zeta] and not tw.graph.children[tw.zeta]


def test_selection_vertex_target_rejected(clinical):
    with pytest.raises(InvalidArgument):
        build_twin(clinical, {2})


@given(dags_with_selection(), st.data())
def test_twin_structure(g, data):
    target = data.draw(st.sets(st.integers(0, g.d - 1)))
    tw = build_twin(g, target)
    G = tw.graph
    assert tw.affected == {v for v in descendants(g, target) if v < g.d}
    counterfactual = G.vertices_of_kind(VertexKind.COUNTERFACTUAL)
    noise = G.vertices_of_kind(VertexKind.NOISE)
    assert {tw.x_star(i) for i in tw.affected} == counterfactual
    assert {tw.eps(i) for i in tw.affected} == noise
    for i in tw.affected:
        assert set(G.children[tw.eps(i)]) == {i, tw.x_star(i)}
    assert set(G.children[tw.zeta]) == set(target)
    for j, s in enumerate(g.selection):
        expected = {tw.x_star(p) if p in tw.affected else p for p in g.parents[s]}
        assert set(G.parents[tw.s_star(j)]) == expected
    for a, b in g.observed_subgraph_edges():
        assert G.has_edge(a, b)
        if b in tw.affected:
            src = tw.x_star(a) if a in tw.affected else a
            assert G.has_edge(src, tw.x_star(b))


# separation queries


def test_intervention_at_end_keeps_chain_independence(chain):
    assert implies_ci(build_twin(chain, {2}), {0}, {2}, {1})


def test_intervention_at_start_breaks_chain_independence(chain):
    tw = build_twin(chain, {0})
    assert not implies_ci(tw, {0}, {2}, {1})
    # the open path runs through both noise vertices and the basal copies
    G = tw.graph
    blocked = {1, tw.zeta} | tw.selection_vertices | {tw.x_star(1)}
    assert d_separated(G, {0}, {2}, blocked)


def test_disconnected_components_are_independent():
    from cdis.graph import DagWithSelection

    g = DagWithSelection(4, 0, [(0, 1), (2, 3)])
    tw = build_twin(g, {0, 2})
    assert implies_ci(tw, {0, 1}, {2, 3})


def test_clinical_invariances(clinical):
    tw = build_twin(clinical, {0})
    assert implies_invariance(tw, {1})
    assert not implies_invariance(tw, {1}, {0})


def test_chain_invariance_of_last_given_middle_fails(chain):
    assert not implies_invariance(build_twin(chain, {0}), {2}, {1})


def test_queries_reject_non_observed_vertices(clinical):
    tw = build_twin(clinical, {0})
    with pytest.raises(InvalidArgument):
        implies_ci(tw, {0}, {2})
    with pytest.raises(InvalidArgument):
        implies_invariance(tw, {1}, {3})


def test_twin_independence_implies_selected_independence():
    # twin separation given X_C, S*, zeta implies separation given C and S in the base graph
    for g in enumerate_models(3, 2):
        for target in _subsets(range(g.d)):
            tw = build_twin(g, target)
            for x, y in itertools.combinations(range(g.d), 2):
                for c in _subsets(v for v in range(g.d) if v not in (x, y)):
                    if implies_ci(tw, {x}, {y}, c):
                        assert d_separated(g, {x}, {y}, set(c) | set(g.selection))


def test_empty_target_independences_are_exactly_selected_independences():
    for g in enumerate_models(4, 1):
        tw = build_twin(g, ())
        for x, y in itertools.combinations(range(g.d), 2):
            for c in _subsets(v for v in range(g.d) if v not in (x, y)):
                assert implies_ci(tw, {x}, {y}, c) == d_separated(g, {x}, {y}, set(c) | set(g.selection))


# target collections


def test_target_collection_parse_and_format():
    t = TargetCollection.parse("0|1,2|-")
    assert list(t) == [frozenset(), {0}, {1, 2}, frozenset()]
    assert t.k == 3
    assert t.format() == "0|1,2|-"
    assert TargetCollection.parse("") == TargetCollection.of()


def test_target_collection_requires_empty_first_target():
    with pytest.raises(InvalidArgument):
        TargetCollection(({0},))
    with pytest.raises(InvalidArgument):
        TargetCollection.parse("a")
