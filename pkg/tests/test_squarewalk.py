import pytest
from hypothesis import given, strategies as st

from sqlab import graph
from sqlab import squarewalk as sw
from oracles import oracle_common_neighbors, oracle_longest_square_path


def cycle_graph(n):
    return graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def squared_cycle_graph(n):
    edges = set()
    for i in range(n):
        edges.add(tuple(sorted((i, (i + 1) % n))))
        edges.add(tuple(sorted((i, (i + 2) % n))))
    return graph.from_edges(n, sorted(edges))


def test_edge_states_counts():
    assert len(sw.edge_states(graph.complete(3))) == 6
    assert sw.edge_states(graph.empty(4)) == []
    g = graph.gnp(100, 0.1, seed=2)
    assert len(sw.edge_states(g)) == 2 * g.edge_count


def test_successors_k4():
    g = graph.complete(4)
    succ = set(sw.successors(g, sw.EdgeState(0, 1)))
    assert succ == {sw.EdgeState(1, 2), sw.EdgeState(1, 3)}


def test_successors_triangle_free():
    c4 = cycle_graph(4)
    for s in sw.edge_states(c4):
        assert sw.successors(c4, s) == []


def test_successors_match_bruteforce():
    g = graph.gnp(40, 0.4, seed=5)
    states = sw.edge_states(g)
    for s in states[:: max(1, len(states) // 15)]:
        got = {t.second for t in sw.successors(g, s)}
        assert got == oracle_common_neighbors(g, s.first, s.second)
        assert len(sw.successors(g, s)) == len(g.triangles_of_edge(*s))


def test_is_square_path_basics():
    k4 = graph.complete(4)
    assert sw.is_square_path(k4, [0, 1, 2, 3])
    c5 = cycle_graph(5)
    assert not sw.is_square_path(c5, [0, 1, 2])
    c6 = cycle_graph(6)
    for seq in ([0, 1, 2], [1, 2, 3, 4], [0, 1, 2, 3, 4, 5]):
        assert not sw.is_square_path(c6, seq)
    assert sw.is_square_path(c6, [0, 1])
    assert sw.is_square_path(c6, [3])
    assert not sw.is_square_path(k4, [0, 0])
    assert not sw.is_square_path(k4, [0, 1, 0])


def test_longest_exact_small_cases():
    assert len(sw.longest_square_path_exact(graph.complete(5)).path) == 5
    assert len(sw.longest_square_path_exact(cycle_graph(6)).path) == 2
    assert len(sw.longest_square_path_exact(graph.empty(3)).path) == 1


def test_longest_exact_matches_oracle():
    cases = []
    seed = 0
    for n in range(6, 11):
        for p in (0.3, 0.5, 0.7):
            for _ in range(4):
                cases.append(graph.gnp(n, p, seed=1000 + seed))
                seed += 1
    for g in cases:
        res = sw.longest_square_path_exact(g)
        assert res.optimal
        assert len(res.path) == oracle_longest_square_path(g)
        assert sw.is_square_path(g, res.path.vertices)


def test_longest_exact_budget_flag():
    g = graph.complete(9)
    res = sw.longest_square_path_exact(g, node_budget=3)
    assert not res.optimal
    assert sw.is_square_path(g, res.path.vertices)


def test_hamilton_k7():
    res = sw.has_square_hamilton_cycle(graph.complete(7))
    assert res.status == "found"
    assert sw.is_square_cycle(graph.complete(7), res.cycle.vertices)
    assert len(res.cycle) == 7


def test_hamilton_tripartite_none():
    from sqlab.adversary import tripartite_template

    res = sw.has_square_hamilton_cycle(tripartite_template(2))
    assert res.status == "none"


def test_hamilton_squared_cycle_is_own_certificate():
    g = squared_cycle_graph(8)
    res = sw.has_square_hamilton_cycle(g)
    assert res.status == "found"
    assert len(res.cycle) == 8


def test_hamilton_budget_unknown():
    g = graph.complete(12)
    res = sw.has_square_hamilton_cycle(g, node_budget=2)
    assert res.status == "unknown"


def test_hamilton_below_five_none():
    assert sw.has_square_hamilton_cycle(graph.complete(4)).status == "none"


def test_square_cycle_through():
    g = squared_cycle_graph(9)
    res = sw.has_square_cycle_through(g, 3)
    assert res.status == "found"
    assert 3 in res.cycle.vertices
    lone = graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4)])
    assert sw.has_square_cycle_through(lone, 3).status == "none"


def test_longest_square_cycle_exact():
    g = squared_cycle_graph(8)
    res = sw.longest_square_cycle_exact(g)
    assert res.status == "found" and len(res.cycle) == 8
    assert sw.longest_square_cycle_exact(cycle_graph(7)).status == "none"
    res5 = sw.longest_square_cycle_exact(graph.complete(6))
    assert res5.status == "found" and len(res5.cycle) == 6


def test_greedy_complete_graph_spans():
    for n in (5, 9, 14):
        g = graph.complete(n)
        for seed in (0, 1, 7):
            p = sw.greedy_square_path(g, seed)
            assert len(p) == n


def test_greedy_triangle_free_stops_at_edge():
    c8 = cycle_graph(8)
    assert len(sw.greedy_square_path(c8, 3)) == 2


def test_greedy_deterministic_and_valid():
    g = graph.gnp(300, 0.15, 21)
    a = sw.greedy_square_path(g, seed=5, lookahead_depth=1)
    b = sw.greedy_square_path(g, seed=5, lookahead_depth=1)
    assert a.vertices == b.vertices
    assert sw.is_square_path(g, a.vertices)
    c = sw.greedy_square_path(g, seed=5, lookahead_depth=2)
    assert sw.is_square_path(g, c.vertices)


@given(st.integers(5, 30), st.floats(0.2, 0.9), st.integers(0, 10**6))
def test_path_reversal_property(n, p, seed):
    g = graph.gnp(n, p, seed)
    path = sw.greedy_square_path(g, seed)
    assert sw.is_square_path(g, path.vertices)
    assert sw.is_square_path(g, path.vertices[::-1])


def test_serialization():
    g = graph.complete(5)
    p = sw.SquarePath.checked(g, [0, 1, 2])
    assert p.to_json() == "[0, 1, 2]"
    res = sw.has_square_hamilton_cycle(g)
    assert res.cycle.to_json().startswith("[")


def test_checked_constructors_reject():
    g = cycle_graph(6)
    with pytest.raises(ValueError):
        sw.SquarePath.checked(g, [0, 1, 2])
    with pytest.raises(ValueError):
        sw.SquareCycle.checked(g, [0, 1, 2, 3, 4, 5])
