import math

import numpy as np
import pytest

from helpers import PARALLEL2, SHORT_LONG, make, path
from reffnet.errors import InstanceFormatError
from reffnet.graph import (Edge, Instance, format_instance, parse_instance, read_instance,
                           shortest_path, shortest_path_distance, st_connected_in_support,
                           validate, write_instance)


def test_single_edge_is_valid():
    rep = validate(make([(0, 1)], k=1))
    assert rep.ok and not rep.violations


def test_zero_resistance_flagged():
    inst = make([(0, 1)], k=1, res=[0.0])
    assert "edge 0: nonpositive resistance" in validate(inst).violations


def test_coincident_terminals_flagged():
    inst = Instance(2, (Edge(0, 1),), 0, 0, 1.0)
    assert "coincident terminals" in validate(inst).violations


def test_other_violations():
    bad = Instance(3, (Edge(0, 0), Edge(0, 5), Edge(0, 1, -1.0)), 0, 1, -2.0, 0.0)
    v = validate(bad).violations
    assert any("self-loop" in s for s in v)
    assert any("out of range" in s for s in v)
    assert any("negative cost" in s for s in v)
    assert "negative budget" in v and "nonpositive dual target" in v


def test_budget_below_distance_warns():
    rep = validate(path(3, k=2))
    assert rep.ok and "budget below shortest path distance" in rep.warnings


def test_parallel_edges_kept_distinct():
    inst = make(PARALLEL2, k=1)
    assert inst.m == 2 and validate(inst).ok


@pytest.mark.parametrize("inst, d", [
    (path(3), 3),
    (make(SHORT_LONG), 1),
    (make([(0, 2), (1, 3)], n=4), None),
])
def test_shortest_path_distance(inst, d):
    assert shortest_path_distance(inst) == d


def test_distance_matches_networkx_bfs():
    import networkx as nx
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(3, 12))
        pairs = [p for p in zip(*np.triu_indices(n, 1)) if rng.random() < 0.3]
        if not pairs:
            continue
        inst = make([(int(a), int(b)) for a, b in pairs], n=n, t=n - 1)
        g = nx.Graph(pairs)
        g.add_nodes_from(range(n))
        want = nx.shortest_path_length(g, 0, n - 1) if nx.has_path(g, 0, n - 1) else None
        assert shortest_path_distance(inst) == want
        sp = shortest_path(inst)
        assert (sp is None) == (want is None)
        if sp is not None:
            assert len(sp) == want


def test_support_connectivity():
    inst = make([(0, 2), (2, 1)])
    assert st_connected_in_support(inst, [1, 1])
    assert not st_connected_in_support(inst, [0, 0])
    assert not st_connected_in_support(inst, [1, 0])
    assert not st_connected_in_support(inst, [1, 1e-10])
    with pytest.raises(ValueError):
        st_connected_in_support(inst, [1])


def test_text_round_trip(tmp_path):
    inst = make(SHORT_LONG, k=2.5, R=0.75, costs=[1, 2, 0.5], res=[1, 0.25, 3])
    f = tmp_path / "i.txt"
    write_instance(inst, f)
    assert read_instance(f) == inst
    assert parse_instance(format_instance(inst)) == inst


def test_parse_comments_and_errors():
    text = "# header\n2 1 0 1 1  # budget\n0 1 1 1\n"
    assert parse_instance(text).m == 1
    for bad in ["", "2 1 0 1\n0 1 1 1\n", "2 2 0 1 1\n0 1 1 1\n", "2 1 0 1 1\n0 x 1 1\n",
                "2 1 0 0 1\n0 1 1 1\n", "2 1 0 1 1\n0 1 1 1\nR\n"]:
        with pytest.raises(InstanceFormatError):
            parse_instance(bad)


def test_helpers():
    inst = make(SHORT_LONG, costs=[1, 2, 3])
    assert inst.subgraph_cost([0, 2]) == 4
    assert list(inst.indicator([1])) == [0, 1, 0]
    assert inst.with_budget(7).budget == 7
    assert not inst.is_unit
    assert math.isclose(Edge(0, 1, 1, 4).conductance * 4, 1)
