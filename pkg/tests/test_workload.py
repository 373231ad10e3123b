import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from nfbackup.netgraph import all_pairs_shortest, build_random_graph, graph_from_edges
from nfbackup.workload import (
    ChainSpec,
    PrimaryInstance,
    ServiceChain,
    assign_and_route,
    chains_through,
    generate_chains,
    place_primary_instances,
    route_segments,
    segment_length,
    workload_from_dict,
    workload_to_dict,
)


def brute_segments(route):
    out = {}
    for p in range(len(route)):
        for q in range(p + 1, len(route)):
            key = (route[p], route[q])
            out[key] = min(out.get(key, q - p), q - p)
    return out


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=25))
def test_segments_match_brute_force(route):
    assert route_segments(route) == brute_segments(route)


def test_segment_revisit():
    # 1 is visited twice; the later visit gives the shorter hop to 4
    c = ServiceChain(0, 0, 4, (), (), (0, 1, 2, 1, 4))
    assert segment_length(c, 1, 4) == 1
    assert segment_length(c, 1, 2) == 1
    assert segment_length(c, 2, 1) == 1
    assert segment_length(c, 0, 4) == 4
    assert segment_length(c, 4, 0) is None
    assert segment_length(c, 1, 1) == 2


def test_chains_through():
    a = ServiceChain(0, 0, 2, (), (), (0, 1, 2))
    b = ServiceChain(1, 2, 0, (), (), (2, 1, 0))
    assert chains_through([a, b], 0, 2) == [a]
    assert chains_through([a, b], 1, 0) == [b]


def test_chain_validation():
    with pytest.raises(ValueError):
        ServiceChain(0, 0, 1, (), (), (0, 1), rate=0)
    with pytest.raises(ValueError):
        ServiceChain(0, 0, 1, (1,), (), (0, 1))
    with pytest.raises(ValueError):
        ServiceChain(0, 0, 1, (), (), (1, 0))


def test_placement_fat_tree(fat4):
    g, _ = fat4
    inst = place_primary_instances(g, 20, rng=3)
    assert len(inst) == 160
    assert Counter(n.ftype for n in inst) == {f: 8 for f in range(20)}
    per_server = Counter(n.server for n in inst)
    assert all(per_server[u] == 8 for u in g.servers)
    assert [n.id for n in inst] == list(range(160))
    assert inst == sorted(inst, key=lambda n: (n.server, n.ftype))


def test_placement_uneven_and_errors():
    g = graph_from_edges(3, [(0, 1), (1, 2)], 1, primary_capacity=3)
    inst = place_primary_instances(g, 4, rng=0)
    counts = Counter(n.ftype for n in inst)
    assert sum(counts.values()) == 9
    assert max(counts.values()) - min(counts.values()) <= 1
    with pytest.raises(ValueError):
        place_primary_instances(g, 10, rng=0)
    with pytest.raises(ValueError):
        place_primary_instances(g, 0, rng=0)


def test_assign_and_route_hand_trace():
    # line 0-1-2-3-4; type 0 on 1 and 3, type 1 on 4
    g = graph_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)], 1)
    d = all_pairs_shortest(g)
    inst = [PrimaryInstance(0, 1, 0), PrimaryInstance(1, 3, 0), PrimaryInstance(2, 4, 1)]
    c = assign_and_route(ChainSpec(0, 2, 0, (1, 0)), inst, d)
    # from 2: type 1 only on 4; from 4 the closest type 0 is on 3
    assert c.assigned == (2, 1)
    assert c.route == (2, 3, 4, 3, 2, 1, 0)


def test_assign_tie_lowest_id():
    g = graph_from_edges(3, [(0, 1), (1, 2)], 1)
    d = all_pairs_shortest(g)
    inst = [PrimaryInstance(0, 2, 0), PrimaryInstance(1, 0, 0)]
    c = assign_and_route(ChainSpec(0, 1, 1, (0,)), inst, d)
    assert c.assigned == (0,)
    with pytest.raises(ValueError):
        assign_and_route(ChainSpec(1, 1, 1, (5,)), inst, d)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), count=st.integers(0, 30))
def test_generated_chain_invariants(fat4, seed, count):
    g, d = fat4
    inst = place_primary_instances(g, 20, rng=seed)
    by_id = {n.id: n for n in inst}
    chains = generate_chains(g, inst, count, d, (1, 20), rng=seed)
    assert len(chains) == count
    hosts = set(g.hosts)
    for c in chains:
        assert c.source in hosts and c.dest in hosts and c.source != c.dest
        assert 1 <= len(c.requested) <= 20
        pos = 0
        for f, nid in zip(c.requested, c.assigned):
            n = by_id[nid]
            assert n.ftype == f
            pos = c.route.index(n.server, pos)
        assert all(g.has_edge(a, b) for a, b in zip(c.route, c.route[1:]))


def test_random_graph_uses_servers_as_endpoints():
    g = build_random_graph(8, 0.4, 1)
    d = all_pairs_shortest(g)
    inst = place_primary_instances(g, 4, rng=1)
    chains = generate_chains(g, inst, 10, d, rng=1)
    assert all(c.source in g.servers for c in chains)


def test_workload_json_round_trip(fat4):
    g, d = fat4
    inst = place_primary_instances(g, 20, rng=0)
    chains = generate_chains(g, inst, 5, d, rng=0, rate=2.0)
    doc = json.loads(json.dumps(workload_to_dict(inst, chains)))
    inst2, chains2 = workload_from_dict(doc)
    assert inst2 == inst
    assert chains2 == chains
    assert all(c.rate == 2.0 for c in chains2)
