import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfbackup.netgraph import (
    HOST,
    SERVER,
    DisconnectedGraphError,
    NetworkGraph,
    all_pairs_shortest,
    build_fat_tree,
    build_random_graph,
    graph_from_edges,
)

from conftest import bfs_distances


def expected_counts(k):
    # counted by role rather than by formula reuse
    core = sum(1 for _ in range((k // 2) ** 2))
    per_pod_sw = k
    hosts_per_edge = k // 2
    return core, core + k * per_pod_sw, k * (k // 2) * hosts_per_edge


@pytest.mark.parametrize("k", [2, 4, 6])
def test_fat_tree_counts(k):
    g = build_fat_tree(k)
    core, switches, hosts = expected_counts(k)
    assert len(g.servers) == switches
    assert len(g.hosts) == hosts
    # every switch has k ports in use except core (k down) and edge (k/2 up + k/2 hosts)
    deg = [len(g.neighbors(u)) for u in g.servers]
    assert all(d == k for d in deg)
    assert all(len(g.neighbors(h)) == 1 for h in g.hosts)
    assert g.is_connected()


def test_fat_tree_k2_edges():
    g = build_fat_tree(2)
    # core 0; agg 1, 2; edge 3, 4; hosts 5, 6
    assert g.edges == frozenset({(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 6)})


def test_fat_tree_host_distances(fat4):
    g, d = fat4
    hosts = g.hosts
    # hosts 0,1 share an edge switch; 0 and 2 share a pod; last host is in another pod
    assert d(hosts[0], hosts[1]) == 2
    assert d(hosts[0], hosts[2]) == 4
    assert d(hosts[0], hosts[-1]) == 6
    assert max(d(a, b) for a in hosts for b in hosts) == 6


def test_fat_tree_rejects_odd():
    for bad in (0, 1, 3, 5):
        with pytest.raises(ValueError):
            build_fat_tree(bad)


def test_capacities_only_on_servers(fat4):
    g, _ = fat4
    assert set(g.backup_capacity) >= set(g.servers)
    assert all(g.backup_capacity.get(h, 0) == 0 for h in g.hosts)
    assert all(g.kinds[u] == SERVER for u in g.servers)
    assert all(g.kinds[h] == HOST for h in g.hosts)


def test_distances_match_bfs(fat4):
    g, d = fat4
    ref = bfs_distances(g.num_nodes, g.edges)
    assert d.dist.tolist() == ref


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 14), p=st.floats(0.05, 1.0), seed=st.integers(0, 2**32 - 1))
def test_random_graph_distances_and_paths(n, p, seed):
    g = build_random_graph(n, p, seed)
    assert g.is_connected()
    d = all_pairs_shortest(g)
    ref = bfs_distances(n, g.edges)
    assert d.dist.tolist() == ref
    for u in range(n):
        for v in range(n):
            path = d.path(u, v)
            assert path[0] == u and path[-1] == v
            assert len(path) - 1 == d(u, v)
            assert all(g.has_edge(a, b) for a, b in zip(path, path[1:]))
            for w in range(n):
                assert d(u, v) <= d(u, w) + d(w, v)


def test_next_hop_prefers_lowest_id():
    # square 0-1-3, 0-2-3: both 1 and 2 lie on a shortest 0 -> 3 path
    g = graph_from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    d = all_pairs_shortest(g)
    assert d.path(0, 3) == [0, 1, 3]
    assert d.path(3, 0) == [3, 1, 0]


def test_random_graph_deterministic_and_complete():
    a = build_random_graph(12, 0.3, 7)
    b = build_random_graph(12, 0.3, 7)
    assert a.edges == b.edges
    full = build_random_graph(6, 1.0, 0)
    assert len(full.edges) == 15


def test_random_graph_bridging_sparse():
    # tiny p forces many bridge edges; the result must be a single component
    for seed in range(10):
        g = build_random_graph(15, 0.01, seed)
        assert g.is_connected()
        assert len(g.edges) >= 14


def test_disconnected_raises():
    g = graph_from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(DisconnectedGraphError, match="no path"):
        all_pairs_shortest(g)


def test_validation_errors():
    with pytest.raises(ValueError):
        graph_from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        graph_from_edges(3, [(0, 5)])
    with pytest.raises(ValueError):
        NetworkGraph(("router",), frozenset(), {}, {})


def test_json_round_trip(fat4):
    g, _ = fat4
    doc = json.loads(json.dumps(g.to_dict()))
    h = NetworkGraph.from_dict(doc)
    assert h.kinds == g.kinds
    assert h.edges == g.edges
    assert dict(h.backup_capacity) == dict(g.backup_capacity)
    assert dict(h.primary_capacity) == dict(g.primary_capacity)


def test_with_capacities(fat4):
    g, _ = fat4
    h = g.with_capacities(backup=6)
    assert all(h.backup_capacity[u] == 6 for u in h.servers)
    assert h.edges == g.edges


def test_distance_table_read_only(fat4):
    _, d = fat4
    with pytest.raises(ValueError):
        d.dist[0, 1] = 99
    assert isinstance(d.dist, np.ndarray)
