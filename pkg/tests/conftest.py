import itertools
from collections import deque

import pytest

from nfbackup.netgraph import all_pairs_shortest, build_fat_tree, graph_from_edges
from nfbackup.workload import PrimaryInstance


def bfs_distances(n, edges):
    """Plain BFS oracle, independent of scipy."""
    adj = {u: [] for u in range(n)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    out = []
    for s in range(n):
        d = [None] * n
        d[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if d[w] is None:
                    d[w] = d[u] + 1
                    q.append(w)
        out.append(d)
    return out


# Six-node stand-alone example; 1-based server k is id k-1. Servers 1, 3, 4, 6
# hold one backup slot each; F sits on 3, G on 4, E on 6.
SIX_NODE_EDGES = ((0, 1), (1, 4), (2, 4), (3, 4), (3, 5))
SIX_NODE_CAPACITY = {0: 1, 2: 1, 3: 1, 5: 1}
SIX_NODE_INSTANCES = (PrimaryInstance(0, 2, 0), PrimaryInstance(1, 3, 1), PrimaryInstance(2, 5, 2))


@pytest.fixture
def six_node():
    g = graph_from_edges(6, SIX_NODE_EDGES, SIX_NODE_CAPACITY)
    return g, all_pairs_shortest(g), list(SIX_NODE_INSTANCES)


@pytest.fixture(scope="session")
def fat4():
    g = build_fat_tree(4)
    return g, all_pairs_shortest(g)


def all_pairs(n):
    return list(itertools.combinations(range(n), 2))
