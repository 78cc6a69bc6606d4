import random

import pytest

from adroute.errors import NoRoute, TooLarge
from adroute.metric import ParameterSet, route_cost
from adroute.oracle import brute_force_optimal, enumerate_simple_paths
from adroute.route_server import RouteQuery
from adroute.topology import NodeKind, Topology

from conftest import HOP_PARAMS, build_chain, build_diamond


def second_enumerator(topology, query):
    """Independent recursive path enumerator used to cross-check the oracle."""
    paths = []

    def walk(node, path):
        if node == query.dst:
            paths.append(tuple(path))
            return
        if node != query.src and not topology.is_transit(node):
            return
        for neighbor, _link in topology.neighbors_out(node):
            if neighbor in path or neighbor in query.excluded_nodes:
                continue
            path.append(neighbor)
            walk(neighbor, path)
            path.pop()

    walk(query.src, [query.src])
    return paths


def random_topology(rng, n_nodes, max_links, bandwidths):
    topo = Topology()
    for _ in range(n_nodes):
        topo.add_node(NodeKind.STANDARD_ROUTER)
    pairs = [(a, b) for a in range(n_nodes) for b in range(n_nodes) if a != b]
    rng.shuffle(pairs)
    for a, b in pairs[:rng.randint(n_nodes, max_links)]:
        if not topo.has_link(a, b):
            topo.add_link(a, b, rng.choice(bandwidths),
                          rng.uniform(0.001, 0.1), rng.uniform(0.001, 0.1),
                          rng.uniform(0, 5))
    return topo


def random_params(rng):
    return ParameterSet(p0=rng.choice([0.0, rng.uniform(0, 500)]),
                        p_delay=rng.uniform(0, 5),
                        p_jitter=rng.uniform(0, 5),
                        p_hop=rng.uniform(0.01, 3),
                        p_money=rng.uniform(0, 2))


def test_single_chain_has_one_path():
    topo = build_chain(4)
    query = RouteQuery(0, 3, HOP_PARAMS)
    cost, route = brute_force_optimal(topo, query)
    assert route.node_sequence() == (0, 1, 2, 3)
    assert cost == 3.0


def test_enumeration_matches_independent_recursive_enumerator():
    rng = random.Random(41)
    for _ in range(120):
        topo = random_topology(rng, rng.randint(3, 7), 14, [10.0, 50.0])
        query = RouteQuery(0, rng.randint(1, topo.node_count() - 1),
                           random_params(rng))
        ours = sorted(enumerate_simple_paths(topo, query))
        theirs = sorted(second_enumerator(topo, query))
        assert ours == theirs


def test_oracle_minimum_matches_exhaustive_recheck():
    rng = random.Random(42)
    for _ in range(60):
        topo = random_topology(rng, rng.randint(4, 8), 14,
                               [5.0, 20.0, 80.0])
        params = random_params(rng)
        query = RouteQuery(0, topo.node_count() - 1, params)
        paths = second_enumerator(topo, query)
        if not paths:
            with pytest.raises(NoRoute):
                brute_force_optimal(topo, query)
            continue
        cost, route = brute_force_optimal(topo, query)
        best = min(
            (route_cost([topo.link(a, b) for a, b in zip(p, p[1:])], params),
             len(p) - 1, p)
            for p in paths)
        assert cost == best[0]
        assert route.node_sequence() == best[2]


def test_disconnected_raises_noroute():
    topo = Topology()
    topo.add_node(NodeKind.STANDARD_ROUTER)
    topo.add_node(NodeKind.STANDARD_ROUTER)
    with pytest.raises(NoRoute):
        brute_force_optimal(topo, RouteQuery(0, 1, HOP_PARAMS))


def test_size_guard():
    topo = build_chain(13)
    with pytest.raises(TooLarge):
        brute_force_optimal(topo, RouteQuery(0, 12, HOP_PARAMS))


def test_hosts_never_appear_as_intermediates():
    topo = build_diamond()
    # Turn the top arm's midpoint into a host; only the bottom arm remains.
    host_mid = Topology()
    host_mid.add_node(NodeKind.STANDARD_ROUTER)
    host_mid.add_node(NodeKind.HOST)
    host_mid.add_node(NodeKind.STANDARD_ROUTER)
    host_mid.add_node(NodeKind.STANDARD_ROUTER)
    for a, b in ((0, 1), (1, 3), (0, 2), (2, 3)):
        host_mid.add_pair(a, b, 100.0, 0.01)
    _, route = brute_force_optimal(host_mid, RouteQuery(0, 3, HOP_PARAMS))
    assert route.node_sequence() == (0, 2, 3)
    # As a destination the host is still reachable.
    _, direct = brute_force_optimal(host_mid, RouteQuery(0, 1, HOP_PARAMS))
    assert direct.node_sequence() == (0, 1)
    assert topo.node_count() == 4
