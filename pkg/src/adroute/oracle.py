"""Brute-force reference implementations, exported for tests only.

The path oracle enumerates every simple path with an explicit stack and
prices each one with the same canonical cost evaluation as the optimizer,
so agreement is exact rather than approximate.
"""
from __future__ import annotations

from .errors import NoRoute, TooLarge
from .metric import make_route, Route
from .route_server import RouteQuery
from .topology import NodeId, Topology

MAX_ORACLE_NODES = 12


def enumerate_simple_paths(topology: Topology, query: RouteQuery,
                           excluded_links=frozenset()):
    """Yield every simple path src -> dst over up links, as node tuples.

    Interior nodes must be transit-capable; excluded nodes and links are
    skipped entirely.
    """
    src, dst = query.src, query.dst
    stack = [(src, (src,))]
    while stack:
        node, path = stack.pop()
        # Reverse neighbor order so the stack pops ascending ids first;
        # enumeration order is then deterministic (and depth-first).
        for neighbor, link in reversed(topology.neighbors_out(node)):
            if link.key in excluded_links:
                continue
            if neighbor in query.excluded_nodes or neighbor in path:
                continue
            if neighbor == dst:
                yield path + (neighbor,)
                continue
            if not topology.is_transit(neighbor):
                continue
            stack.append((neighbor, path + (neighbor,)))


def brute_force_optimal(topology: Topology, query: RouteQuery,
                        excluded_links=frozenset()) -> tuple[float, Route]:
    """Exact global minimum by exhaustive enumeration.

    Ties break the same way as the optimizer: fewer hops first, then the
    lexicographically smallest node sequence.
    """
    if topology.node_count() > MAX_ORACLE_NODES:
        raise TooLarge(f"oracle limited to {MAX_ORACLE_NODES} nodes")
    if query.src in query.excluded_nodes or query.dst in query.excluded_nodes:
        raise NoRoute("endpoint excluded")
    best_key = None
    best_links = None
    for path in enumerate_simple_paths(topology, query, excluded_links):
        links = [topology.link(a, b) for a, b in zip(path, path[1:])]
        route = make_route(links, query.params)
        key = (route.total_cost, len(links), path)
        if best_key is None or key < best_key:
            best_key = key
            best_links = links
    if best_links is None:
        raise NoRoute(f"no usable path from {query.src} to {query.dst}")
    route = make_route(best_links, query.params)
    return route.total_cost, route
