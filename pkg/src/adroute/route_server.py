"""Route discovery under the hybrid metric, plus keep-alive bookkeeping.

The cost of a path mixes a bottleneck-bandwidth term with additive per-hop
terms, so a single shortest-path pass is not enough.  The search enumerates
the distinct bandwidth values present in the topology; for each threshold it
restricts to links at least that fast, runs a least-additive-cost search,
prices the found path exactly, and keeps the global best.  The optimal
path's bottleneck is itself one of the thresholds, which makes the result
exact.  Ties break toward fewer hops, then the lexicographically smallest
node sequence.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .anycast import Address
from .errors import NoRoute
from .metric import ParameterSet, Route, hop_cost, make_route
from .topology import NodeId, Topology


@dataclass(frozen=True)
class RouteQuery:
    src: NodeId
    dst: NodeId
    params: ParameterSet
    excluded_nodes: frozenset[NodeId] = frozenset()
    excluded_addresses: frozenset[Address] = frozenset()

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("query src and dst must differ")
        if self.src in self.excluded_nodes or self.dst in self.excluded_nodes:
            raise ValueError("query endpoints cannot be excluded")


@dataclass(frozen=True)
class RouteServerConfig:
    authorized: bool
    keepalive_interval: float = 1.0
    keepalive_threshold: int = 3
    response_latency: float = 0.1

    def __post_init__(self):
        if self.keepalive_interval <= 0:
            raise ValueError("keepalive_interval must be positive")
        if self.keepalive_threshold < 1:
            raise ValueError("keepalive_threshold must be at least 1")
        if self.response_latency < 0:
            raise ValueError("response_latency must be nonnegative")


def _usable_links(topology: Topology, query: RouteQuery,
                  excluded_links: frozenset[tuple[NodeId, NodeId]]):
    links = []
    for link in topology.links():
        if not link.up:
            continue
        if link.key in excluded_links:
            continue
        if link.src in query.excluded_nodes or link.dst in query.excluded_nodes:
            continue
        links.append(link)
    return links


def _cheapest_additive_path(topology: Topology, query: RouteQuery,
                            usable: set[tuple[NodeId, NodeId]],
                            min_bandwidth: float):
    """Dijkstra keyed on (additive cost, hops, node sequence).

    The composite key increases strictly along any edge extension, so the
    first time the destination pops it carries the tie-break-minimal simple
    path among all cheapest ones.
    """
    src, dst = query.src, query.dst
    start = (0.0, 0, (src,))
    heap = [start]
    finalized: set[NodeId] = set()
    while heap:
        cost, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node in finalized:
            continue
        finalized.add(node)
        if node == dst:
            return path
        if node != src and not topology.is_transit(node):
            continue
        for neighbor, link in topology.neighbors_out(node):
            if link.key not in usable or link.bandwidth < min_bandwidth:
                continue
            if neighbor in finalized or neighbor in path:
                continue
            if neighbor != dst and not topology.is_transit(neighbor):
                continue
            heapq.heappush(
                heap,
                (cost + hop_cost(link, query.params), hops + 1, path + (neighbor,)),
            )
    return None


def find_optimal_route(topology: Topology, query: RouteQuery,
                       excluded_links: frozenset[tuple[NodeId, NodeId]] = frozenset(),
                       ) -> Route:
    """Minimum-hybrid-cost simple path between the query endpoints.

    Raises NoRoute when the endpoints are disconnected under the exclusions.
    """
    links = _usable_links(topology, query, excluded_links)
    usable = {link.key for link in links}
    thresholds = sorted({link.bandwidth for link in links})
    best_key = None
    best_links = None
    for threshold in thresholds:
        path = _cheapest_additive_path(topology, query, usable, threshold)
        if path is None:
            continue
        path_links = [topology.link(a, b) for a, b in zip(path, path[1:])]
        route = make_route(path_links, query.params)
        key = (route.total_cost, len(route.links), route.node_sequence())
        if best_key is None or key < best_key:
            best_key = key
            best_links = path_links
    if best_links is None:
        raise NoRoute(f"no usable path from {query.src} to {query.dst}")
    return make_route(best_links, query.params)


# -- keep-alive ------------------------------------------------------------


@dataclass(frozen=True)
class KeepAliveState:
    router: NodeId
    interval: float
    threshold: int
    missed: int = 0
    last_seen: float = 0.0

    @property
    def presumed_dead(self) -> bool:
        return self.missed >= self.threshold


def keepalive_tick(state: KeepAliveState, responded: bool,
                   now: float) -> tuple[KeepAliveState, list[str]]:
    """Account one probe cycle; returns the new state and emitted events.

    A response resets the missed count (emitting "router_recovered" when the
    router was presumed dead); silence increments it, saturating at the
    threshold, and crossing the threshold emits "router_presumed_dead".
    """
    events: list[str] = []
    if responded:
        if state.presumed_dead:
            events.append("router_recovered")
        new = KeepAliveState(state.router, state.interval, state.threshold,
                             missed=0, last_seen=now)
    else:
        missed = min(state.threshold, state.missed + 1)
        if missed == state.threshold and state.missed < state.threshold:
            events.append("router_presumed_dead")
        new = KeepAliveState(state.router, state.interval, state.threshold,
                             missed=missed, last_seen=state.last_seen)
    return new, events
