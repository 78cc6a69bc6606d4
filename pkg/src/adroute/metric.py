"""Hybrid route metric: per-hop costs plus an end-to-end bandwidth term.

The total cost of a path is  p0 / bottleneck_bandwidth + sum of per-hop
costs.  The bandwidth weight applies once to the end-to-end bottleneck,
never per hop.  Per-hop cost is a linear combination of delay, absolute
delay deviation, hop count, and monetary cost.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import EmptyRoute, LinkDown
from .topology import Link, NodeId


@dataclass(frozen=True)
class ParameterSet:
    """Nonnegative weights; at least one must be positive.

    p0 is in kB so that p0 / bandwidth compares like seconds when p_delay
    weights seconds.
    """

    p0: float = 0.0
    p_delay: float = 0.0
    p_jitter: float = 0.0
    p_hop: float = 0.0
    p_money: float = 0.0

    def __post_init__(self):
        weights = (self.p0, self.p_delay, self.p_jitter, self.p_hop, self.p_money)
        if any(w < 0 for w in weights):
            raise ValueError("all metric weights must be nonnegative")
        if all(w == 0 for w in weights):
            raise ValueError("an all-zero metric cannot rank routes")

    def scaled(self, c: float) -> "ParameterSet":
        return replace(
            self,
            p0=self.p0 * c,
            p_delay=self.p_delay * c,
            p_jitter=self.p_jitter * c,
            p_hop=self.p_hop * c,
            p_money=self.p_money * c,
        )


def hop_cost(link: Link, params: ParameterSet) -> float:
    """Cost contribution of one traversed link.

    Delay deviation enters as an absolute value so opposite deviations on a
    path cannot cancel each other out.
    """
    if not link.up:
        raise LinkDown(f"link {link.src}->{link.dst} is down")
    return (
        params.p_delay * link.delay
        + params.p_jitter * abs(link.delay - link.nominal_delay)
        + params.p_hop
        + params.p_money * link.monetary_cost
    )


def effective_bandwidth(route_links) -> float:
    """Minimum bandwidth over the traversed links."""
    if not route_links:
        raise EmptyRoute("route has no links")
    return min(link.bandwidth for link in route_links)


def route_cost(route_links, params: ParameterSet) -> float:
    """Total hybrid cost of an ordered path of up links.

    This is the canonical evaluation order: the bandwidth term first, then
    hop costs accumulated left to right.  The optimizer and the brute-force
    reference both call this function so costs agree bit for bit.
    """
    if not route_links:
        raise EmptyRoute("route has no links")
    total = params.p0 / effective_bandwidth(route_links)
    for link in route_links:
        total += hop_cost(link, params)
    return total


@dataclass(frozen=True)
class Route:
    """A discovered simple path with its cached cost and bottleneck."""

    hops: tuple[NodeId, ...]  # intermediate systems, endpoints excluded
    links: tuple[Link, ...]
    total_cost: float
    bottleneck_bandwidth: float

    @property
    def src(self) -> NodeId:
        return self.links[0].src

    @property
    def dst(self) -> NodeId:
        return self.links[-1].dst

    def node_sequence(self) -> tuple[NodeId, ...]:
        return (self.links[0].src,) + tuple(link.dst for link in self.links)

    def contains_node(self, node: NodeId) -> bool:
        return node in self.node_sequence()

    def contains_link(self, key: tuple[NodeId, NodeId]) -> bool:
        return any(link.key == key for link in self.links)


def make_route(route_links, params: ParameterSet) -> Route:
    """Build a Route, computing cost and bottleneck from the links."""
    links = tuple(route_links)
    if not links:
        raise EmptyRoute("route has no links")
    for prev, nxt in zip(links, links[1:]):
        if prev.dst != nxt.src:
            raise ValueError("links do not form a connected path")
    seq = (links[0].src,) + tuple(link.dst for link in links)
    if len(set(seq)) != len(seq):
        raise ValueError("path repeats a node")
    return Route(
        hops=seq[1:-1],
        links=links,
        total_cost=route_cost(links, params),
        bottleneck_bandwidth=effective_bandwidth(links),
    )
