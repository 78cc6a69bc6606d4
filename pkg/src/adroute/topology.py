"""Network graph: nodes, directed attributed links, and their up/down state.

Node ids are dense 0-based ordinals assigned in creation order.  Links are
directed; a bidirectional connection is two distinct link records.  Pair
operations flip both directions atomically, single-link operations leave the
reverse untouched so acknowledgment paths can stay up while a forward
interface is steered away.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum

from .errors import DuplicateLink, NonPositiveBandwidth, UnknownLink, UnknownNode

NodeId = int


class NodeKind(Enum):
    HOST = "host"
    STANDARD_ROUTER = "router"
    ADAPTIVE_ROUTER = "adaptive_router"
    ROUTE_SERVER = "route_server"


# Kinds allowed as intermediate systems on a forwarding path.  Hosts and
# route servers originate and sink traffic but never carry transit packets.
TRANSIT_KINDS = frozenset({NodeKind.STANDARD_ROUTER, NodeKind.ADAPTIVE_ROUTER})


@dataclass
class Link:
    src: NodeId
    dst: NodeId
    bandwidth: float  # kB/s, > 0
    delay: float  # seconds, >= 0
    nominal_delay: float  # seconds, >= 0
    monetary_cost: float = 0.0
    up: bool = True

    @property
    def key(self) -> tuple[NodeId, NodeId]:
        return (self.src, self.dst)


class Topology:
    """Mutable directed graph owned by the simulation engine."""

    def __init__(self):
        self._kinds: list[NodeKind] = []
        self._links: dict[tuple[NodeId, NodeId], Link] = {}
        self._out: dict[NodeId, list[NodeId]] = {}

    # -- nodes ------------------------------------------------------------

    def add_node(self, kind: NodeKind) -> NodeId:
        node = len(self._kinds)
        self._kinds.append(kind)
        self._out[node] = []
        return node

    def node_count(self) -> int:
        return len(self._kinds)

    def node_ids(self) -> range:
        return range(len(self._kinds))

    def has_node(self, node: NodeId) -> bool:
        return 0 <= node < len(self._kinds)

    def node_kind(self, node: NodeId) -> NodeKind:
        self._require_node(node)
        return self._kinds[node]

    def is_transit(self, node: NodeId) -> bool:
        return self._kinds[node] in TRANSIT_KINDS

    def _require_node(self, node: NodeId):
        if not self.has_node(node):
            raise UnknownNode(f"node {node} does not exist")

    # -- links ------------------------------------------------------------

    def add_link(
        self,
        src: NodeId,
        dst: NodeId,
        bandwidth: float,
        delay: float,
        nominal_delay: float | None = None,
        monetary_cost: float = 0.0,
    ) -> Link:
        self._require_node(src)
        self._require_node(dst)
        if src == dst:
            raise DuplicateLink(f"self-link {src}->{dst} not allowed")
        if (src, dst) in self._links:
            raise DuplicateLink(f"link {src}->{dst} already exists")
        if bandwidth <= 0:
            raise NonPositiveBandwidth(f"link {src}->{dst}: bandwidth {bandwidth}")
        if nominal_delay is None:
            nominal_delay = delay
        if delay < 0 or nominal_delay < 0 or monetary_cost < 0:
            raise ValueError(f"link {src}->{dst}: negative attribute")
        link = Link(src, dst, bandwidth, delay, nominal_delay, monetary_cost)
        self._links[(src, dst)] = link
        bisect.insort(self._out[src], dst)
        return link

    def add_pair(self, a: NodeId, b: NodeId, bandwidth, delay,
                 nominal_delay=None, monetary_cost=0.0) -> tuple[Link, Link]:
        """Add both directed links with identical attributes."""
        fwd = self.add_link(a, b, bandwidth, delay, nominal_delay, monetary_cost)
        rev = self.add_link(b, a, bandwidth, delay, nominal_delay, monetary_cost)
        return fwd, rev

    def has_link(self, src: NodeId, dst: NodeId) -> bool:
        return (src, dst) in self._links

    def link(self, src: NodeId, dst: NodeId) -> Link:
        try:
            return self._links[(src, dst)]
        except KeyError:
            raise UnknownLink(f"link {src}->{dst} does not exist") from None

    def links(self):
        """All links in creation order."""
        return list(self._links.values())

    def set_link_state(self, src: NodeId, dst: NodeId, up: bool):
        """Flip one direction only; the reverse link is untouched."""
        self.link(src, dst).up = up

    def set_pair_state(self, a: NodeId, b: NodeId, up: bool):
        """Flip both directions atomically; both links must exist first."""
        fwd = self.link(a, b)
        rev = self.link(b, a)
        fwd.up = up
        rev.up = up

    def neighbors_out(self, node: NodeId) -> list[tuple[NodeId, Link]]:
        """Up outgoing links, ascending destination id."""
        self._require_node(node)
        result = []
        for dst in self._out[node]:
            link = self._links[(node, dst)]
            if link.up:
                result.append((dst, link))
        return result
