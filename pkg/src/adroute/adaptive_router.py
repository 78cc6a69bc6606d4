"""Per-flow forwarding tables, forwarding decisions, and the DV baseline.

An adaptive router forwards labeled packets on the interface pinned in its
flow table, falling back to distance-vector next hops for everything else.
A pinned interface that has gone down makes the router drop the packet,
flag a local failure, and (once per flow and failed link) ask its route
server for an alternative.  Unauthorized table updates are refused.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .anycast import Address
from .topology import NodeId, NodeKind, Topology

# Hop counts at or above this value mean unreachable (count-to-infinity cap).
DV_INFINITY = 16


@dataclass(frozen=True)
class FlowKey:
    """The packet-stream identity: the (label, src, dst) triplet."""

    label: int
    src: Address
    dst: Address


@dataclass(frozen=True)
class FlowEntry:
    key: FlowKey
    out_link: tuple[NodeId, NodeId]
    installed_by: NodeId
    installed_at: float


@dataclass(frozen=True)
class FlowUpdate:
    """Control-plane instruction to bind a flow key to an interface."""

    key: FlowKey
    router: NodeId
    out_link: tuple[NodeId, NodeId]
    issuer: NodeId


class ForwardKind(Enum):
    FORWARD = "forward"
    DELIVER = "deliver"
    DROP = "drop"


@dataclass(frozen=True)
class ForwardAction:
    kind: ForwardKind
    out_link: tuple[NodeId, NodeId] | None = None
    reason: str | None = None
    pinned: bool = False
    local_failure: tuple[NodeId, NodeId] | None = None
    request_reroute: bool = False


@dataclass
class RouterState:
    """Forwarding state of one node; standard routers just never get entries."""

    node: NodeId
    kind: NodeKind
    flow_table: dict[FlowKey, FlowEntry] = field(default_factory=dict)
    reroute_sent: set[tuple[FlowKey, tuple[NodeId, NodeId]]] = field(default_factory=set)


def apply_flow_update(router: RouterState, update: FlowUpdate,
                      issuer_authorized: bool, now: float) -> bool:
    """Upsert the entry if the issuer is authorized, else refuse.

    Returns True when applied.  Refusal leaves the table untouched; the
    caller records it as a security event.
    """
    if update.router != router.node:
        raise ValueError("update addressed to a different router")
    if not issuer_authorized:
        return False
    router.flow_table[update.key] = FlowEntry(
        key=update.key,
        out_link=update.out_link,
        installed_by=update.issuer,
        installed_at=now,
    )
    return True


def decide_forward(router: RouterState, key: FlowKey | None, route_dst: NodeId,
                   topology: Topology, dv_table: dict[NodeId, tuple[int, NodeId | None]],
                   ) -> ForwardAction:
    """Choose the outgoing interface for one packet at this router.

    Lookup work per packet is one flow-table probe plus one DV probe,
    independent of any exclusion state elsewhere in the system.
    """
    if route_dst == router.node:
        return ForwardAction(ForwardKind.DELIVER)

    if key is not None:
        entry = router.flow_table.get(key)
        if entry is not None:
            link = topology.link(*entry.out_link)
            if link.up:
                return ForwardAction(ForwardKind.FORWARD, out_link=entry.out_link,
                                     pinned=True)
            want_reroute = (key, entry.out_link) not in router.reroute_sent
            return ForwardAction(
                ForwardKind.DROP,
                reason="pinned_interface_down",
                local_failure=entry.out_link,
                request_reroute=want_reroute,
            )

    dv_entry = dv_table.get(route_dst)
    if dv_entry is None or dv_entry[0] >= DV_INFINITY or dv_entry[1] is None:
        return ForwardAction(ForwardKind.DROP, reason="no_route")
    next_hop = dv_entry[1]
    link = topology.link(router.node, next_hop)
    if not link.up:
        return ForwardAction(ForwardKind.DROP, reason="link_down")
    return ForwardAction(ForwardKind.FORWARD, out_link=(router.node, next_hop))


# -- distance vector -----------------------------------------------------

DvEntry = tuple[int, NodeId | None]  # (hop_distance, next_hop)
DvTables = dict[NodeId, dict[NodeId, DvEntry]]


def _initial_tables(topology: Topology) -> DvTables:
    tables: DvTables = {}
    for node in topology.node_ids():
        tables[node] = {node: (0, None)}
    return tables


def dv_round(tables: DvTables, topology: Topology) -> tuple[DvTables, bool]:
    """One synchronous exchange: every node recomputes from neighbor tables.

    A next hop must be the destination itself or a transit-capable node;
    hosts and route servers never carry through traffic.
    """
    new_tables: DvTables = {}
    changed = False
    for node in topology.node_ids():
        new_table: dict[NodeId, DvEntry] = {node: (0, None)}
        for dst in topology.node_ids():
            if dst == node:
                continue
            best: DvEntry | None = None
            for neighbor, _link in topology.neighbors_out(node):
                if neighbor != dst and not topology.is_transit(neighbor):
                    continue
                via = tables[neighbor].get(dst, (DV_INFINITY, None))[0]
                dist = min(DV_INFINITY, 1 + via)
                if best is None or dist < best[0]:
                    best = (dist, neighbor if dist < DV_INFINITY else None)
            if best is None:
                best = (DV_INFINITY, None)
            new_table[dst] = best
            if tables[node].get(dst) != best:
                changed = True
        new_tables[node] = new_table
    return new_tables, changed


def dv_step(topology: Topology, tables: DvTables | None = None,
            max_rounds: int = 1000) -> tuple[DvTables, int]:
    """Run synchronous rounds to fixpoint; returns (tables, changing rounds)."""
    if tables is None:
        tables = _initial_tables(topology)
    rounds = 0
    for _ in range(max_rounds):
        tables, changed = dv_round(tables, topology)
        if not changed:
            return tables, rounds
        rounds += 1
    raise AssertionError("distance vector failed to converge")
