"""Service addressing: unicast and anycast addresses, groups, exclusions.

An anycast address names a service; resolution picks the nearest live group
member by hop count, skipping members whose unicast address sits in the
flow's exclusion set.  Exclusion state is owned by the source host and
consulted at resolution time; group members need no support of their own.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .errors import (
    AllMembersExcluded,
    NoReachableMember,
    NotExcluded,
    UnknownMember,
    WouldExcludeAll,
)
from .topology import NodeId, Topology


class AddressKind(Enum):
    UNICAST = "unicast"
    ANYCAST = "anycast"


@dataclass(frozen=True, order=True)
class Address:
    """Network prefix plus a host or service identifier suffix."""

    prefix: str
    suffix: str
    kind: AddressKind

    def __str__(self):
        return f"{self.prefix}:{self.suffix}"


def unicast_address(name: str, prefix: str = "net0") -> Address:
    return Address(prefix, name, AddressKind.UNICAST)


def anycast_address(service: str, prefix: str = "net0") -> Address:
    return Address(prefix, "svc-" + service, AddressKind.ANYCAST)


@dataclass(frozen=True)
class AnycastGroup:
    """Service address and its member set.

    Members are (unicast address, attachment router) pairs, kept sorted by
    address for deterministic iteration.
    """

    address: Address
    members: tuple[tuple[Address, NodeId], ...]

    def __post_init__(self):
        if self.address.kind is not AddressKind.ANYCAST:
            raise ValueError("group address must be anycast")
        if not self.members:
            raise ValueError("anycast group needs at least one member")
        addresses = [addr for addr, _ in self.members]
        if len(set(addresses)) != len(addresses):
            raise ValueError("group members must have distinct unicast addresses")
        object.__setattr__(self, "members", tuple(sorted(self.members)))

    def member_addresses(self) -> tuple[Address, ...]:
        return tuple(addr for addr, _ in self.members)

    def has_member(self, address: Address) -> bool:
        return any(addr == address for addr, _ in self.members)


def add_exclusion(group: AnycastGroup, excluded: frozenset[Address],
                  member: Address) -> frozenset[Address]:
    """Exclusions identify members by unicast address, never path position."""
    if not group.has_member(member):
        raise UnknownMember(f"{member} is not a member of {group.address}")
    new = excluded | {member}
    if len(new) >= len(group.members):
        raise WouldExcludeAll("cannot exclude every member of the group")
    return new


def remove_exclusion(excluded: frozenset[Address], member: Address) -> frozenset[Address]:
    if member not in excluded:
        raise NotExcluded(f"{member} is not currently excluded")
    return excluded - {member}


def hop_distances(topology: Topology, source: NodeId) -> dict[NodeId, int]:
    """BFS hop counts over up links; only transit nodes carry traffic onward."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        if node != source and not topology.is_transit(node):
            continue
        for neighbor, _link in topology.neighbors_out(node):
            if neighbor not in dist:
                dist[neighbor] = dist[node] + 1
                queue.append(neighbor)
    return dist


def resolve(group: AnycastGroup, source: NodeId,
            excluded: frozenset[Address], topology: Topology) -> Address:
    """Pick the nearest non-excluded member; ties go to the lowest address.

    Distance is hop count from the source to the member's attachment
    router.  A member behind a closed valve is never chosen, whatever its
    distance.
    """
    candidates = [(addr, router) for addr, router in group.members
                  if addr not in excluded]
    if not candidates:
        raise AllMembersExcluded(f"every member of {group.address} is excluded")
    dist = hop_distances(topology, source)
    best = None
    for addr, router in candidates:  # members sorted by address
        d = dist.get(router)
        if d is None:
            continue
        if best is None or d < best[0]:
            best = (d, addr)
    if best is None:
        raise NoReachableMember(f"no reachable member of {group.address} from node {source}")
    return best[1]
