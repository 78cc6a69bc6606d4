import pytest

from adroute.errors import (
    DuplicateLink,
    NonPositiveBandwidth,
    UnknownLink,
    UnknownNode,
)
from adroute.topology import NodeKind, Topology


def test_first_node_gets_ordinal_zero():
    topo = Topology()
    assert topo.add_node(NodeKind.HOST) == 0


def test_node_ids_are_dense_and_distinct():
    topo = Topology()
    ids = [topo.add_node(NodeKind.STANDARD_ROUTER) for _ in range(5)]
    assert ids == [0, 1, 2, 3, 4]


def test_node_kind_round_trip():
    topo = Topology()
    node = topo.add_node(NodeKind.ROUTE_SERVER)
    assert topo.node_kind(node) is NodeKind.ROUTE_SERVER


def test_add_link_defaults_up_with_zero_jitter():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    link = topo.add_link(a, b, 100.0, 0.010, 0.010, 1.0)
    assert link.up
    assert link.delay - link.nominal_delay == 0.0


def test_duplicate_link_rejected():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    topo.add_link(a, b, 100.0, 0.01)
    with pytest.raises(DuplicateLink):
        topo.add_link(a, b, 50.0, 0.02)


def test_reverse_direction_is_a_distinct_link():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    topo.add_link(a, b, 100.0, 0.01)
    rev = topo.add_link(b, a, 10.0, 0.05)
    assert topo.link(a, b).bandwidth == 100.0
    assert rev.bandwidth == 10.0


def test_zero_bandwidth_rejected():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    with pytest.raises(NonPositiveBandwidth):
        topo.add_link(a, b, 0.0, 0.01)


def test_unknown_endpoint_rejected():
    topo = Topology()
    a = topo.add_node(NodeKind.HOST)
    with pytest.raises(UnknownNode):
        topo.add_link(a, 7, 100.0, 0.01)


def test_pair_state_downs_both_directions():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    topo.add_pair(a, b, 100.0, 0.01)
    topo.set_pair_state(a, b, False)
    assert not topo.link(a, b).up
    assert not topo.link(b, a).up


def test_pair_state_is_idempotent_and_invertible():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    topo.add_pair(a, b, 100.0, 0.01)
    topo.set_pair_state(a, b, False)
    topo.set_pair_state(a, b, False)
    assert not topo.link(a, b).up
    topo.set_pair_state(a, b, True)
    assert topo.link(a, b).up and topo.link(b, a).up


def test_pair_state_requires_both_links():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    topo.add_link(a, b, 100.0, 0.01)
    with pytest.raises(UnknownLink):
        topo.set_pair_state(a, b, False)


def test_single_link_state_leaves_reverse_up():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    topo.add_pair(a, b, 100.0, 0.01)
    topo.set_link_state(a, b, False)
    assert not topo.link(a, b).up
    assert topo.link(b, a).up  # acknowledgment path survives


def test_single_link_state_on_missing_link():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    with pytest.raises(UnknownLink):
        topo.set_link_state(a, b, False)


def test_down_then_up_preserves_attributes():
    topo = Topology()
    a, b = topo.add_node(NodeKind.HOST), topo.add_node(NodeKind.HOST)
    topo.add_link(a, b, 123.0, 0.007, 0.006, 2.5)
    topo.set_link_state(a, b, False)
    topo.set_link_state(a, b, True)
    link = topo.link(a, b)
    assert (link.bandwidth, link.delay, link.nominal_delay,
            link.monetary_cost) == (123.0, 0.007, 0.006, 2.5)


def test_neighbors_out_empty_for_isolated_node():
    topo = Topology()
    n = topo.add_node(NodeKind.HOST)
    assert topo.neighbors_out(n) == []


def test_neighbors_out_sorted_by_destination():
    topo = Topology()
    for _ in range(4):
        topo.add_node(NodeKind.STANDARD_ROUTER)
    topo.add_link(0, 3, 100.0, 0.01)
    topo.add_link(0, 1, 100.0, 0.01)
    assert [dst for dst, _ in topo.neighbors_out(0)] == [1, 3]


def test_neighbors_out_skips_down_links():
    topo = Topology()
    for _ in range(4):
        topo.add_node(NodeKind.STANDARD_ROUTER)
    topo.add_link(0, 1, 100.0, 0.01)
    topo.add_link(0, 3, 100.0, 0.01)
    topo.set_link_state(0, 3, False)
    assert [dst for dst, _ in topo.neighbors_out(0)] == [1]
