import random

import pytest

from adroute.errors import NoRoute
from adroute.metric import ParameterSet
from adroute.oracle import brute_force_optimal
from adroute.route_server import (
    KeepAliveState,
    RouteQuery,
    RouteServerConfig,
    find_optimal_route,
    keepalive_tick,
)
from adroute.topology import NodeKind, Topology

from conftest import HOP_PARAMS, build_chain
from test_oracle import random_params, random_topology


class TestFindOptimalRoute:
    def test_unique_path_on_chain(self):
        topo = build_chain(5)
        route = find_optimal_route(topo, RouteQuery(0, 4, HOP_PARAMS))
        assert route.node_sequence() == (0, 1, 2, 3, 4)
        assert route.total_cost == 4.0

    def test_diamond_tradeoff_follows_bandwidth_weight(self):
        topo = Topology()
        for _ in range(5):
            topo.add_node(NodeKind.STANDARD_ROUTER)
        # Long wide arm 0-1-2-4, short narrow arm 0-3 ... 3-4.
        topo.add_pair(0, 1, 100.0, 0.01)
        topo.add_pair(1, 2, 100.0, 0.01)
        topo.add_pair(2, 4, 100.0, 0.01)
        topo.add_pair(0, 3, 10.0, 0.01)
        topo.add_pair(3, 4, 10.0, 0.01)
        short = find_optimal_route(topo, RouteQuery(0, 4, ParameterSet(p_hop=1.0)))
        assert short.node_sequence() == (0, 3, 4)
        wide = find_optimal_route(
            topo, RouteQuery(0, 4, ParameterSet(p0=1000.0, p_hop=1.0)))
        assert wide.node_sequence() == (0, 1, 2, 4)

    def test_matches_oracle_on_random_graphs(self):
        rng = random.Random(99)
        agreements = 0
        for _ in range(80):
            topo = random_topology(rng, rng.randint(4, 8), 14, [10.0, 40.0])
            query = RouteQuery(0, topo.node_count() - 1, random_params(rng))
            try:
                expect_cost, expect_route = brute_force_optimal(topo, query)
            except NoRoute:
                with pytest.raises(NoRoute):
                    find_optimal_route(topo, query)
                continue
            route = find_optimal_route(topo, query)
            assert route.total_cost == expect_cost
            assert route.node_sequence() == expect_route.node_sequence()
            agreements += 1
        assert agreements > 20

    def test_excluded_nodes_never_appear(self):
        topo = build_chain(4)
        topo.add_pair(0, 3, 100.0, 0.2)
        route = find_optimal_route(
            topo, RouteQuery(0, 3, HOP_PARAMS, excluded_nodes=frozenset({1})))
        assert route.node_sequence() == (0, 3)

    def test_excluded_link_forces_detour(self):
        topo = build_chain(3)
        topo.add_pair(0, 2, 100.0, 0.2)
        route = find_optimal_route(topo, RouteQuery(0, 2, HOP_PARAMS),
                                   excluded_links=frozenset({(0, 2)}))
        assert route.node_sequence() == (0, 1, 2)

    def test_down_links_never_appear(self):
        topo = build_chain(3)
        topo.add_pair(0, 2, 100.0, 0.2)
        topo.set_pair_state(0, 2, False)
        route = find_optimal_route(topo, RouteQuery(0, 2, HOP_PARAMS))
        assert route.node_sequence() == (0, 1, 2)

    def test_disconnection_raises(self):
        topo = build_chain(3)
        topo.set_pair_state(0, 1, False)
        with pytest.raises(NoRoute):
            find_optimal_route(topo, RouteQuery(0, 2, HOP_PARAMS))

    def test_identical_queries_return_identical_routes(self):
        rng = random.Random(3)
        topo = random_topology(rng, 7, 14, [10.0, 40.0, 90.0])
        query = RouteQuery(0, 6, random_params(rng))
        try:
            first = find_optimal_route(topo, query)
        except NoRoute:
            pytest.skip("disconnected draw")
        for _ in range(5):
            again = find_optimal_route(topo, query)
            assert again.node_sequence() == first.node_sequence()
            assert again.total_cost == first.total_cost

    def test_tie_breaks_prefer_fewer_hops_then_lowest_sequence(self):
        topo = Topology()
        for _ in range(4):
            topo.add_node(NodeKind.STANDARD_ROUTER)
        # Two equal-cost two-hop paths (via 1 or via 2) plus no direct link.
        topo.add_pair(0, 1, 100.0, 0.01)
        topo.add_pair(1, 3, 100.0, 0.01)
        topo.add_pair(0, 2, 100.0, 0.01)
        topo.add_pair(2, 3, 100.0, 0.01)
        route = find_optimal_route(topo, RouteQuery(0, 3, HOP_PARAMS))
        assert route.node_sequence() == (0, 1, 3)

    def test_query_validation(self):
        with pytest.raises(ValueError):
            RouteQuery(0, 0, HOP_PARAMS)
        with pytest.raises(ValueError):
            RouteQuery(0, 1, HOP_PARAMS, excluded_nodes=frozenset({0}))


class TestRouteServerConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            RouteServerConfig(True, keepalive_interval=0.0)
        with pytest.raises(ValueError):
            RouteServerConfig(True, keepalive_threshold=0)
        with pytest.raises(ValueError):
            RouteServerConfig(True, response_latency=-1.0)


class TestKeepAlive:
    def fresh(self, threshold=3):
        return KeepAliveState(router=5, interval=1.0, threshold=threshold)

    def test_threshold_crossing_emits_dead(self):
        state = self.fresh()
        state, _ = keepalive_tick(state, False, 1.0)
        state, _ = keepalive_tick(state, False, 2.0)
        assert state.missed == 2 and not state.presumed_dead
        state, events = keepalive_tick(state, False, 3.0)
        assert state.presumed_dead
        assert events == ["router_presumed_dead"]

    def test_response_resets_missed(self):
        state = self.fresh()
        state, _ = keepalive_tick(state, False, 1.0)
        state, _ = keepalive_tick(state, False, 2.0)
        state, events = keepalive_tick(state, True, 3.0)
        assert state.missed == 0 and events == [] and state.last_seen == 3.0

    def test_dead_router_resurrects(self):
        state = self.fresh(threshold=1)
        state, events = keepalive_tick(state, False, 1.0)
        assert events == ["router_presumed_dead"]
        state, events = keepalive_tick(state, True, 2.0)
        assert events == ["router_recovered"]
        assert state.missed == 0

    def test_missed_saturates_without_reemitting(self):
        state = self.fresh(threshold=2)
        state, _ = keepalive_tick(state, False, 1.0)
        state, events = keepalive_tick(state, False, 2.0)
        assert events == ["router_presumed_dead"]
        state, events = keepalive_tick(state, False, 3.0)
        assert state.missed == 2 and events == []

    def test_detection_latency_bounds(self):
        # A router silenced at time t is declared dead between
        # threshold*interval and (threshold+1)*interval later, for any
        # silence instant strictly between two probe cycles.
        interval, threshold = 1.0, 3
        for silence_at in [1.05, 1.4, 1.97, 5.3]:
            state = KeepAliveState(router=1, interval=interval,
                                   threshold=threshold)
            dead_at = None
            tick = 1.0
            while dead_at is None and tick < 30.0:
                responded = tick <= silence_at  # echo of the previous probe
                state, events = keepalive_tick(state, responded, tick)
                if "router_presumed_dead" in events:
                    dead_at = tick
                tick += interval
            latency = dead_at - silence_at
            assert threshold * interval <= latency <= (threshold + 1) * interval
