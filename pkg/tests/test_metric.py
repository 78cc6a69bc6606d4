import random

import pytest

from adroute.errors import EmptyRoute, LinkDown
from adroute.metric import (
    ParameterSet,
    effective_bandwidth,
    hop_cost,
    make_route,
    route_cost,
)
from adroute.topology import Link


def link(bandwidth=100.0, delay=0.01, nominal=None, money=0.0, up=True,
         src=0, dst=1):
    return Link(src, dst, bandwidth, delay,
                delay if nominal is None else nominal, money, up)


def chain_links(*bandwidths):
    return [link(bandwidth=bw, src=i, dst=i + 1)
            for i, bw in enumerate(bandwidths)]


class TestParameterSet:
    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            ParameterSet(p_delay=-1.0)

    def test_rejects_all_zero(self):
        with pytest.raises(ValueError):
            ParameterSet()

    def test_accepts_single_positive(self):
        assert ParameterSet(p_hop=1.0).p_hop == 1.0


class TestHopCost:
    def test_pure_hop_count(self):
        assert hop_cost(link(), ParameterSet(p_hop=1.0)) == 1.0

    def test_identity_delay_weight(self):
        assert hop_cost(link(delay=0.010), ParameterSet(p_delay=1.0)) == 0.010

    def test_hand_evaluated_linear_form(self):
        params = ParameterSet(p_delay=2.0, p_jitter=1.0, p_hop=1.0, p_money=0.5)
        value = hop_cost(link(delay=0.02, nominal=0.01, money=4.0), params)
        assert value == pytest.approx(2 * 0.02 + 1 * 0.01 + 1 + 0.5 * 4, abs=1e-12)

    def test_jitter_uses_absolute_deviation(self):
        params = ParameterSet(p_jitter=1.0)
        early = hop_cost(link(delay=0.005, nominal=0.010), params)
        late = hop_cost(link(delay=0.015, nominal=0.010), params)
        assert early == pytest.approx(0.005) and late == pytest.approx(0.005)

    def test_down_link_rejected(self):
        with pytest.raises(LinkDown):
            hop_cost(link(up=False), ParameterSet(p_hop=1.0))


class TestEffectiveBandwidth:
    def test_minimum_over_links(self):
        assert effective_bandwidth(chain_links(100.0, 5.0, 20.0)) == 5.0

    def test_singleton(self):
        assert effective_bandwidth(chain_links(42.0)) == 42.0

    def test_all_equal(self):
        assert effective_bandwidth(chain_links(10.0, 10.0, 10.0)) == 10.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyRoute):
            effective_bandwidth([])


class TestRouteCost:
    def test_zero_p0_is_pure_additive_sum(self):
        links = chain_links(100.0, 50.0)
        params = ParameterSet(p_hop=1.0)
        assert route_cost(links, params) == 2.0

    def test_p0_over_single_link(self):
        assert route_cost(chain_links(50.0), ParameterSet(p0=100.0)) == 2.0

    def test_bandwidth_term_uses_end_to_end_bottleneck(self):
        # Applying p0 per hop would give 1 + 20 + 5; applied once to the
        # bottleneck it must give exactly 20.
        links = chain_links(100.0, 5.0, 20.0)
        params = ParameterSet(p0=100.0)
        assert route_cost(links, params) == 100.0 / 5.0

    def test_diamond_preference_flips_with_p0(self):
        wide_long = chain_links(100.0, 100.0, 100.0)
        narrow_short = chain_links(10.0)
        hop_only = ParameterSet(p_hop=1.0)
        assert route_cost(narrow_short, hop_only) < route_cost(wide_long, hop_only)
        bandwidth_heavy = ParameterSet(p0=1000.0, p_hop=1.0)
        assert route_cost(wide_long, bandwidth_heavy) == 13.0
        assert route_cost(narrow_short, bandwidth_heavy) == 101.0

    def test_empty_route_rejected(self):
        with pytest.raises(EmptyRoute):
            route_cost([], ParameterSet(p_hop=1.0))

    def test_down_link_rejected(self):
        links = chain_links(100.0, 50.0)
        links[1].up = False
        with pytest.raises(LinkDown):
            route_cost(links, ParameterSet(p_hop=1.0))


class TestProperties:
    def test_appending_a_link_never_decreases_cost(self):
        rng = random.Random(11)
        for _ in range(200):
            n = rng.randint(1, 6)
            links = [link(bandwidth=rng.uniform(1, 100),
                          delay=rng.uniform(0, 0.1),
                          nominal=rng.uniform(0, 0.1),
                          money=rng.uniform(0, 5), src=i, dst=i + 1)
                     for i in range(n + 1)]
            params = ParameterSet(p0=rng.uniform(0, 100),
                                  p_delay=rng.uniform(0, 3),
                                  p_jitter=rng.uniform(0, 3),
                                  p_hop=rng.uniform(0.1, 2),
                                  p_money=rng.uniform(0, 2))
            assert route_cost(links, params) >= route_cost(links[:-1], params)

    def test_scaling_weights_scales_cost_exactly_for_powers_of_two(self):
        links = chain_links(100.0, 25.0, 50.0)
        params = ParameterSet(p0=64.0, p_delay=2.0, p_jitter=1.0,
                              p_hop=1.0, p_money=0.5)
        assert route_cost(links, params.scaled(4.0)) == 4.0 * route_cost(links, params)

    def test_scaling_preserves_route_ranking(self):
        rng = random.Random(12)
        for _ in range(100):
            a = chain_links(*(rng.uniform(1, 100) for _ in range(3)))
            b = chain_links(*(rng.uniform(1, 100) for _ in range(2)))
            params = ParameterSet(p0=rng.uniform(0, 200), p_hop=1.0,
                                  p_delay=rng.uniform(0, 3))
            c = rng.uniform(0.1, 10)
            before = route_cost(a, params) < route_cost(b, params)
            after = route_cost(a, params.scaled(c)) < route_cost(b, params.scaled(c))
            if abs(route_cost(a, params) - route_cost(b, params)) > 1e-9:
                assert before == after

    def test_cached_total_matches_recomputation_bit_for_bit(self):
        rng = random.Random(13)
        for _ in range(100):
            links = chain_links(*(rng.uniform(1, 100) for _ in range(4)))
            params = ParameterSet(p0=rng.uniform(0, 100), p_hop=1.0,
                                  p_delay=rng.uniform(0, 2),
                                  p_jitter=rng.uniform(0, 2))
            route = make_route(links, params)
            assert route.total_cost == route_cost(list(route.links), params)
            assert route.bottleneck_bandwidth == effective_bandwidth(route.links)


class TestMakeRoute:
    def test_rejects_disconnected_links(self):
        bad = [link(src=0, dst=1), link(src=2, dst=3)]
        with pytest.raises(ValueError):
            make_route(bad, ParameterSet(p_hop=1.0))

    def test_rejects_repeated_node(self):
        loop = [link(src=0, dst=1), link(src=1, dst=0)]
        with pytest.raises(ValueError):
            make_route(loop, ParameterSet(p_hop=1.0))

    def test_hops_exclude_endpoints(self):
        route = make_route(chain_links(10.0, 10.0, 10.0), ParameterSet(p_hop=1.0))
        assert route.hops == (1, 2)
        assert route.node_sequence() == (0, 1, 2, 3)
