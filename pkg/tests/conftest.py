import pytest

from adroute import cli, engine, scenario as scenario_mod
from adroute.metric import ParameterSet
from adroute.topology import NodeKind, Topology


def build_chain(n, bandwidth=100.0, delay=0.01):
    """n router nodes in a line, bidirectional pairs."""
    topo = Topology()
    for _ in range(n):
        topo.add_node(NodeKind.STANDARD_ROUTER)
    for i in range(n - 1):
        topo.add_pair(i, i + 1, bandwidth, delay)
    return topo


def build_diamond(bw_top=100.0, bw_bottom=100.0, delay=0.01):
    """0 -> {1 top, 2 bottom} -> 3, all pairs."""
    topo = Topology()
    for _ in range(4):
        topo.add_node(NodeKind.STANDARD_ROUTER)
    topo.add_pair(0, 1, bw_top, delay)
    topo.add_pair(1, 3, bw_top, delay)
    topo.add_pair(0, 2, bw_bottom, delay)
    topo.add_pair(2, 3, bw_bottom, delay)
    return topo


HOP_PARAMS = ParameterSet(p_hop=1.0)


def load_bundled(name):
    return scenario_mod.loads(cli.bundled_scenario_text(name))


BUNDLED = ["scenario1.txt", "scenario2.txt", "scenario3_fr.txt",
           "scenario3_sr.txt", "anycast.txt", "security.txt"]


@pytest.fixture(scope="session")
def bundled_runs():
    """Each bundled scenario executed once per mode, shared across tests."""
    runs = {}
    for name in BUNDLED:
        scenario = load_bundled(name)
        for mode in (engine.ADAPTIVE, engine.DV_BASELINE):
            runs[(name, mode)] = engine.run(scenario, mode=mode)
    return runs


def trace_kinds(result, *kinds):
    return [e for e in result.events if e.kind in kinds]


def detail_field(event, key):
    for part in event.detail.split(";"):
        k, _, v = part.partition("=")
        if k == key:
            return v
    return None
