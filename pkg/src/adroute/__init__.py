"""Discrete-event simulator for flow-label adaptive routing.

Route servers compute minimum-hybrid-cost paths and pin them into adaptive
routers' flow tables; keep-alive probing detects unreachable routers;
selective anycast lets source hosts exclude misbehaving group members.
Runs are deterministic per (scenario, seed) and emit CSV traces.
"""

from .adaptive_router import (
    DV_INFINITY,
    FlowEntry,
    FlowKey,
    FlowUpdate,
    RouterState,
    apply_flow_update,
    decide_forward,
    dv_round,
    dv_step,
)
from .anycast import Address, AnycastGroup, anycast_address, resolve, unicast_address
from .engine import ADAPTIVE, DV_BASELINE, RunResult, Simulation, run
from .errors import (
    AllMembersExcluded,
    DuplicateLink,
    EmptyRoute,
    LinkDown,
    MismatchedScenarios,
    NoReachableMember,
    NoRoute,
    NonPositiveBandwidth,
    NotExcluded,
    SimulationError,
    TooLarge,
    Unauthorized,
    UnknownLink,
    UnknownMember,
    UnknownNode,
    ValidationError,
    WouldExcludeAll,
)
from .metric import ParameterSet, Route, effective_bandwidth, hop_cost, route_cost
from .oracle import brute_force_optimal, enumerate_simple_paths
from .report import compare_runs, events_csv, render_summary, throughput_csv
from .route_server import (
    KeepAliveState,
    RouteQuery,
    RouteServerConfig,
    find_optimal_route,
    keepalive_tick,
)
from .scenario import Scenario, load, loads, to_text
from .topology import Link, NodeId, NodeKind, Topology
from .transport import (
    TcpReceiverState,
    TcpSenderState,
    TcpVariant,
    ThroughputSample,
    on_ack,
    on_rtt_sample,
    on_timeout,
    sample_throughput,
)

__version__ = "0.1.0"
