"""Deterministic discrete-event core.

One event at a time, ordered by (time, scheduling sequence); same scenario
and seed always reproduce the same trace byte for byte.  Packets traverse
store-and-forward links with drop-tail queues; control messages ride the
same links as data and are lost with them.  Two modes share every scripted
action: "adaptive" activates route servers, flow tables, and keep-alive,
"dv-baseline" leaves only hop-count distance-vector forwarding.
"""
from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field, replace
from enum import Enum

from . import adaptive_router as ar
from . import anycast as ac
from . import transport as tp
from .adaptive_router import DvTables, FlowKey, FlowUpdate, RouterState
from .errors import NoRoute, SimulationError
from .metric import ParameterSet, Route
from .route_server import (
    KeepAliveState,
    RouteQuery,
    RouteServerConfig,
    find_optimal_route,
    keepalive_tick,
)
from .scenario import FlowDecl, Scenario, ScenarioAction
from .topology import NodeId, NodeKind, Topology

ACK_BYTES = 50
CTRL_BYTES = 100

ADAPTIVE = "adaptive"
DV_BASELINE = "dv-baseline"
MODES = (ADAPTIVE, DV_BASELINE)


class EventKind(Enum):
    PACKET_ARRIVAL = "packet_arrival"
    LINK_STATE_CHANGE = "link_state_change"
    TIMER_FIRE = "timer_fire"
    CONTROL_MESSAGE = "control_message"
    SCENARIO_ACTION = "scenario_action"


@dataclass(frozen=True)
class Event:
    time: float
    seq: int
    kind: EventKind
    payload: dict

    def sort_key(self):
        return (self.time, self.seq)


class PacketKind(Enum):
    DATA = "data"
    ACK = "ack"
    CTRL = "ctrl"


@dataclass
class Packet:
    uid: int
    kind: PacketKind
    flow: FlowKey | None
    flow_name: str | None
    seq: int
    size_bytes: int
    origin: NodeId
    route_dst: NodeId
    hop_limit: int
    ctrl: object = None
    retransmit: bool = False


# Control payloads ----------------------------------------------------------


@dataclass(frozen=True)
class RouteRequestMsg:
    flow_name: str
    key: FlowKey
    requester: NodeId
    reason: str  # "register" | "local_failure"
    failure_hint: tuple[NodeId, NodeId] | None = None


@dataclass(frozen=True)
class ProbeMsg:
    server: NodeId


@dataclass(frozen=True)
class EchoMsg:
    server: NodeId
    router: NodeId


@dataclass(frozen=True)
class TraceEvent:
    time: float
    node: str
    kind: str
    detail: str


@dataclass
class LinkRuntime:
    busy_until: float = 0.0
    finish_times: list = field(default_factory=list)  # serialization ends, FIFO
    epoch: int = 0


@dataclass
class FlowCounters:
    data_sent: int = 0
    data_delivered: int = 0
    data_dropped: int = 0
    ack_sent: int = 0
    ack_delivered: int = 0
    ack_dropped: int = 0

    def in_network(self, kind: str) -> int:
        if kind == "data":
            return self.data_sent - self.data_delivered - self.data_dropped
        return self.ack_sent - self.ack_delivered - self.ack_dropped


@dataclass
class FlowRuntime:
    decl: FlowDecl
    name: str
    src_node: NodeId
    src_addr: ac.Address
    target_addr: ac.Address  # unicast host or anycast service address
    group: ac.AnycastGroup | None
    params: ParameterSet
    rs_node: NodeId | None
    label: int = 0
    key_fwd: FlowKey | None = None
    key_rev: FlowKey | None = None
    resolved_addr: ac.Address | None = None
    dst_node: NodeId | None = None
    exclusions: frozenset = frozenset()
    active: bool = False
    sender: tp.TcpSenderState | None = None
    receiver: tp.TcpReceiverState | None = None
    send_times: dict = field(default_factory=dict)  # seq -> (time, retransmitted)
    timer_epoch: int = 0
    timer_armed: bool = False
    cbr_seq: int = 0
    timeline: list = field(default_factory=list)  # (time, bytes) ack/delivery progress


@dataclass
class RegisteredFlow:
    name: str
    route: Route


@dataclass
class RouteServerRuntime:
    node: NodeId
    config: RouteServerConfig
    keepalive: dict[NodeId, KeepAliveState] = field(default_factory=dict)
    echo_seen: set[NodeId] = field(default_factory=set)
    probed_once: bool = False
    registry: dict[str, RegisteredFlow] = field(default_factory=dict)

    def presumed_dead(self) -> frozenset[NodeId]:
        return frozenset(r for r, st in self.keepalive.items() if st.presumed_dead)


@dataclass
class RunResult:
    scenario: Scenario
    mode: str
    seed: int
    sample_window: float
    events: list[TraceEvent]
    samples: list[tp.ThroughputSample]
    counters: dict[str, FlowCounters]
    fingerprint: str
    failure_time: float | None
    dv_convergences: list[tuple[float, int]]  # (time, changing rounds)
    flow_tables: dict[str, dict]  # node name -> {key: out link} snapshot


def _earliest_failure(scenario: Scenario) -> float | None:
    times = [a.time for a in scenario.actions
             if a.verb in ("link_down", "one_link_down")]
    return min(times) if times else None


class Simulation:
    """One engine instance; single-threaded by contract."""

    def __init__(self, scenario: Scenario, mode: str = ADAPTIVE,
                 seed: int | None = None, sample_window: float | None = None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.scenario = scenario
        self.mode = mode
        self.seed = scenario.sim.seed if seed is None else seed
        self.window = (scenario.sim.sample_window if sample_window is None
                       else sample_window)
        self.sim = scenario.sim
        self.topology = scenario.build_topology()
        self.names = {i: d.name for i, d in enumerate(scenario.nodes)}
        self.ids = {d.name: i for i, d in enumerate(scenario.nodes)}

        self._apply_jitter()

        self.now = 0.0
        self._heap: list[tuple[float, int, Event]] = []
        self._eventseq = itertools.count()
        self._uid = itertools.count()
        self.trace: list[TraceEvent] = []

        self.links: dict[tuple[NodeId, NodeId], LinkRuntime] = {
            link.key: LinkRuntime() for link in self.topology.links()
        }
        self.routers: dict[NodeId, RouterState] = {
            n: RouterState(n, self.topology.node_kind(n))
            for n in self.topology.node_ids()
        }
        self.dv, _ = ar.dv_step(self.topology)
        self._dv_cascading = False
        self._dv_rounds = 0
        self.dv_convergences: list[tuple[float, int]] = []

        self.addresses: dict[NodeId, ac.Address] = {}
        for node in self.topology.node_ids():
            self.addresses[node] = ac.unicast_address(self.names[node])
        self.node_of_addr = {a: n for n, a in self.addresses.items()}

        self.groups: dict[str, ac.AnycastGroup] = {}
        for decl in scenario.groups:
            members = []
            for member in decl.members:
                node = self.ids[member]
                members.append((self.addresses[node], self._attachment_router(node)))
            self.groups[decl.name] = ac.AnycastGroup(ac.anycast_address(decl.name),
                                                     tuple(members))

        self.servers: dict[NodeId, RouteServerRuntime] = {}
        self.authorized: set[NodeId] = set()
        for sdecl in scenario.route_servers:
            node = self.ids[sdecl.node]
            self.servers[node] = RouteServerRuntime(node, sdecl.config)
            if sdecl.config.authorized:
                self.authorized.add(node)

        self.adaptive_routers = [
            n for n in self.topology.node_ids()
            if self.topology.node_kind(n) is NodeKind.ADAPTIVE_ROUTER
        ]

        self.flows: dict[str, FlowRuntime] = {}
        self.key_to_flow: dict[FlowKey, str] = {}
        self.counters: dict[str, FlowCounters] = {}
        self._labels: dict[tuple[ac.Address, ac.Address], int] = {}
        for fdecl in scenario.flows:
            self._init_flow(fdecl)

        self._schedule_initial()

    # -- setup -------------------------------------------------------------

    def _apply_jitter(self):
        amp = self.sim.jitter
        if amp <= 0:
            return
        rng = random.Random(f"{self.seed}/jitter")
        for link in self.topology.links():
            link.delay = max(0.0, link.nominal_delay + rng.uniform(-amp, amp))

    def _attachment_router(self, host: NodeId) -> NodeId:
        for neighbor, _ in self.topology.neighbors_out(host):
            if self.topology.is_transit(neighbor):
                return neighbor
        raise SimulationError(
            f"host {self.names[host]} has no attached router")

    def _default_server(self) -> NodeId | None:
        for sdecl in self.scenario.route_servers:
            if sdecl.config.authorized:
                return self.ids[sdecl.node]
        if self.scenario.route_servers:
            return self.ids[self.scenario.route_servers[0].node]
        return None

    def _init_flow(self, decl: FlowDecl):
        src_node = self.ids[decl.src]
        group = self.groups.get(decl.dst)
        if group is not None:
            target = group.address
        else:
            target = self.addresses[self.ids[decl.dst]]
        rs_node = None
        if decl.route_server is not None:
            rs_node = self.ids[decl.route_server]
        else:
            rs_node = self._default_server()
        runtime = FlowRuntime(
            decl=decl,
            name=decl.name,
            src_node=src_node,
            src_addr=self.addresses[src_node],
            target_addr=target,
            group=group,
            params=self.scenario.profiles[decl.profile],
            rs_node=rs_node,
        )
        self.flows[decl.name] = runtime
        self.counters[decl.name] = FlowCounters()

    def _schedule_initial(self):
        for decl in self.scenario.flows:
            self._schedule(decl.start, EventKind.SCENARIO_ACTION,
                           {"verb": "flow_start", "flow": decl.name})
            if decl.stop <= self.sim.duration:
                self._schedule(decl.stop, EventKind.SCENARIO_ACTION,
                               {"verb": "flow_stop", "flow": decl.name})
        for action in self.scenario.actions:
            if action.verb in ("link_down", "link_up", "one_link_down",
                               "one_link_up"):
                self._schedule(action.time, EventKind.LINK_STATE_CHANGE,
                               {"action": action})
            else:
                self._schedule(action.time, EventKind.SCENARIO_ACTION,
                               {"action": action})
        if self.mode == ADAPTIVE:
            for sdecl in self.scenario.route_servers:
                node = self.ids[sdecl.node]
                self._schedule(sdecl.config.keepalive_interval,
                               EventKind.TIMER_FIRE,
                               {"timer": "keepalive", "server": node})

    # -- primitives ----------------------------------------------------------

    def _schedule(self, time: float, kind: EventKind, payload: dict):
        event = Event(time, next(self._eventseq), kind, payload)
        heapq.heappush(self._heap, (event.time, event.seq, event))

    def _log(self, node: NodeId | None, kind: str, detail: str):
        name = "-" if node is None else self.names[node]
        self.trace.append(TraceEvent(self.now, name, kind, detail))

    def _flow_of(self, packet: Packet) -> str | None:
        if packet.flow_name is not None:
            return packet.flow_name
        if packet.flow is not None:
            return self.key_to_flow.get(packet.flow)
        return None

    def _count(self, packet: Packet, what: str):
        name = self._flow_of(packet)
        if name is None or packet.kind is PacketKind.CTRL:
            return
        counters = self.counters[name]
        kind = "data" if packet.kind is PacketKind.DATA else "ack"
        attr = f"{kind}_{what}"
        setattr(counters, attr, getattr(counters, attr) + 1)

    # -- run loop -------------------------------------------------------------

    def run(self) -> RunResult:
        while self._heap:
            time, _, event = self._heap[0]
            if time > self.sim.duration:
                break
            heapq.heappop(self._heap)
            self.now = time
            self._dispatch(event)
        self.now = self.sim.duration
        return self._result()

    def _dispatch(self, event: Event):
        if event.kind is EventKind.PACKET_ARRIVAL:
            self._on_packet_arrival(event.payload)
        elif event.kind is EventKind.LINK_STATE_CHANGE:
            self._on_link_action(event.payload["action"])
        elif event.kind is EventKind.TIMER_FIRE:
            self._on_timer(event.payload)
        elif event.kind is EventKind.CONTROL_MESSAGE:
            self._on_control(event.payload)
        elif event.kind is EventKind.SCENARIO_ACTION:
            self._on_action(event.payload)

    # -- links ----------------------------------------------------------------

    def _enqueue(self, key: tuple[NodeId, NodeId], packet: Packet):
        link = self.topology.link(*key)
        runtime = self.links[key]
        if not link.up:
            self._drop(packet, link.src, "link_down")
            return
        runtime.finish_times = [t for t in runtime.finish_times if t > self.now]
        if len(runtime.finish_times) >= self.sim.queue_capacity:
            self._drop(packet, link.src, "queue_overflow")
            return
        start = max(self.now, runtime.busy_until)
        finish = start + (packet.size_bytes / 1000.0) / link.bandwidth
        runtime.busy_until = finish
        runtime.finish_times.append(finish)
        self._schedule(finish + link.delay, EventKind.PACKET_ARRIVAL,
                       {"packet": packet, "link": key, "epoch": runtime.epoch})

    def _on_packet_arrival(self, payload):
        key = payload["link"]
        packet: Packet = payload["packet"]
        if self.links[key].epoch != payload["epoch"]:
            self._drop(packet, key[0], "lost_in_flight")
            return
        self._process_at(key[1], packet)

    def _bump_link(self, key: tuple[NodeId, NodeId]):
        runtime = self.links[key]
        runtime.epoch += 1
        runtime.finish_times = []
        runtime.busy_until = self.now

    def _on_link_action(self, action: ScenarioAction):
        a, b = self.ids[action.args[0]], self.ids[action.args[1]]
        up = action.verb.endswith("_up")
        pair = not action.verb.startswith("one_")
        if pair:
            self.topology.set_pair_state(a, b, up)
            self._bump_link((a, b))
            self._bump_link((b, a))
            kind = "link_pair_up" if up else "link_pair_down"
            self._log(a, kind, f"a={self.names[a]};b={self.names[b]}")
            affected = [(a, b), (b, a)]
        else:
            self.topology.set_link_state(a, b, up)
            self._bump_link((a, b))
            kind = "link_up" if up else "link_down"
            self._log(a, kind, f"dst={self.names[b]}")
            affected = [(a, b)]
        if not up:
            for key in affected:
                self._detect_dead_interface(key)
        self._kick_dv()

    def _detect_dead_interface(self, key: tuple[NodeId, NodeId]):
        """An adaptive router notices its own interface dying immediately;
        the route server's response latency carries all the recovery delay."""
        router = self.routers[key[0]]
        if router.kind is not NodeKind.ADAPTIVE_ROUTER:
            return
        for entry in list(router.flow_table.values()):
            if entry.out_link != key:
                continue
            if (entry.key, key) in router.reroute_sent:
                continue
            self._local_failure(key[0], entry.key, key)

    # -- distance vector --------------------------------------------------------

    def _kick_dv(self):
        if not self._dv_cascading:
            self._dv_cascading = True
            self._dv_rounds = 0
            self._schedule(self.now + self.sim.dv_round_latency,
                           EventKind.TIMER_FIRE, {"timer": "dv_round"})

    def _on_dv_round(self):
        self.dv, changed = ar.dv_round(self.dv, self.topology)
        self._log(None, "dv_round", f"changed={'yes' if changed else 'no'}")
        if changed:
            self._dv_rounds += 1
            self._schedule(self.now + self.sim.dv_round_latency,
                           EventKind.TIMER_FIRE, {"timer": "dv_round"})
        else:
            self._dv_cascading = False
            self.dv_convergences.append((self.now, self._dv_rounds))
            self._log(None, "dv_converged", f"rounds={self._dv_rounds}")

    # -- forwarding --------------------------------------------------------------

    def _process_at(self, node: NodeId, packet: Packet):
        if packet.route_dst == node:
            self._deliver(node, packet)
            return
        if node != packet.origin and not self.topology.is_transit(node):
            self._drop(packet, node, "not_forwardable")
            return
        decision = ar.decide_forward(self.routers[node], packet.flow,
                                     packet.route_dst, self.topology,
                                     self.dv[node])
        if decision.kind is ar.ForwardKind.FORWARD:
            if packet.hop_limit <= 0:
                self._drop(packet, node, "hop_limit_exceeded")
                return
            packet.hop_limit -= 1
            if decision.pinned and packet.kind is PacketKind.DATA:
                out = decision.out_link
                self._log(node, "pinned_forward",
                          f"flow={packet.flow_name};label={packet.flow.label}"
                          f";seq={packet.seq};out={self.names[out[1]]}")
            self._enqueue(decision.out_link, packet)
            return
        # Drop paths.
        if decision.local_failure is not None:
            self._drop(packet, node, decision.reason)
            if decision.request_reroute:
                self._local_failure(node, packet.flow, decision.local_failure)
            return
        self._drop(packet, node, decision.reason)

    def _drop(self, packet: Packet, node: NodeId, reason: str):
        self._count(packet, "dropped")
        flow = self._flow_of(packet)
        label = packet.flow.label if packet.flow is not None else "-"
        self._log(node, "packet_dropped",
                  f"kind={packet.kind.value};flow={flow};label={label}"
                  f";seq={packet.seq};reason={reason}")

    def _local_failure(self, node: NodeId, key: FlowKey,
                       out_link: tuple[NodeId, NodeId]):
        router = self.routers[node]
        router.reroute_sent.add((key, out_link))
        self._log(node, "local_failure_detected",
                  f"out={self.names[out_link[0]]}->{self.names[out_link[1]]}"
                  f";flow={self.key_to_flow.get(key)};label={key.label}")
        if self.mode != ADAPTIVE:
            return
        entry = router.flow_table.get(key)
        if entry is None:
            return
        flow_name = self.key_to_flow.get(key)
        if flow_name is None:
            return
        self._log(node, "route_request",
                  f"flow={flow_name};reason=local_failure;"
                  f"server={self.names[entry.installed_by]}")
        msg = RouteRequestMsg(flow_name, key, node, "local_failure", out_link)
        self._send_ctrl(node, entry.installed_by, msg)

    # -- delivery ---------------------------------------------------------------

    def _deliver(self, node: NodeId, packet: Packet):
        if packet.kind is PacketKind.CTRL:
            self._on_ctrl_delivery(node, packet)
            return
        self._count(packet, "delivered")
        if packet.kind is PacketKind.DATA:
            flow = self._flow_of(packet)
            self._log(node, "packet_delivered",
                      f"flow={flow};label={packet.flow.label};seq={packet.seq}"
                      f";addr={self.addresses[node]}")
            self._on_data_delivered(node, packet)
        else:
            self._on_ack_delivered(node, packet)

    def _on_data_delivered(self, node: NodeId, packet: Packet):
        name = self._flow_of(packet)
        if name is None:
            return
        flow = self.flows[name]
        if packet.flow != flow.key_fwd or flow.dst_node != node:
            return  # straggler from a retired label
        if flow.decl.variant == "cbr":
            flow.timeline.append((self.now, packet.size_bytes))
            return
        ack_val = flow.receiver.on_data(packet.seq)
        ack = Packet(next(self._uid), PacketKind.ACK, flow.key_rev, name,
                     ack_val, ACK_BYTES, node, flow.src_node,
                     self.sim.hop_limit)
        self._count(ack, "sent")
        self._process_at(node, ack)

    def _on_ack_delivered(self, node: NodeId, packet: Packet):
        name = self._flow_of(packet)
        if name is None:
            return
        flow = self.flows[name]
        if packet.flow != flow.key_rev or not flow.active:
            return
        old_high = flow.sender.high_ack
        if packet.seq < old_high:
            return
        advanced = packet.seq > old_high
        if advanced:
            sample_seq = packet.seq - 1
            rec = flow.send_times.get(sample_seq)
            if rec is not None and not rec[1]:
                flow.sender = tp.on_rtt_sample(flow.sender, self.now - rec[0])
            flow.timeline.append(
                (self.now, (packet.seq - old_high) * tp.SEGMENT_BYTES))
            for seq in range(old_high, packet.seq):
                flow.send_times.pop(seq, None)
        outcome = tp.on_ack(flow.sender, packet.seq)
        flow.sender = outcome.state
        if outcome.retransmit is not None:
            self._send_segment(flow, outcome.retransmit, retransmit=True)
        self._send_window(flow)
        # Restart the retransmission timer only on progress; a duplicate ack
        # must not keep pushing the deadline out.
        if advanced or outcome.retransmit is not None:
            self._rearm_rto(flow)

    # -- control plane ------------------------------------------------------------

    def _send_ctrl(self, src: NodeId, dst: NodeId, msg):
        packet = Packet(next(self._uid), PacketKind.CTRL, None, None, 0,
                        CTRL_BYTES, src, dst, self.sim.hop_limit, ctrl=msg)
        self._process_at(src, packet)

    def _on_ctrl_delivery(self, node: NodeId, packet: Packet):
        msg = packet.ctrl
        if isinstance(msg, ProbeMsg):
            self._send_ctrl(node, msg.server, EchoMsg(msg.server, node))
        elif isinstance(msg, EchoMsg):
            server = self.servers.get(node)
            if server is not None:
                server.echo_seen.add(msg.router)
        elif isinstance(msg, RouteRequestMsg):
            self._on_route_request(node, msg)
        elif isinstance(msg, FlowUpdate):
            self._apply_update(node, msg)

    def _apply_update(self, node: NodeId, update: FlowUpdate):
        router = self.routers[node]
        if router.kind is not NodeKind.ADAPTIVE_ROUTER:
            self._log(node, "flow_update_ignored", "router is not adaptive")
            return
        authorized = update.issuer in self.authorized
        applied = ar.apply_flow_update(router, update, authorized, self.now)
        flow = self.key_to_flow.get(update.key)
        out = f"{self.names[update.out_link[0]]}->{self.names[update.out_link[1]]}"
        if applied:
            self._log(node, "flow_update_applied",
                      f"flow={flow};label={update.key.label};out={out}"
                      f";issuer={self.names[update.issuer]}")
        else:
            self._log(node, "security_refusal",
                      f"flow={flow};label={update.key.label};out={out}"
                      f";issuer={self.names[update.issuer]}")

    def _on_route_request(self, node: NodeId, msg: RouteRequestMsg):
        server = self.servers.get(node)
        if server is None or self.mode != ADAPTIVE:
            return
        if not server.config.authorized:
            self._log(node, "request_refused",
                      f"flow={msg.flow_name};reason=unauthorized_server")
            return
        flow = self.flows.get(msg.flow_name)
        if flow is None or not flow.active:
            self._log(node, "request_refused",
                      f"flow={msg.flow_name};reason=unknown_flow")
            return
        hint = frozenset((msg.failure_hint,)) if msg.failure_hint else frozenset()
        self._compute_and_install(server, flow, hint)

    def _compute_and_install(self, server: RouteServerRuntime, flow: FlowRuntime,
                             excluded_links: frozenset):
        if flow.dst_node == flow.src_node:
            return  # local delivery, nothing to pin
        dead = server.presumed_dead() - {flow.src_node, flow.dst_node}
        query = RouteQuery(flow.src_node, flow.dst_node, flow.params,
                           excluded_nodes=dead,
                           excluded_addresses=flow.exclusions)
        try:
            route = find_optimal_route(self.topology, query, excluded_links)
        except NoRoute:
            self._log(server.node, "flow_stalled",
                      f"flow={flow.name};label={flow.label}")
            return
        updates = self._updates_for_route(server.node, flow, route)
        self._schedule(self.now + server.config.response_latency,
                       EventKind.CONTROL_MESSAGE,
                       {"server": server.node, "flow": flow.name,
                        "label": flow.label, "route": route,
                        "updates": updates})

    def _updates_for_route(self, issuer: NodeId, flow: FlowRuntime,
                           route: Route) -> list[FlowUpdate]:
        """Pin both directions: the data path and its mirror for returns."""
        updates = []
        seq = route.node_sequence()
        for i, node in enumerate(seq[:-1]):
            if self.topology.node_kind(node) is NodeKind.ADAPTIVE_ROUTER:
                updates.append(FlowUpdate(flow.key_fwd, node,
                                          (node, seq[i + 1]), issuer))
        reverse = tuple(reversed(seq))
        for i, node in enumerate(reverse[:-1]):
            if self.topology.node_kind(node) is not NodeKind.ADAPTIVE_ROUTER:
                continue
            back = (node, reverse[i + 1])
            if self.topology.has_link(*back):
                updates.append(FlowUpdate(flow.key_rev, node, back, issuer))
        return updates

    def _on_control(self, payload):
        """Deferred route-server response: register and push the updates."""
        server = self.servers[payload["server"]]
        flow = self.flows[payload["flow"]]
        if not flow.active or flow.label != payload["label"]:
            return  # flow relabeled or stopped while the response was pending
        server.registry[flow.name] = RegisteredFlow(flow.name, payload["route"])
        route = payload["route"]
        names = "-".join(self.names[n] for n in route.node_sequence())
        self._log(server.node, "flow_update_sent",
                  f"flow={flow.name};label={flow.label};route={names}"
                  f";cost={route.total_cost!r}")
        for update in payload["updates"]:
            if update.router == server.node:
                continue
            self._send_ctrl(server.node, update.router, update)

    # -- keep-alive -----------------------------------------------------------------

    def _on_keepalive(self, server_node: NodeId):
        server = self.servers[server_node]
        dead_events: list[NodeId] = []
        if server.probed_once:
            for router in self.adaptive_routers:
                state = server.keepalive[router]
                responded = router in server.echo_seen
                state, events = keepalive_tick(state, responded, self.now)
                server.keepalive[router] = state
                for event in events:
                    self._log(server_node, event,
                              f"router={self.names[router]};missed={state.missed}")
                    if event == "router_presumed_dead":
                        dead_events.append(router)
        server.echo_seen.clear()
        for router in self.adaptive_routers:
            if router not in server.keepalive:
                server.keepalive[router] = KeepAliveState(
                    router, server.config.keepalive_interval,
                    server.config.keepalive_threshold)
            self._send_ctrl(server_node, router, ProbeMsg(server_node))
        server.probed_once = True
        self._schedule(self.now + server.config.keepalive_interval,
                       EventKind.TIMER_FIRE,
                       {"timer": "keepalive", "server": server_node})
        for router in dead_events:
            self._reroute_around(server, router)

    def _reroute_around(self, server: RouteServerRuntime, dead: NodeId):
        if not server.config.authorized:
            return
        for name in list(server.registry):
            registered = server.registry[name]
            if not registered.route.contains_node(dead):
                continue
            flow = self.flows[name]
            if flow.active:
                self._compute_and_install(server, flow, frozenset())

    # -- timers -----------------------------------------------------------------------

    def _on_timer(self, payload):
        timer = payload["timer"]
        if timer == "dv_round":
            self._on_dv_round()
        elif timer == "keepalive":
            self._on_keepalive(payload["server"])
        elif timer == "rto":
            self._on_rto(payload)
        elif timer == "cbr":
            self._on_cbr(payload)

    def _rearm_rto(self, flow: FlowRuntime):
        flow.timer_epoch += 1
        flow.timer_armed = flow.sender.in_flight > 0 and flow.active
        if flow.timer_armed:
            self._schedule(self.now + flow.sender.rto, EventKind.TIMER_FIRE,
                           {"timer": "rto", "flow": flow.name,
                            "epoch": flow.timer_epoch})

    def _on_rto(self, payload):
        flow = self.flows[payload["flow"]]
        if payload["epoch"] != flow.timer_epoch or not flow.active:
            return
        flow.timer_armed = False
        if flow.sender is None or flow.sender.in_flight == 0:
            return
        flow.sender, seq = tp.on_timeout(flow.sender)
        # The send cursor rewound to the hole; account the retransmission.
        flow.sender = replace(flow.sender, next_seq=seq + 1)
        self._log(flow.src_node, "tcp_timeout",
                  f"flow={flow.name};label={flow.label};seq={seq}"
                  f";rto={flow.sender.rto!r}")
        self._send_segment(flow, seq, retransmit=True)
        self._rearm_rto(flow)

    def _on_cbr(self, payload):
        flow = self.flows[payload["flow"]]
        if not flow.active or flow.label != payload["label"]:
            return
        if self.now >= flow.decl.stop:
            return
        self._send_segment(flow, flow.cbr_seq, retransmit=False)
        flow.cbr_seq += 1
        interval = (tp.SEGMENT_BYTES / 1000.0) / flow.decl.rate
        self._schedule(self.now + interval, EventKind.TIMER_FIRE,
                       {"timer": "cbr", "flow": flow.name, "label": flow.label})

    # -- transport ----------------------------------------------------------------------

    def _send_segment(self, flow: FlowRuntime, seq: int, retransmit: bool):
        packet = Packet(next(self._uid), PacketKind.DATA, flow.key_fwd,
                        flow.name, seq, tp.SEGMENT_BYTES, flow.src_node,
                        flow.dst_node, self.sim.hop_limit,
                        retransmit=retransmit)
        if flow.decl.variant != "cbr":
            resend = retransmit or seq in flow.send_times
            flow.send_times[seq] = (self.now, resend)
        self._count(packet, "sent")
        self._log(flow.src_node, "packet_sent",
                  f"flow={flow.name};label={flow.label};seq={seq}"
                  f";retransmit={'yes' if retransmit else 'no'}")
        self._process_at(flow.src_node, packet)

    def _send_window(self, flow: FlowRuntime):
        allowance = tp.window_allowance(flow.sender)
        for _ in range(allowance):
            seq = flow.sender.next_seq
            flow.sender = replace(flow.sender, next_seq=seq + 1)
            self._send_segment(flow, seq, retransmit=False)
        if allowance > 0 and not flow.timer_armed:
            self._rearm_rto(flow)

    # -- flow lifecycle --------------------------------------------------------------------

    def _next_label(self, flow: FlowRuntime) -> int:
        pair = (flow.src_addr, flow.target_addr)
        label = self._labels.get(pair, 0) + 1
        self._labels[pair] = label
        return label

    def _resolve_target(self, flow: FlowRuntime) -> tuple[ac.Address, NodeId]:
        if flow.group is None:
            addr = flow.target_addr
            return addr, self.node_of_addr[addr]
        addr = ac.resolve(flow.group, flow.src_node, flow.exclusions,
                          self.topology)
        return addr, self.node_of_addr[addr]

    def _activate_flow(self, flow: FlowRuntime):
        flow.label = self._next_label(flow)
        flow.key_fwd = FlowKey(flow.label, flow.src_addr, flow.target_addr)
        flow.key_rev = FlowKey(flow.label, flow.target_addr, flow.src_addr)
        self.key_to_flow[flow.key_fwd] = flow.name
        self.key_to_flow[flow.key_rev] = flow.name
        flow.active = True
        flow.send_times = {}
        flow.cbr_seq = 0
        detail = (f"flow={flow.name};label={flow.label}"
                  f";dst={flow.resolved_addr}")
        if flow.group is not None:
            detail += f";group={flow.group.address}"
        self._log(flow.src_node, "flow_started", detail)
        if self.mode == ADAPTIVE and flow.rs_node is not None:
            self._log(flow.src_node, "route_request",
                      f"flow={flow.name};reason=register"
                      f";server={self.names[flow.rs_node]}")
            msg = RouteRequestMsg(flow.name, flow.key_fwd, flow.src_node,
                                  "register")
            self._send_ctrl(flow.src_node, flow.rs_node, msg)
        if flow.decl.variant == "cbr":
            self._on_cbr({"flow": flow.name, "label": flow.label})
        else:
            variant = (tp.TcpVariant.RENO if flow.decl.variant == "reno"
                       else tp.TcpVariant.TAHOE)
            flow.sender = tp.TcpSenderState(variant, min_rto=self.sim.min_rto,
                                            rto=max(1.0, self.sim.min_rto))
            flow.receiver = tp.TcpReceiverState()
            self._send_window(flow)
            self._rearm_rto(flow)

    def _on_action(self, payload):
        if "verb" in payload:  # flow lifecycle scheduled at init
            flow = self.flows[payload["flow"]]
            if payload["verb"] == "flow_start":
                try:
                    flow.resolved_addr, flow.dst_node = self._resolve_target(flow)
                except SimulationError as exc:
                    self._log(flow.src_node, "flow_stalled",
                              f"flow={flow.name};reason={type(exc).__name__}")
                    return
                self._activate_flow(flow)
            else:
                self._deactivate_flow(flow, "stop")
            return
        action: ScenarioAction = payload["action"]
        if action.verb in ("exclude", "readmit"):
            self._on_exclusion_action(action)
        elif action.verb == "force_update":
            self._on_force_update(action)

    def _deactivate_flow(self, flow: FlowRuntime, reason: str):
        if not flow.active:
            return
        flow.active = False
        flow.timer_epoch += 1
        self._log(flow.src_node, "flow_stopped",
                  f"flow={flow.name};label={flow.label};reason={reason}")

    def _on_exclusion_action(self, action: ScenarioAction):
        flow = self.flows[action.args[0]]
        member = ac.unicast_address(action.args[1])
        verb = action.verb
        if not flow.active or flow.group is None:
            self._log(flow.src_node, "exclusion_refused",
                      f"flow={flow.name};member={member};reason=flow_inactive")
            return
        try:
            if verb == "exclude":
                new_exclusions = ac.add_exclusion(flow.group, flow.exclusions,
                                                  member)
            else:
                new_exclusions = ac.remove_exclusion(flow.exclusions, member)
            resolved = ac.resolve(flow.group, flow.src_node, new_exclusions,
                                  self.topology)
        except SimulationError as exc:
            self._log(flow.src_node, "exclusion_refused",
                      f"flow={flow.name};member={member}"
                      f";reason={type(exc).__name__}")
            return
        old_label = flow.label
        self._deactivate_flow(flow, verb)
        flow.exclusions = new_exclusions
        flow.resolved_addr = resolved
        flow.dst_node = self.node_of_addr[resolved]
        kind = "exclusion_applied" if verb == "exclude" else "readmission_applied"
        self._log(flow.src_node, kind,
                  f"flow={flow.name};member={member};old_label={old_label}"
                  f";resolved={resolved}")
        self._activate_flow(flow)

    def _on_force_update(self, action: ScenarioAction):
        server_name, flow_name, router, neighbor = action.args
        if self.mode != ADAPTIVE:
            self._log(None, "action_ignored",
                      f"verb=force_update;flow={flow_name};mode={self.mode}")
            return
        server = self.ids[server_name]
        flow = self.flows[flow_name]
        if not flow.active:
            self._log(server, "action_ignored",
                      f"verb=force_update;flow={flow_name};reason=flow_inactive")
            return
        router_id, neighbor_id = self.ids[router], self.ids[neighbor]
        update = FlowUpdate(flow.key_fwd, router_id, (router_id, neighbor_id),
                            server)
        self._log(server, "flow_update_sent",
                  f"flow={flow_name};label={flow.label}"
                  f";route=forced:{router}->{neighbor}")
        self._send_ctrl(server, router_id, update)

    # -- results ---------------------------------------------------------------------------

    def _pending_in_network(self) -> dict[str, dict[str, int]]:
        pending: dict[str, dict[str, int]] = {}
        for _, _, event in self._heap:
            if event.kind is not EventKind.PACKET_ARRIVAL:
                continue
            packet = event.payload["packet"]
            name = self._flow_of(packet)
            if name is None or packet.kind is PacketKind.CTRL:
                continue
            kind = "data" if packet.kind is PacketKind.DATA else "ack"
            pending.setdefault(name, {"data": 0, "ack": 0})
            pending[name][kind] += 1
        return pending

    def _result(self) -> RunResult:
        pending = self._pending_in_network()
        for name, counters in self.counters.items():
            for kind in ("data", "ack"):
                queued = pending.get(name, {}).get(kind, 0)
                if counters.in_network(kind) != queued:
                    raise AssertionError(
                        f"conservation violated for {name}/{kind}: "
                        f"{counters.in_network(kind)} != {queued}")
        samples: list[tp.ThroughputSample] = []
        for decl in self.scenario.flows:
            flow = self.flows[decl.name]
            samples.extend(tp.sample_throughput(
                decl.name, flow.timeline, self.window, self.sim.duration))
        tables = {}
        for node, router in self.routers.items():
            if router.flow_table:
                tables[self.names[node]] = {
                    (entry.key.label, str(entry.key.src), str(entry.key.dst)):
                        (self.names[entry.out_link[0]],
                         self.names[entry.out_link[1]])
                    for entry in router.flow_table.values()
                }
        return RunResult(
            scenario=self.scenario,
            mode=self.mode,
            seed=self.seed,
            sample_window=self.window,
            events=self.trace,
            samples=samples,
            counters=self.counters,
            fingerprint=self.scenario.fingerprint(),
            failure_time=_earliest_failure(self.scenario),
            dv_convergences=self.dv_convergences,
            flow_tables=tables,
        )


def run(scenario: Scenario, mode: str = ADAPTIVE, seed: int | None = None,
        sample_window: float | None = None) -> RunResult:
    """Execute one scenario to completion and return its full trace."""
    return Simulation(scenario, mode, seed, sample_window).run()
