"""Scenario files: a line-oriented declarative description of one experiment.

Grammar (also documented in the README):

    # comments and blank lines are ignored anywhere
    [sim]
    duration = 60.0            # required, seconds
    seed = 7                   # required, integer
    sample_window = 0.5        # throughput window, seconds
    dv_round_latency = 1.0     # simulated cost of one DV exchange
    queue_capacity = 50        # per-link packet queue
    jitter = 0.0               # per-link delay perturbation amplitude
    min_rto = 0.2              # TCP minimum retransmission timeout
    hop_limit = 64             # packet hop budget

    [nodes]                    # name kind; ids assigned in order, 0-based
    src host                   # kinds: host | router | adaptive_router
    r1  adaptive_router        #        | route_server

    [links]                    # a b bandwidth_kBps delay_s [nominal_s] [cost]
    src r1 500 0.002           # declares BOTH directions with equal attributes

    [profiles]                 # name p0 p_delay p_jitter p_hop p_money
    bulk 50 1 1 1 0

    [route_servers]            # node authorized interval threshold resp_latency
    rs yes 1.0 3 0.1

    [flows]                    # name src dst variant start stop profile [rs=node]
    f0 src dst reno 0.0 60 bulk       # variants: reno | tahoe | cbr:<kBps>

    [anycast_groups]           # group_name member_host...
    video m1 m2

    [actions]                  # time verb args...
    10.0 link_down a b         # pair down (both directions)
    12.0 link_up a b           # pair up
    10.0 one_link_down a b     # single direction (prototype compatibility)
    10.0 one_link_up a b
    15.0 exclude f0 m1         # source host closes the valve toward m1
    20.0 readmit f0 m1
    15.0 force_update rs2 f0 a c   # rs2 orders: at router a, send f0 via a->c

Parse errors cite line numbers.  Section order is free; unknown sections or
verbs are errors.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from .errors import ValidationError
from .metric import ParameterSet
from .route_server import RouteServerConfig
from .topology import NodeKind, Topology

_KIND_NAMES = {
    "host": NodeKind.HOST,
    "router": NodeKind.STANDARD_ROUTER,
    "adaptive_router": NodeKind.ADAPTIVE_ROUTER,
    "route_server": NodeKind.ROUTE_SERVER,
}
_KIND_LABELS = {v: k for k, v in _KIND_NAMES.items()}

_SECTIONS = ("sim", "nodes", "links", "profiles", "route_servers",
             "flows", "anycast_groups", "actions")

_ACTION_VERBS = {
    "link_down": 2,
    "link_up": 2,
    "one_link_down": 2,
    "one_link_up": 2,
    "exclude": 2,
    "readmit": 2,
    "force_update": 4,
}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class SimParams:
    duration: float
    seed: int
    sample_window: float = 0.5
    dv_round_latency: float = 1.0
    queue_capacity: int = 50
    jitter: float = 0.0
    min_rto: float = 0.2
    hop_limit: int = 64


@dataclass(frozen=True)
class NodeDecl:
    name: str
    kind: NodeKind
    line: int = 0


@dataclass(frozen=True)
class LinkDecl:
    a: str
    b: str
    bandwidth: float
    delay: float
    nominal_delay: float
    monetary_cost: float
    line: int = 0


@dataclass(frozen=True)
class RouteServerDecl:
    node: str
    config: RouteServerConfig
    line: int = 0


@dataclass(frozen=True)
class FlowDecl:
    name: str
    src: str
    dst: str  # node name or anycast group name
    variant: str  # "reno" | "tahoe" | "cbr"
    rate: float  # kB/s, cbr only
    start: float
    stop: float
    profile: str
    route_server: str | None = None
    line: int = 0


@dataclass(frozen=True)
class GroupDecl:
    name: str
    members: tuple[str, ...]
    line: int = 0


@dataclass(frozen=True)
class ScenarioAction:
    time: float
    verb: str
    args: tuple[str, ...]
    line: int = 0


@dataclass(frozen=True)
class Scenario:
    sim: SimParams
    nodes: tuple[NodeDecl, ...]
    links: tuple[LinkDecl, ...]
    profiles: dict[str, ParameterSet]
    route_servers: tuple[RouteServerDecl, ...]
    flows: tuple[FlowDecl, ...]
    groups: tuple[GroupDecl, ...]
    actions: tuple[ScenarioAction, ...] = ()

    def node_id(self, name: str) -> int:
        for i, decl in enumerate(self.nodes):
            if decl.name == name:
                return i
        raise KeyError(name)

    def node_name(self, node_id: int) -> str:
        return self.nodes[node_id].name

    def build_topology(self) -> Topology:
        topo = Topology()
        ids: dict[str, int] = {}
        for decl in self.nodes:
            ids[decl.name] = topo.add_node(decl.kind)
        for decl in self.links:
            topo.add_pair(ids[decl.a], ids[decl.b], decl.bandwidth,
                          decl.delay, decl.nominal_delay, decl.monetary_cost)
        return topo

    def inject_pair_failure(self, a: str, b: str, down_at: float,
                            up_at: float | None = None) -> "Scenario":
        """Schedule a pair teardown (and optional restoration) as actions.

        The same action list is replayed identically whatever routing mode a
        run uses, so failure conditions match across compared runs.
        """
        diags = []
        names = {d.name for d in self.nodes}
        if a not in names or b not in names:
            diags.append(Diagnostic(0, f"unknown node in pair ({a}, {b})"))
        elif not any({d.a, d.b} == {a, b} for d in self.links):
            diags.append(Diagnostic(0, f"no link pair between {a} and {b}"))
        if down_at < 0 or down_at > self.sim.duration:
            diags.append(Diagnostic(0, f"down_at {down_at} outside [0, duration]"))
        if up_at is not None and down_at >= up_at:
            diags.append(Diagnostic(0, f"down_at {down_at} must precede up_at {up_at}"))
        if up_at is not None and up_at > self.sim.duration:
            diags.append(Diagnostic(0, f"up_at {up_at} outside [0, duration]"))
        if diags:
            raise ValidationError(diags)
        actions = list(self.actions)
        actions.append(ScenarioAction(down_at, "link_down", (a, b)))
        if up_at is not None:
            actions.append(ScenarioAction(up_at, "link_up", (a, b)))
        return replace(self, actions=tuple(actions))

    def fingerprint(self) -> str:
        """Digest of topology, flows, and actions; seed is excluded so runs
        that differ only by seed or mode still compare."""
        text = to_text(replace(self, sim=replace(self.sim, seed=0)))
        return hashlib.sha256(text.encode()).hexdigest()


# -- parsing ----------------------------------------------------------------


def _parse_number(token, line, diags, what):
    try:
        return float(token)
    except ValueError:
        diags.append(Diagnostic(line, f"{what}: not a number: {token!r}"))
        return None


def loads(text: str) -> Scenario:
    """Parse scenario text; raises ValidationError with line diagnostics."""
    diags: list[Diagnostic] = []
    sim_values: dict[str, str] = {}
    sim_lines: dict[str, int] = {}
    nodes: list[NodeDecl] = []
    links: list[LinkDecl] = []
    profiles: dict[str, ParameterSet] = {}
    servers: list[RouteServerDecl] = []
    flows: list[FlowDecl] = []
    groups: list[GroupDecl] = []
    actions: list[ScenarioAction] = []

    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                diags.append(Diagnostic(lineno, f"unknown section [{section}]"))
                section = None
            continue
        if section is None:
            diags.append(Diagnostic(lineno, "content outside any section"))
            continue
        tokens = line.split()

        if section == "sim":
            if "=" not in line:
                diags.append(Diagnostic(lineno, "expected key = value"))
                continue
            key, _, value = line.partition("=")
            sim_values[key.strip()] = value.strip()
            sim_lines[key.strip()] = lineno

        elif section == "nodes":
            if len(tokens) != 2:
                diags.append(Diagnostic(lineno, "expected: name kind"))
                continue
            name, kind_name = tokens
            if kind_name not in _KIND_NAMES:
                diags.append(Diagnostic(lineno, f"unknown node kind {kind_name!r}"))
                continue
            if any(d.name == name for d in nodes):
                diags.append(Diagnostic(lineno, f"duplicate node name {name!r}"))
                continue
            nodes.append(NodeDecl(name, _KIND_NAMES[kind_name], lineno))

        elif section == "links":
            if len(tokens) < 4 or len(tokens) > 6:
                diags.append(Diagnostic(
                    lineno, "expected: a b bandwidth delay [nominal] [cost]"))
                continue
            a, b = tokens[0], tokens[1]
            values = [_parse_number(t, lineno, diags, "link attribute")
                      for t in tokens[2:]]
            if any(v is None for v in values):
                continue
            bandwidth, delay = values[0], values[1]
            nominal = values[2] if len(values) > 2 else delay
            cost = values[3] if len(values) > 3 else 0.0
            links.append(LinkDecl(a, b, bandwidth, delay, nominal, cost, lineno))

        elif section == "profiles":
            if len(tokens) != 6:
                diags.append(Diagnostic(
                    lineno, "expected: name p0 p_delay p_jitter p_hop p_money"))
                continue
            values = [_parse_number(t, lineno, diags, "profile weight")
                      for t in tokens[1:]]
            if any(v is None for v in values):
                continue
            try:
                profiles[tokens[0]] = ParameterSet(*values)
            except ValueError as exc:
                diags.append(Diagnostic(lineno, str(exc)))

        elif section == "route_servers":
            if len(tokens) != 5:
                diags.append(Diagnostic(
                    lineno,
                    "expected: node authorized interval threshold response_latency"))
                continue
            if tokens[1] not in ("yes", "no"):
                diags.append(Diagnostic(lineno, "authorized must be yes or no"))
                continue
            interval = _parse_number(tokens[2], lineno, diags, "interval")
            threshold = _parse_number(tokens[3], lineno, diags, "threshold")
            latency = _parse_number(tokens[4], lineno, diags, "response_latency")
            if None in (interval, threshold, latency):
                continue
            try:
                config = RouteServerConfig(tokens[1] == "yes", interval,
                                           int(threshold), latency)
            except ValueError as exc:
                diags.append(Diagnostic(lineno, str(exc)))
                continue
            servers.append(RouteServerDecl(tokens[0], config, lineno))

        elif section == "flows":
            if len(tokens) < 7 or len(tokens) > 8:
                diags.append(Diagnostic(
                    lineno,
                    "expected: name src dst variant start stop profile [rs=node]"))
                continue
            name, src, dst, variant = tokens[0], tokens[1], tokens[2], tokens[3]
            start = _parse_number(tokens[4], lineno, diags, "flow start")
            stop = _parse_number(tokens[5], lineno, diags, "flow stop")
            profile = tokens[6]
            server = None
            if len(tokens) == 8:
                if not tokens[7].startswith("rs="):
                    diags.append(Diagnostic(lineno, "trailing field must be rs=<node>"))
                    continue
                server = tokens[7][3:]
            rate = 0.0
            if variant.startswith("cbr:"):
                parsed = _parse_number(variant[4:], lineno, diags, "cbr rate")
                if parsed is None:
                    continue
                rate = parsed
                variant = "cbr"
            if variant not in ("reno", "tahoe", "cbr"):
                diags.append(Diagnostic(lineno, f"unknown variant {tokens[3]!r}"))
                continue
            if variant == "cbr" and rate <= 0:
                diags.append(Diagnostic(lineno, "cbr rate must be positive"))
                continue
            if None in (start, stop):
                continue
            flows.append(FlowDecl(name, src, dst, variant, rate, start, stop,
                                  profile, server, lineno))

        elif section == "anycast_groups":
            if len(tokens) < 2:
                diags.append(Diagnostic(lineno, "expected: group member..."))
                continue
            groups.append(GroupDecl(tokens[0], tuple(tokens[1:]), lineno))

        elif section == "actions":
            if len(tokens) < 2:
                diags.append(Diagnostic(lineno, "expected: time verb args..."))
                continue
            time = _parse_number(tokens[0], lineno, diags, "action time")
            if time is None:
                continue
            verb = tokens[1]
            args = tuple(tokens[2:])
            if verb not in _ACTION_VERBS:
                diags.append(Diagnostic(lineno, f"unknown action verb {verb!r}"))
                continue
            if len(args) != _ACTION_VERBS[verb]:
                diags.append(Diagnostic(
                    lineno, f"{verb} takes {_ACTION_VERBS[verb]} arguments"))
                continue
            actions.append(ScenarioAction(time, verb, args, lineno))

    # [sim] assembly
    def sim_value(key, cast, default, required=False):
        if key not in sim_values:
            if required:
                diags.append(Diagnostic(0, f"[sim] missing required key {key!r}"))
            return default
        try:
            return cast(sim_values[key])
        except ValueError:
            diags.append(Diagnostic(sim_lines[key], f"[sim] bad value for {key!r}"))
            return default

    sim = SimParams(
        duration=sim_value("duration", float, 0.0, required=True),
        seed=sim_value("seed", int, 0, required=True),
        sample_window=sim_value("sample_window", float, 0.5),
        dv_round_latency=sim_value("dv_round_latency", float, 1.0),
        queue_capacity=sim_value("queue_capacity", int, 50),
        jitter=sim_value("jitter", float, 0.0),
        min_rto=sim_value("min_rto", float, 0.2),
        hop_limit=sim_value("hop_limit", int, 64),
    )
    known_sim_keys = {"duration", "seed", "sample_window", "dv_round_latency",
                      "queue_capacity", "jitter", "min_rto", "hop_limit"}
    for key in sim_values:
        if key not in known_sim_keys:
            diags.append(Diagnostic(sim_lines[key], f"[sim] unknown key {key!r}"))

    scenario = Scenario(sim, tuple(nodes), tuple(links), profiles,
                        tuple(servers), tuple(flows), tuple(groups),
                        tuple(actions))
    diags.extend(validate(scenario))
    if diags:
        diags.sort(key=lambda d: d.line)
        raise ValidationError(diags)
    return scenario


def load(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


# -- validation ---------------------------------------------------------------


def validate(scenario: Scenario) -> list[Diagnostic]:
    """Cross-reference checks; parsing already handled per-line syntax."""
    diags: list[Diagnostic] = []
    names = {d.name: d for d in scenario.nodes}
    group_names = {g.name for g in scenario.groups}
    flow_names = set()

    if scenario.sim.duration <= 0:
        diags.append(Diagnostic(0, "[sim] duration must be positive"))
    if scenario.sim.sample_window <= 0:
        diags.append(Diagnostic(0, "[sim] sample_window must be positive"))
    if scenario.sim.dv_round_latency <= 0:
        diags.append(Diagnostic(0, "[sim] dv_round_latency must be positive"))
    if scenario.sim.queue_capacity < 1:
        diags.append(Diagnostic(0, "[sim] queue_capacity must be at least 1"))

    seen_pairs = set()
    for link in scenario.links:
        for end in (link.a, link.b):
            if end not in names:
                diags.append(Diagnostic(link.line, f"unknown node {end!r}"))
        if link.a == link.b:
            diags.append(Diagnostic(link.line, "link endpoints must differ"))
        pair = frozenset((link.a, link.b))
        if pair in seen_pairs:
            diags.append(Diagnostic(link.line,
                                    f"duplicate link pair {link.a} {link.b}"))
        seen_pairs.add(pair)
        if link.bandwidth <= 0:
            diags.append(Diagnostic(link.line, "bandwidth must be positive"))
        if link.delay < 0 or link.nominal_delay < 0 or link.monetary_cost < 0:
            diags.append(Diagnostic(link.line, "link attributes must be nonnegative"))

    for server in scenario.route_servers:
        decl = names.get(server.node)
        if decl is None:
            diags.append(Diagnostic(server.line, f"unknown node {server.node!r}"))
        elif decl.kind is not NodeKind.ROUTE_SERVER:
            diags.append(Diagnostic(server.line,
                                    f"{server.node!r} is not a route_server node"))

    configured_servers = {s.node for s in scenario.route_servers}

    for group in scenario.groups:
        if group.name in names:
            diags.append(Diagnostic(group.line,
                                    f"group name {group.name!r} collides with a node"))
        if len(set(group.members)) != len(group.members):
            diags.append(Diagnostic(group.line, "duplicate group member"))
        for member in group.members:
            decl = names.get(member)
            if decl is None:
                diags.append(Diagnostic(group.line, f"unknown member {member!r}"))
            elif decl.kind is not NodeKind.HOST:
                diags.append(Diagnostic(group.line,
                                        f"member {member!r} must be a host"))

    for flow in scenario.flows:
        if flow.name in flow_names:
            diags.append(Diagnostic(flow.line, f"duplicate flow name {flow.name!r}"))
        flow_names.add(flow.name)
        src = names.get(flow.src)
        if src is None:
            diags.append(Diagnostic(flow.line, f"unknown node {flow.src!r}"))
        elif src.kind is not NodeKind.HOST:
            diags.append(Diagnostic(flow.line, "flow source must be a host"))
        if flow.dst in group_names:
            pass
        elif flow.dst in names:
            if names[flow.dst].kind is not NodeKind.HOST:
                diags.append(Diagnostic(flow.line, "flow destination must be a host"))
            if flow.dst == flow.src:
                diags.append(Diagnostic(flow.line, "flow endpoints must differ"))
        else:
            diags.append(Diagnostic(flow.line,
                                    f"unknown destination {flow.dst!r}"))
        if flow.profile not in scenario.profiles:
            diags.append(Diagnostic(flow.line, f"unknown profile {flow.profile!r}"))
        if flow.start < 0 or flow.start >= flow.stop:
            diags.append(Diagnostic(flow.line, "flow start must be in [0, stop)"))
        if flow.route_server is not None and flow.route_server not in configured_servers:
            diags.append(Diagnostic(flow.line,
                                    f"unknown route server {flow.route_server!r}"))

    flow_by_name = {f.name: f for f in scenario.flows}
    group_by_name = {g.name: g for g in scenario.groups}
    for action in scenario.actions:
        if action.time < 0 or action.time > scenario.sim.duration:
            diags.append(Diagnostic(action.line,
                                    "action time outside [0, duration]"))
        if action.verb in ("link_down", "link_up", "one_link_down", "one_link_up"):
            a, b = action.args
            if a not in names or b not in names:
                diags.append(Diagnostic(action.line, f"unknown node in {action.args}"))
            elif not any({d.a, d.b} == {a, b} for d in scenario.links):
                diags.append(Diagnostic(action.line, f"no link between {a} and {b}"))
        elif action.verb in ("exclude", "readmit"):
            flow_name, member = action.args
            flow = flow_by_name.get(flow_name)
            if flow is None:
                diags.append(Diagnostic(action.line, f"unknown flow {flow_name!r}"))
            elif flow.dst not in group_by_name:
                diags.append(Diagnostic(action.line,
                                        f"flow {flow_name!r} has no anycast destination"))
            elif member not in group_by_name[flow.dst].members:
                diags.append(Diagnostic(action.line,
                                        f"{member!r} is not a member of {flow.dst!r}"))
        elif action.verb == "force_update":
            server, flow_name, router, neighbor = action.args
            if server not in configured_servers:
                diags.append(Diagnostic(action.line,
                                        f"unknown route server {server!r}"))
            if flow_name not in flow_by_name:
                diags.append(Diagnostic(action.line, f"unknown flow {flow_name!r}"))
            for end in (router, neighbor):
                if end not in names:
                    diags.append(Diagnostic(action.line, f"unknown node {end!r}"))
            if (router in names and neighbor in names
                    and not any({d.a, d.b} == {router, neighbor}
                                for d in scenario.links)):
                diags.append(Diagnostic(action.line,
                                        f"no link between {router} and {neighbor}"))
    return diags


# -- serialization ------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(value)


def to_text(scenario: Scenario) -> str:
    """Render a scenario back to its file form (parse . to_text = identity
    up to comments and spacing)."""
    out = []
    out.append("[sim]")
    s = scenario.sim
    out.append(f"duration = {_fmt(s.duration)}")
    out.append(f"seed = {s.seed}")
    out.append(f"sample_window = {_fmt(s.sample_window)}")
    out.append(f"dv_round_latency = {_fmt(s.dv_round_latency)}")
    out.append(f"queue_capacity = {s.queue_capacity}")
    out.append(f"jitter = {_fmt(s.jitter)}")
    out.append(f"min_rto = {_fmt(s.min_rto)}")
    out.append(f"hop_limit = {s.hop_limit}")
    out.append("")
    out.append("[nodes]")
    for decl in scenario.nodes:
        out.append(f"{decl.name} {_KIND_LABELS[decl.kind]}")
    out.append("")
    out.append("[links]")
    for link in scenario.links:
        out.append(f"{link.a} {link.b} {_fmt(link.bandwidth)} {_fmt(link.delay)}"
                   f" {_fmt(link.nominal_delay)} {_fmt(link.monetary_cost)}")
    out.append("")
    out.append("[profiles]")
    for name, p in scenario.profiles.items():
        out.append(f"{name} {_fmt(p.p0)} {_fmt(p.p_delay)} {_fmt(p.p_jitter)}"
                   f" {_fmt(p.p_hop)} {_fmt(p.p_money)}")
    out.append("")
    if scenario.route_servers:
        out.append("[route_servers]")
        for server in scenario.route_servers:
            c = server.config
            out.append(f"{server.node} {'yes' if c.authorized else 'no'}"
                       f" {_fmt(c.keepalive_interval)} {c.keepalive_threshold}"
                       f" {_fmt(c.response_latency)}")
        out.append("")
    out.append("[flows]")
    for flow in scenario.flows:
        variant = flow.variant if flow.variant != "cbr" else f"cbr:{_fmt(flow.rate)}"
        line = (f"{flow.name} {flow.src} {flow.dst} {variant}"
                f" {_fmt(flow.start)} {_fmt(flow.stop)} {flow.profile}")
        if flow.route_server is not None:
            line += f" rs={flow.route_server}"
        out.append(line)
    out.append("")
    if scenario.groups:
        out.append("[anycast_groups]")
        for group in scenario.groups:
            out.append(f"{group.name} {' '.join(group.members)}")
        out.append("")
    if scenario.actions:
        out.append("[actions]")
        for action in scenario.actions:
            out.append(f"{_fmt(action.time)} {action.verb} {' '.join(action.args)}")
        out.append("")
    return "\n".join(out)
