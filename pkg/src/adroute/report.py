"""Recovery analysis and artifact rendering for simulation runs.

A flow "recovers" when its windowed throughput climbs back to at least half
its pre-failure mean after having dipped below that threshold; the recovery
time is measured from the failure instant to the start of the first window
at or above the threshold again.  A run that never dips has recovered
instantly; a run that never climbs back did not recover.
"""
from __future__ import annotations

from dataclasses import dataclass

from .engine import RunResult
from .errors import MismatchedScenarios

RECOVERY_FRACTION = 0.5


@dataclass(frozen=True)
class FlowReport:
    flow: str
    total_bytes: int
    pre_failure_mean: float | None  # kB/s; None when the scenario never fails
    threshold: float | None
    outage_start: float | None  # first sub-threshold window start
    recovery_time: float | None  # seconds after the failure; None = never
    outage_duration: float | None


def analyze_flow(samples, failure_time: float | None) -> FlowReport:
    """Windowed recovery statistics for one flow's samples."""
    flow = samples[0].flow
    total = sum(s.bytes_acked for s in samples)
    if failure_time is None:
        return FlowReport(flow, total, None, None, None, None, None)
    pre = [s.throughput for s in samples if s.window_start < failure_time]
    pre_mean = sum(pre) / len(pre) if pre else 0.0
    threshold = RECOVERY_FRACTION * pre_mean
    post = [s for s in samples if s.window_start >= failure_time]
    outage_start = None
    recovery_time = None
    for sample in post:
        if outage_start is None:
            if sample.throughput < threshold:
                outage_start = sample.window_start
        elif sample.throughput >= threshold:
            recovery_time = sample.window_start - failure_time
            break
    if outage_start is None:
        return FlowReport(flow, total, pre_mean, threshold, None, 0.0, 0.0)
    if recovery_time is None:
        return FlowReport(flow, total, pre_mean, threshold, outage_start,
                          None, None)
    outage = recovery_time + failure_time - outage_start
    return FlowReport(flow, total, pre_mean, threshold, outage_start,
                      recovery_time, outage)


def flow_reports(result: RunResult) -> list[FlowReport]:
    by_flow: dict[str, list] = {}
    for sample in result.samples:
        by_flow.setdefault(sample.flow, []).append(sample)
    return [analyze_flow(samples, result.failure_time)
            for samples in by_flow.values()]


def _fmt_time(value: float | None) -> str:
    return "none" if value is None else f"{value:.6f}"


def render_summary(result: RunResult) -> str:
    """Human-readable recovery report, stable byte for byte per run."""
    lines = []
    lines.append(f"mode: {result.mode}")
    lines.append(f"seed: {result.seed}")
    lines.append(f"duration: {result.scenario.sim.duration:.6f}")
    lines.append(f"sample_window: {result.sample_window:.6f}")
    lines.append(f"failure_time: {_fmt_time(result.failure_time)}")
    for time, rounds in result.dv_convergences:
        lines.append(f"dv_reconvergence: at={time:.6f} rounds={rounds}")
    for report in flow_reports(result):
        lines.append(f"flow {report.flow}:")
        lines.append(f"  total_bytes: {report.total_bytes}")
        if report.pre_failure_mean is None:
            lines.append("  recovery: n/a (no failure scripted)")
        else:
            lines.append(f"  pre_failure_mean_kBps: {report.pre_failure_mean:.6f}")
            lines.append(f"  recovery_threshold_kBps: {report.threshold:.6f}")
            lines.append(f"  outage_start: {_fmt_time(report.outage_start)}")
            lines.append(f"  recovery_time: {_fmt_time(report.recovery_time)}")
            lines.append(f"  outage_duration: {_fmt_time(report.outage_duration)}")
        counters = result.counters[report.flow]
        lines.append(
            "  data: sent={} delivered={} dropped={} in_network={}".format(
                counters.data_sent, counters.data_delivered,
                counters.data_dropped, counters.in_network("data")))
        lines.append(
            "  ack: sent={} delivered={} dropped={} in_network={}".format(
                counters.ack_sent, counters.ack_delivered,
                counters.ack_dropped, counters.in_network("ack")))
    return "\n".join(lines) + "\n"


def events_csv(result: RunResult) -> str:
    lines = ["time,node,kind,detail"]
    for event in result.events:
        lines.append(f"{event.time:.6f},{event.node},{event.kind},{event.detail}")
    return "\n".join(lines) + "\n"


def throughput_csv(result: RunResult) -> str:
    lines = ["time,flow,bytes,rate"]
    order = {decl.name: i for i, decl in enumerate(result.scenario.flows)}
    samples = sorted(result.samples,
                     key=lambda s: (s.window_start, order[s.flow]))
    for sample in samples:
        lines.append(f"{sample.window_start:.6f},{sample.flow},"
                     f"{sample.bytes_acked},{sample.throughput:.6f}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FlowComparison:
    flow: str
    recovery_a: float | None
    recovery_b: float | None
    bytes_a: int
    bytes_b: int


def compare_runs(a: RunResult, b: RunResult) -> list[FlowComparison]:
    """Per-flow recovery comparison; both runs must replay the same scenario."""
    if a.fingerprint != b.fingerprint:
        raise MismatchedScenarios(
            "runs come from different topologies or action lists")
    reports_a = {r.flow: r for r in flow_reports(a)}
    reports_b = {r.flow: r for r in flow_reports(b)}
    comparisons = []
    for decl in a.scenario.flows:
        ra, rb = reports_a[decl.name], reports_b[decl.name]
        comparisons.append(FlowComparison(decl.name, ra.recovery_time,
                                          rb.recovery_time, ra.total_bytes,
                                          rb.total_bytes))
    return comparisons


def render_comparison(label_a: str, a: RunResult, label_b: str,
                      b: RunResult) -> str:
    lines = [f"comparison: {label_a} vs {label_b}"]
    for comp in compare_runs(a, b):
        lines.append(f"flow {comp.flow}:")
        lines.append(f"  recovery_{label_a}: {_fmt_time(comp.recovery_a)}")
        lines.append(f"  recovery_{label_b}: {_fmt_time(comp.recovery_b)}")
        if comp.recovery_a is not None and comp.recovery_b is not None:
            delta = comp.recovery_b - comp.recovery_a
            lines.append(f"  recovery_delta: {delta:.6f}")
        lines.append(f"  bytes_{label_a}: {comp.bytes_a}")
        lines.append(f"  bytes_{label_b}: {comp.bytes_b}")
    return "\n".join(lines) + "\n"
