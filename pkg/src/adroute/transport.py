"""Traffic sources: simplified Reno and Tahoe senders and a constant-rate one.

Segments have a fixed size and windows count segments, which keeps the
congestion arithmetic exact.  The receiver window is unbounded; loss
recovery is what the experiments measure, not flow control.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

SEGMENT_BYTES = 1000
RTO_GRANULARITY = 0.010  # seconds
RTO_MAX = 64.0
DUPACK_THRESHOLD = 3


class TcpVariant(Enum):
    RENO = "reno"
    TAHOE = "tahoe"


class SenderPhase(Enum):
    SLOW_START = "slow-start"
    CONGESTION_AVOIDANCE = "congestion-avoidance"
    FAST_RECOVERY = "fast-recovery"


@dataclass(frozen=True)
class TcpSenderState:
    variant: TcpVariant
    cwnd: float = 1.0  # segments
    ssthresh: float = 64.0  # segments
    rto: float = 1.0  # seconds, current value including backoff
    dupacks: int = 0
    next_seq: int = 0
    high_ack: int = 0
    phase: SenderPhase = SenderPhase.SLOW_START
    recover: int = 0  # highest seq outstanding when recovery began
    srtt: float | None = None
    rttvar: float = 0.0
    min_rto: float = 1.0

    @property
    def in_flight(self) -> int:
        return self.next_seq - self.high_ack


@dataclass(frozen=True)
class AckOutcome:
    state: TcpSenderState
    retransmit: int | None = None  # seq to resend immediately


def window_allowance(state: TcpSenderState) -> int:
    """How many new segments the window permits right now."""
    return max(0, int(state.cwnd) - state.in_flight)


def _enter_loss_recovery(state: TcpSenderState) -> TcpSenderState:
    ssthresh = max(state.cwnd / 2.0, 2.0)
    if state.variant is TcpVariant.RENO:
        # Halve and inflate by the three duplicates already seen.
        return replace(state, ssthresh=ssthresh, cwnd=ssthresh + 3.0,
                       phase=SenderPhase.FAST_RECOVERY, recover=state.next_seq,
                       dupacks=0)
    return replace(state, ssthresh=ssthresh, cwnd=1.0,
                   phase=SenderPhase.SLOW_START, recover=state.next_seq,
                   dupacks=0)


def on_ack(state: TcpSenderState, ack_seq: int) -> AckOutcome:
    """Advance the sender for one cumulative acknowledgment.

    New acknowledgments grow the window (one segment per ack in slow start,
    1/cwnd in congestion avoidance); the third duplicate triggers a
    retransmission, halving into fast recovery for Reno and restarting slow
    start for Tahoe.
    """
    if ack_seq < state.high_ack:
        raise ValueError("cumulative acknowledgments never decrease")

    if ack_seq == state.high_ack:
        if state.in_flight == 0:
            return AckOutcome(state)
        if state.phase is SenderPhase.FAST_RECOVERY:
            # Each further duplicate signals one more segment has left the pipe.
            return AckOutcome(replace(state, cwnd=state.cwnd + 1.0))
        dupacks = state.dupacks + 1
        if dupacks < DUPACK_THRESHOLD:
            return AckOutcome(replace(state, dupacks=dupacks))
        new = _enter_loss_recovery(replace(state, dupacks=dupacks))
        return AckOutcome(new, retransmit=state.high_ack)

    # Fresh data acknowledged.
    state = replace(state, high_ack=ack_seq, dupacks=0,
                    next_seq=max(state.next_seq, ack_seq))
    if state.phase is SenderPhase.FAST_RECOVERY:
        # Deflate back to the halved window once the retransmission is covered.
        state = replace(state, cwnd=state.ssthresh,
                        phase=SenderPhase.CONGESTION_AVOIDANCE)
        return AckOutcome(state)
    if state.phase is SenderPhase.SLOW_START and state.cwnd < state.ssthresh:
        state = replace(state, cwnd=state.cwnd + 1.0)
        if state.cwnd >= state.ssthresh:
            state = replace(state, phase=SenderPhase.CONGESTION_AVOIDANCE)
    else:
        state = replace(state, cwnd=state.cwnd + 1.0 / state.cwnd,
                        phase=SenderPhase.CONGESTION_AVOIDANCE)
    return AckOutcome(state)


def on_timeout(state: TcpSenderState) -> tuple[TcpSenderState, int]:
    """Retransmission timeout: collapse the window and back off the timer.

    Recovery is go-back-n: the send cursor rewinds to the oldest unacked
    segment, so the window retransmits forward from the hole (cumulative
    acks then skip over whatever the receiver already buffered).
    """
    ssthresh = max(state.in_flight / 2.0, 2.0)
    new = replace(
        state,
        ssthresh=ssthresh,
        cwnd=1.0,
        rto=min(RTO_MAX, state.rto * 2.0),
        dupacks=0,
        phase=SenderPhase.SLOW_START,
        next_seq=state.high_ack,
    )
    return new, state.high_ack


def on_rtt_sample(state: TcpSenderState, sample: float) -> TcpSenderState:
    """Fold one round-trip sample into the smoothed timeout estimate."""
    if state.srtt is None:
        srtt = sample
        rttvar = sample / 2.0
    else:
        rttvar = 0.75 * state.rttvar + 0.25 * abs(state.srtt - sample)
        srtt = 0.875 * state.srtt + 0.125 * sample
    rto = srtt + max(RTO_GRANULARITY, 4.0 * rttvar)
    rto = min(RTO_MAX, max(state.min_rto, rto))
    return replace(state, srtt=srtt, rttvar=rttvar, rto=rto)


@dataclass
class TcpReceiverState:
    """Delivers a contiguous prefix; acks cumulatively on every arrival."""

    next_expected: int = 0
    buffered: set[int] = field(default_factory=set)

    def on_data(self, seq: int) -> int:
        """Accept one segment, return the cumulative ack to emit."""
        if seq >= self.next_expected:
            self.buffered.add(seq)
        while self.next_expected in self.buffered:
            self.buffered.discard(self.next_expected)
            self.next_expected += 1
        return self.next_expected


@dataclass(frozen=True)
class ThroughputSample:
    flow: str
    window_start: float
    window_len: float
    bytes_acked: int

    @property
    def throughput(self) -> float:
        """kB/s over the window."""
        return self.bytes_acked / 1000.0 / self.window_len


def sample_throughput(flow: str, increments: list[tuple[float, int]],
                      window_len: float, duration: float) -> list[ThroughputSample]:
    """One sample per consecutive window over [0, duration).

    Increments are (time, bytes) pairs in nondecreasing time order; windows
    with no progress still produce a zero sample.
    """
    if window_len <= 0:
        raise ValueError("window_len must be positive")
    n_windows = int(duration / window_len)
    if n_windows * window_len < duration:
        n_windows += 1
    totals = [0] * n_windows
    for t, nbytes in increments:
        idx = int(t / window_len)
        if 0 <= idx < n_windows:
            totals[idx] += nbytes
    return [
        ThroughputSample(flow, i * window_len, window_len, totals[i])
        for i in range(n_windows)
    ]
