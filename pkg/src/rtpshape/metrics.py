"""Stream measurements: RFC 3550 interarrival jitter, min-referenced packet
delay variation, wrap-aware loss, windowed throughput, and before/after
shaping comparisons.

Everything is computed in exact integer/rational arithmetic; decimal
rendering happens only at the report boundary (format_decimal).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import SEQ_MOD, MediaPacket, StreamTrace
from .shaping import ShapeResult


class MetricPreconditionError(ValueError):
    """Trace lacks the timestamps a metric needs."""


class InsufficientDataError(ValueError):
    """Too few packets for the metric."""


class InconsistentInputError(ValueError):
    """Comparison inputs do not describe the same packets."""


@dataclass(frozen=True)
class MetricsReport:
    jitter_series: Optional[tuple[tuple[int, Fraction], ...]]
    jitter_final_us: Optional[Fraction]
    pdv_per_packet_us: Optional[tuple[int, ...]]
    pdv_stats: Optional[dict]  # min/max/mean/p50/p99 in us (mean is a Fraction)
    loss_count: int
    loss_rate: Fraction
    duplicate_count: int
    throughput_series: tuple[tuple[int, int], ...]
    total_bytes: int
    total_packets: int
    duration_us: int


@dataclass(frozen=True)
class ComparisonReport:
    before: MetricsReport
    after: MetricsReport
    pdv_max_reduction_pct: Optional[Fraction]  # None = undefined (before is 0)
    jitter_final_reduction_pct: Optional[Fraction]
    added_latency_mean_us: Fraction
    added_latency_max_us: int
    drops_introduced: int


def _require_both_ts(trace: StreamTrace) -> None:
    for i, p in enumerate(trace.packets):
        if p.recv_ts_us is None:
            raise MetricPreconditionError(f"packet {i} has no recv_ts_us")


def interarrival_jitter(trace: StreamTrace) -> tuple[tuple[tuple[int, Fraction], ...], Fraction]:
    """RFC 3550 smoothed interarrival jitter in microseconds, exact rationals.

    D(i-1, i) = (R_i - R_{i-1}) - (S_i - S_{i-1}); J <- J + (|D| - J) / 16.
    Returns the per-packet running series (one entry per difference) and the
    final value.
    """
    if len(trace.packets) < 2:
        raise InsufficientDataError("interarrival jitter needs at least 2 packets")
    _require_both_ts(trace)
    series: list[tuple[int, Fraction]] = []
    j = Fraction(0)
    prev = trace.packets[0]
    for i, p in enumerate(trace.packets[1:], start=1):
        d = (p.recv_ts_us - prev.recv_ts_us) - (p.send_ts_us - prev.send_ts_us)
        j = j + (abs(d) - j) / 16
        series.append((i, j))
        prev = p
    return tuple(series), j


def _nearest_rank(sorted_values: list[int], pct: int) -> int:
    n = len(sorted_values)
    rank = -(-pct * n // 100)  # ceil(pct/100 * n)
    return sorted_values[max(rank, 1) - 1]


def pdv(trace: StreamTrace) -> tuple[tuple[int, ...], dict]:
    """Min-referenced packet delay variation: one-way delay minus the trace
    minimum, per packet, plus nearest-rank summary stats."""
    if not trace.packets:
        raise InsufficientDataError("pdv needs at least 1 packet")
    _require_both_ts(trace)
    delays = [p.recv_ts_us - p.send_ts_us for p in trace.packets]
    base = min(delays)
    values = [d - base for d in delays]
    ordered = sorted(values)
    stats = {
        "min": ordered[0],
        "max": ordered[-1],
        "mean": Fraction(sum(values), len(values)),
        "p50": _nearest_rank(ordered, 50),
        "p99": _nearest_rank(ordered, 99),
    }
    return tuple(values), stats


def _extended_seqs(packets: tuple[MediaPacket, ...]) -> list[int]:
    ext = [packets[0].seq]
    for p in packets[1:]:
        diff = (p.seq - ext[-1]) % SEQ_MOD
        if diff < SEQ_MOD // 2:
            ext.append(ext[-1] + diff)
        else:
            ext.append(ext[-1] - (SEQ_MOD - diff))
    return ext


def loss(trace: StreamTrace) -> tuple[int, Fraction, int]:
    """Wrap-aware loss: (loss_count, loss_rate, duplicate_count).

    The expected count spans the observed extended sequence range; duplicate
    sequence numbers count once.
    """
    if not trace.packets:
        raise InsufficientDataError("loss needs at least 1 packet")
    ext = _extended_seqs(trace.packets)
    unique = len(set(ext))
    expected = max(ext) - min(ext) + 1
    loss_count = expected - unique
    duplicates = len(ext) - unique
    return loss_count, Fraction(loss_count, expected), duplicates


def throughput(trace: StreamTrace, window_us: int) -> tuple[tuple[int, int], ...]:
    """Bytes per half-open window [k*w, (k+1)*w) over the active timestamp.

    Only windows containing at least one packet appear in the series.
    """
    if window_us < 1:
        raise ValueError("window_us must be >= 1")
    if not trace.packets:
        return ()
    buckets: dict[int, int] = {}
    for p, ts in zip(trace.packets, trace.active_timestamps()):
        buckets[ts // window_us] = buckets.get(ts // window_us, 0) + p.size_bytes
    return tuple((k * window_us, buckets[k]) for k in sorted(buckets))


def metrics_report(trace: StreamTrace, window_us: int = 10**6) -> MetricsReport:
    """Full per-trace report; jitter/PDV degrade to None when a trace cannot
    support them (too few packets, missing arrival timestamps)."""
    if not trace.packets:
        raise InsufficientDataError("metrics need at least 1 packet")
    try:
        jitter_series, jitter_final = interarrival_jitter(trace)
    except (InsufficientDataError, MetricPreconditionError):
        jitter_series, jitter_final = None, None
    try:
        pdv_values, pdv_stats = pdv(trace)
    except (InsufficientDataError, MetricPreconditionError):
        pdv_values, pdv_stats = None, None
    loss_count, loss_rate, duplicates = loss(trace)
    ts = trace.active_timestamps()
    return MetricsReport(
        jitter_series=jitter_series,
        jitter_final_us=jitter_final,
        pdv_per_packet_us=pdv_values,
        pdv_stats=pdv_stats,
        loss_count=loss_count,
        loss_rate=loss_rate,
        duplicate_count=duplicates,
        throughput_series=throughput(trace, window_us),
        total_bytes=sum(p.size_bytes for p in trace.packets),
        total_packets=len(trace.packets),
        duration_us=ts[-1] - ts[0],
    )


def _reduction_pct(before, after) -> Optional[Fraction]:
    if before is None or after is None or before == 0:
        return None
    return Fraction(before - after, before) * 100


def compare(before: StreamTrace, result: ShapeResult,
            window_us: int = 10**6) -> ComparisonReport:
    """Quantify what shaping did: metrics before vs after, added latency per
    surviving packet (matched by ssrc/seq), and drops introduced.

    The after-trace keeps the original send timestamps and takes the shaper
    departure times as arrivals, so jitter/PDV measure end-to-end delay
    variation after shaping.
    """
    by_identity = {(p.ssrc, p.seq): p for p in before.packets}
    if len(by_identity) != len(before.packets):
        raise InconsistentInputError("before trace has duplicate (ssrc, seq) identities")
    _require_both_ts(before)

    after_packets = []
    added: list[int] = []
    for p in result.shaped.packets:
        orig = by_identity.get((p.ssrc, p.seq))
        if orig is None:
            raise InconsistentInputError(f"shaped packet (ssrc {p.ssrc}, seq {p.seq}) "
                                         "not present in the before trace")
        after_packets.append(p._replace(send_ts_us=orig.send_ts_us))
        added.append(p.recv_ts_us - orig.recv_ts_us)

    after = StreamTrace(kind=before.kind, packets=tuple(after_packets),
                        clock_resolution_us=before.clock_resolution_us)
    before_report = metrics_report(before, window_us)
    after_report = metrics_report(after, window_us)
    pdv_before = before_report.pdv_stats["max"] if before_report.pdv_stats else None
    pdv_after = after_report.pdv_stats["max"] if after_report.pdv_stats else None
    return ComparisonReport(
        before=before_report,
        after=after_report,
        pdv_max_reduction_pct=_reduction_pct(pdv_before, pdv_after),
        jitter_final_reduction_pct=_reduction_pct(before_report.jitter_final_us,
                                                  after_report.jitter_final_us),
        added_latency_mean_us=Fraction(sum(added), len(added)) if added else Fraction(0),
        added_latency_max_us=max(added, default=0),
        drops_introduced=len(result.dropped),
    )


def format_decimal(value) -> str:
    """Exact decimal with at most 6 fractional digits, round-half-even."""
    f = Fraction(value)
    scaled = f * 10**6
    q = round(scaled)  # banker's rounding on Fraction
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, frac = divmod(q, 10**6)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}." + f"{frac:06d}".rstrip("0")
