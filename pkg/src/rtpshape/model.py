"""Packet/trace data model, validation, and the canonical trace CSV format.

Time is integer microseconds everywhere; no floating-point timestamps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

SEQ_MOD = 1 << 16
SSRC_MOD = 1 << 32
PT_MOD = 1 << 7

CSV_HEADER = "seq,ssrc,payload_type,marker,send_ts_us,recv_ts_us,size_bytes"


class TraceFormatError(ValueError):
    """Trace CSV is malformed (bad header, wrong field count, unparseable or
    out-of-range field)."""


class TraceValidationError(ValueError):
    """A structurally well-formed trace violates a data invariant."""

    def __init__(self, violations: list["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(f"packet {v.index}: {v.message}" for v in self.violations))


class StreamKind(enum.Enum):
    AUDIO = "audio"
    VIDEO = "video"


class MediaPacket(NamedTuple):
    """One RTP-style packet. recv_ts_us is None until a channel or capture
    assigns an arrival time."""

    seq: int
    ssrc: int
    payload_type: int
    marker: bool
    send_ts_us: int
    recv_ts_us: Optional[int]
    size_bytes: int


class Violation(NamedTuple):
    index: int
    message: str


@dataclass(frozen=True)
class StreamTrace:
    """Time-ordered packet sequence for one stream.

    Packets are sorted by the active timestamp: recv_ts_us when every packet
    has one, send_ts_us otherwise.
    """

    kind: StreamKind
    packets: tuple[MediaPacket, ...]
    clock_resolution_us: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "packets", tuple(self.packets))
        if self.clock_resolution_us < 1:
            raise ValueError("clock_resolution_us must be >= 1")

    def __len__(self) -> int:
        return len(self.packets)

    @property
    def all_received(self) -> bool:
        return all(p.recv_ts_us is not None for p in self.packets)

    def active_timestamps(self) -> list[int]:
        """Timestamps the trace is ordered by (recv when complete, else send)."""
        if self.all_received:
            return [p.recv_ts_us for p in self.packets]  # type: ignore[misc]
        return [p.send_ts_us for p in self.packets]


def _seq_forward(a: int, b: int) -> bool:
    """True when b follows a in 16-bit wrap-around order (or equals it)."""
    return (b - a) % SEQ_MOD < SEQ_MOD // 2


def validate_trace(trace: StreamTrace) -> list[Violation]:
    """Collect every invariant violation; an empty list means the trace is valid."""
    out: list[Violation] = []
    for i, p in enumerate(trace.packets):
        if not 0 <= p.seq < SEQ_MOD:
            out.append(Violation(i, f"seq {p.seq} outside 16-bit range"))
        if not 0 <= p.ssrc < SSRC_MOD:
            out.append(Violation(i, f"ssrc {p.ssrc} outside 32-bit range"))
        if not 0 <= p.payload_type < PT_MOD:
            out.append(Violation(i, f"payload_type {p.payload_type} outside 7-bit range"))
        if p.send_ts_us < 0:
            out.append(Violation(i, "negative send_ts_us"))
        if p.size_bytes < 1:
            out.append(Violation(i, f"size_bytes {p.size_bytes} < 1"))
        if p.recv_ts_us is not None and p.recv_ts_us < p.send_ts_us:
            out.append(Violation(i, "negative delay: recv_ts_us < send_ts_us"))

    ts = trace.active_timestamps()
    for i in range(1, len(ts)):
        if ts[i] < ts[i - 1]:
            out.append(Violation(i, "unsorted: active timestamp decreases"))
        elif ts[i] == ts[i - 1]:
            a, b = trace.packets[i - 1], trace.packets[i]
            if a.ssrc == b.ssrc and a.seq != b.seq and not _seq_forward(a.seq, b.seq):
                out.append(Violation(i, "tie not broken by seq order"))

    last_seen: dict[tuple[int, int], int] = {}
    for i, p in enumerate(trace.packets):
        key = (p.ssrc, p.seq % SEQ_MOD)
        j = last_seen.get(key)
        if j is not None and i - j < SEQ_MOD:
            out.append(Violation(i, f"duplicate (ssrc, seq) within 65536-packet window (first at {j})"))
        last_seen[key] = i
    return out


def check_trace(trace: StreamTrace) -> StreamTrace:
    """Raise TraceValidationError unless the trace is valid."""
    violations = validate_trace(trace)
    if violations:
        raise TraceValidationError(violations)
    return trace


def write_trace_csv(trace: StreamTrace) -> bytes:
    """Serialize to the canonical trace CSV (ASCII, LF line endings)."""
    lines = [CSV_HEADER]
    for p in trace.packets:
        recv = "" if p.recv_ts_us is None else str(p.recv_ts_us)
        lines.append(
            f"{p.seq},{p.ssrc},{p.payload_type},{1 if p.marker else 0},"
            f"{p.send_ts_us},{recv},{p.size_bytes}"
        )
    return ("\n".join(lines) + "\n").encode("ascii")


def _parse_int(text: str, lo: int, hi: int, row: int, col: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise TraceFormatError(f"row {row}, column {col}: not an integer: {text!r}") from None
    if not lo <= value <= hi:
        raise TraceFormatError(f"row {row}, column {col}: {value} outside [{lo}, {hi}]")
    return value


def read_trace_csv(data: bytes, kind: StreamKind) -> StreamTrace:
    """Parse the canonical trace CSV back into a validated StreamTrace."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise TraceFormatError(f"non-ASCII input: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CSV_HEADER:
        raise TraceFormatError(f"line 1: expected header {CSV_HEADER!r}")

    packets: list[MediaPacket] = []
    for row, line in enumerate(lines[1:], start=1):
        fields = line.split(",")
        if len(fields) != 7:
            raise TraceFormatError(f"row {row}: expected 7 fields, got {len(fields)}")
        seq = _parse_int(fields[0], 0, SEQ_MOD - 1, row, "seq")
        ssrc = _parse_int(fields[1], 0, SSRC_MOD - 1, row, "ssrc")
        pt = _parse_int(fields[2], 0, PT_MOD - 1, row, "payload_type")
        marker = _parse_int(fields[3], 0, 1, row, "marker")
        send = _parse_int(fields[4], 0, 2**63 - 1, row, "send_ts_us")
        recv = None if fields[5] == "" else _parse_int(fields[5], 0, 2**63 - 1, row, "recv_ts_us")
        size = _parse_int(fields[6], -(2**63), 2**63 - 1, row, "size_bytes")
        packets.append(MediaPacket(seq, ssrc, pt, bool(marker), send, recv, size))

    return check_trace(StreamTrace(kind=kind, packets=tuple(packets)))
