"""Traffic shapers: packet-based leaky bucket and byte-based token bucket.

Both are pure, deterministic discrete-event functions over a received trace.
Departure times are written into recv_ts_us so a shaper's output can feed
the next pipeline stage directly (departures become arrivals).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Union

from .model import MediaPacket, StreamTrace

DROP_BUCKET_FULL = "bucket full"
DROP_QUEUE_FULL = "queue full"

US_PER_S = 10**6


class ShapingPreconditionError(ValueError):
    """Input trace does not meet a shaper precondition."""


class PipelineStageError(Exception):
    """A pipeline stage failed; carries the stage index."""

    def __init__(self, stage: int, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage}: {cause}")


@dataclass(frozen=True)
class LeakyBucketConfig:
    """Fixed-interval drain over a bounded packet queue."""

    capacity_packets: int = 15
    drain_interval_us: int = 20000

    def __post_init__(self) -> None:
        if self.capacity_packets < 1:
            raise ValueError("capacity_packets must be >= 1")
        if self.drain_interval_us < 1:
            raise ValueError("drain_interval_us must be >= 1")


@dataclass(frozen=True)
class TokenBucketConfig:
    """Byte-based token bucket: one token buys one byte of departure."""

    rate: Fraction  # tokens (bytes) per second
    capacity_tokens: int
    initial_tokens: Optional[int] = None
    queue_limit_bytes: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rate", Fraction(self.rate))
        if self.rate <= 0:
            raise ValueError("rate must be > 0")
        if self.capacity_tokens < 1:
            raise ValueError("capacity_tokens must be >= 1")
        init = self.capacity_tokens if self.initial_tokens is None else self.initial_tokens
        if not 0 <= init <= self.capacity_tokens:
            raise ValueError("initial_tokens must lie in [0, capacity_tokens]")
        if self.queue_limit_bytes is not None and self.queue_limit_bytes < 1:
            raise ValueError("queue_limit_bytes must be >= 1")

    @property
    def start_tokens(self) -> int:
        return self.capacity_tokens if self.initial_tokens is None else self.initial_tokens


ShaperConfig = Union[LeakyBucketConfig, TokenBucketConfig]


class OccupancySample(NamedTuple):
    ts_us: int
    queued_packets: int
    queued_bytes: int
    tokens: int


@dataclass(frozen=True)
class ShapeResult:
    shaped: StreamTrace
    dropped: tuple[tuple[MediaPacket, str], ...]
    occupancy: tuple[OccupancySample, ...]


def _arrivals(trace: StreamTrace) -> list[int]:
    ts = []
    for i, p in enumerate(trace.packets):
        if p.recv_ts_us is None:
            raise ShapingPreconditionError(f"packet {i} has no arrival timestamp (recv_ts_us)")
        ts.append(p.recv_ts_us)
    return ts


def leaky_bucket_shape(trace: StreamTrace, cfg: LeakyBucketConfig) -> ShapeResult:
    """Shape a trace through a fixed-drain leaky bucket.

    A packet arriving to an empty queue with an idle drain clock departs
    immediately and arms the clock; otherwise it queues (or drops when the
    bucket is full). The clock goes idle only when a drain tick fires on an
    empty queue, so consecutive departures are never closer than the drain
    interval.
    """
    arrivals = _arrivals(trace)
    drain = cfg.drain_interval_us
    cap = cfg.capacity_packets

    queue: deque[MediaPacket] = deque()
    queued_bytes = 0
    next_tick: Optional[int] = None
    shaped: list[MediaPacket] = []
    dropped: list[tuple[MediaPacket, str]] = []
    occupancy: list[OccupancySample] = []

    # hot loop: bind lookups to locals and build tuples without going
    # through the NamedTuple constructors
    new = tuple.__new__
    sample = OccupancySample
    packet = MediaPacket
    shaped_append = shaped.append
    occ_append = occupancy.append
    pop_head = queue.popleft
    enqueue = queue.append

    for pkt, t in zip(trace.packets, arrivals):
        while next_tick is not None and next_tick <= t:
            if queue:
                head = pop_head()
                queued_bytes -= head[6]
                shaped_append(new(packet, head[:5] + (next_tick, head[6])))
                occ_append(new(sample, (next_tick, len(queue), queued_bytes, 0)))
                next_tick += drain
            else:
                next_tick = None
        if next_tick is None and not queue:
            # departs the instant it arrives, so the packet is unchanged
            shaped_append(pkt)
            next_tick = t + drain
            occ_append(new(sample, (t, 0, 0, 0)))
        elif len(queue) < cap:
            enqueue(pkt)
            queued_bytes += pkt[6]
            occ_append(new(sample, (t, len(queue), queued_bytes, 0)))
        else:
            dropped.append((pkt, DROP_BUCKET_FULL))
            occ_append(new(sample, (t, len(queue), queued_bytes, 0)))

    while queue:
        assert next_tick is not None
        head = pop_head()
        queued_bytes -= head[6]
        shaped_append(new(packet, head[:5] + (next_tick, head[6])))
        occ_append(new(sample, (next_tick, len(queue), queued_bytes, 0)))
        next_tick += drain

    return ShapeResult(
        shaped=StreamTrace(kind=trace.kind, packets=tuple(shaped),
                           clock_resolution_us=trace.clock_resolution_us),
        dropped=tuple(dropped),
        occupancy=tuple(occupancy),
    )


class _TokenState:
    """Exact integer token accrual with sub-token remainder carry.

    tokens available at t = min(cap, tokens + (rem + (t - t_last) * num) // den_us)
    where den_us = rate denominator * 10^6. When the bucket caps, the
    remainder is discarded (a full bucket accrues nothing).
    """

    __slots__ = ("num", "den_us", "cap", "tokens", "rem", "t")

    def __init__(self, rate: Fraction, cap: int, initial: int):
        self.num = rate.numerator
        self.den_us = rate.denominator * US_PER_S
        self.cap = cap
        self.tokens = initial
        self.rem = 0
        self.t = 0

    def advance(self, t: int) -> None:
        acc = self.rem + (t - self.t) * self.num
        tokens = self.tokens + acc // self.den_us
        if tokens >= self.cap:
            self.tokens, self.rem = self.cap, 0
        else:
            self.tokens, self.rem = tokens, acc % self.den_us
        self.t = t

    def ready_time(self, size: int) -> int:
        """Earliest time >= self.t at which `size` tokens are available."""
        if self.tokens >= size:
            return self.t
        deficit = (size - self.tokens) * self.den_us - self.rem
        return self.t + -(-deficit // self.num)  # ceiling division


def token_bucket_shape(trace: StreamTrace, cfg: TokenBucketConfig) -> ShapeResult:
    """Shape a trace through a byte-based token bucket.

    Tokens accrue continuously at the configured rational rate (exact
    integer arithmetic, no lost fractions); the FIFO head departs at the
    earliest microsecond its size in bytes is covered by available tokens.
    """
    arrivals = _arrivals(trace)
    limit = cfg.queue_limit_bytes
    state = _TokenState(cfg.rate, cfg.capacity_tokens, cfg.start_tokens)

    queue: deque[MediaPacket] = deque()
    queued_bytes = 0
    shaped: list[MediaPacket] = []
    dropped: list[tuple[MediaPacket, str]] = []
    occupancy: list[OccupancySample] = []

    def depart_until(deadline: Optional[int]) -> None:
        nonlocal queued_bytes
        while queue:
            head = queue[0]
            if head.size_bytes > cfg.capacity_tokens:
                raise ShapingPreconditionError(
                    f"packet of {head.size_bytes} bytes exceeds token capacity "
                    f"{cfg.capacity_tokens}; it can never depart"
                )
            dep = state.ready_time(head.size_bytes)
            if dep < head.recv_ts_us:  # type: ignore[operator]
                dep = head.recv_ts_us  # type: ignore[assignment]
            if deadline is not None and dep > deadline:
                return
            state.advance(dep)
            state.tokens -= head.size_bytes
            queue.popleft()
            queued_bytes -= head.size_bytes
            shaped.append(head._replace(recv_ts_us=dep))
            occupancy.append(OccupancySample(dep, len(queue), queued_bytes, state.tokens))

    for pkt, t in zip(trace.packets, arrivals):
        depart_until(t)
        if limit is not None and queued_bytes + pkt.size_bytes > limit:
            state.advance(t)
            dropped.append((pkt, DROP_QUEUE_FULL))
            occupancy.append(OccupancySample(t, len(queue), queued_bytes, state.tokens))
            continue
        queue.append(pkt if pkt.recv_ts_us == t else pkt._replace(recv_ts_us=t))
        queued_bytes += pkt.size_bytes
        state.advance(t)
        occupancy.append(OccupancySample(t, len(queue), queued_bytes, state.tokens))
        depart_until(t)

    depart_until(None)

    return ShapeResult(
        shaped=StreamTrace(kind=trace.kind, packets=tuple(shaped),
                           clock_resolution_us=trace.clock_resolution_us),
        dropped=tuple(dropped),
        occupancy=tuple(occupancy),
    )


def shape(trace: StreamTrace, cfg: ShaperConfig) -> ShapeResult:
    if isinstance(cfg, LeakyBucketConfig):
        return leaky_bucket_shape(trace, cfg)
    if isinstance(cfg, TokenBucketConfig):
        return token_bucket_shape(trace, cfg)
    raise TypeError(f"unknown shaper config: {cfg!r}")


def run_pipeline(stages: list[ShaperConfig],
                 trace: StreamTrace) -> tuple[StreamTrace, list[ShapeResult]]:
    """Chain shaper stages; stage k+1 sees stage k's departures as arrivals."""
    results: list[ShapeResult] = []
    current = trace
    for k, cfg in enumerate(stages):
        try:
            result = shape(current, cfg)
        except Exception as exc:
            raise PipelineStageError(k, exc) from exc
        results.append(result)
        current = result.shaped
    return current, results
