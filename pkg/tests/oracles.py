"""Independent brute-force oracles for the shapers plus random-input helpers.

The oracles advance wall time one microsecond at a time and apply the event
rules literally; they share no code with the production shapers.
"""

from __future__ import annotations

import random
from fractions import Fraction

from rtpshape import (LeakyBucketConfig, MediaPacket, StreamKind, StreamTrace,
                      TokenBucketConfig)

US_PER_S = 10**6


def leaky_oracle(trace, cfg):
    """Returns (departures as [(packet, t)], drops as [packet])."""
    packets = list(trace.packets)
    i = 0
    queue: list = []
    tick = None
    deps: list = []
    drops: list = []
    t = 0
    while i < len(packets) or queue:
        if tick == t:
            if queue:
                deps.append((queue.pop(0), t))
                tick = t + cfg.drain_interval_us
            else:
                tick = None
        while i < len(packets) and packets[i].recv_ts_us == t:
            pkt = packets[i]
            i += 1
            if tick is None and not queue:
                deps.append((pkt, t))
                tick = t + cfg.drain_interval_us
            elif len(queue) < cfg.capacity_packets:
                queue.append(pkt)
            else:
                drops.append(pkt)
        t += 1
    return deps, drops


def token_oracle(trace, cfg):
    """Returns (departures as [(packet, t)], drops as [packet])."""
    packets = list(trace.packets)
    num = cfg.rate.numerator
    den_us = cfg.rate.denominator * US_PER_S
    cap = cfg.capacity_tokens
    tokens = cfg.start_tokens
    rem = 0
    queue: list = []
    queued_bytes = 0
    deps: list = []
    drops: list = []
    i = 0
    t = 0
    while i < len(packets) or queue:
        if t > 0:
            rem += num
            tokens += rem // den_us
            rem %= den_us
            if tokens >= cap:
                tokens, rem = cap, 0
        while queue and tokens >= queue[0].size_bytes:
            pkt = queue.pop(0)
            tokens -= pkt.size_bytes
            queued_bytes -= pkt.size_bytes
            deps.append((pkt, t))
        while i < len(packets) and packets[i].recv_ts_us == t:
            pkt = packets[i]
            i += 1
            if cfg.queue_limit_bytes is not None and \
                    queued_bytes + pkt.size_bytes > cfg.queue_limit_bytes:
                drops.append(pkt)
            else:
                queue.append(pkt)
                queued_bytes += pkt.size_bytes
                while queue and tokens >= queue[0].size_bytes:
                    head = queue.pop(0)
                    tokens -= head.size_bytes
                    queued_bytes -= head.size_bytes
                    deps.append((head, t))
        t += 1
    return deps, drops


def random_received_trace(rng: random.Random, max_packets=200, max_t=3000,
                          max_size=100) -> StreamTrace:
    n = rng.randint(1, max_packets)
    times = sorted(rng.randint(0, max_t) for _ in range(n))
    packets = tuple(
        MediaPacket(k % 65536, 7, 96, False, t, t, rng.randint(1, max_size))
        for k, t in enumerate(times)
    )
    return StreamTrace(kind=StreamKind.AUDIO, packets=packets)


def random_leaky_config(rng: random.Random) -> LeakyBucketConfig:
    return LeakyBucketConfig(
        capacity_packets=rng.randint(1, 20),
        drain_interval_us=rng.randint(1, 50),
    )


def random_token_config(rng: random.Random, max_size=100) -> TokenBucketConfig:
    cap = rng.randint(max_size, max_size * 10)
    return TokenBucketConfig(
        rate=Fraction(rng.randint(2_000_000, 20_000_000), rng.choice([1, 2, 3, 7])),
        capacity_tokens=cap,
        initial_tokens=rng.choice([None, 0, rng.randint(0, cap)]),
        queue_limit_bytes=rng.choice([None, rng.randint(max_size, max_size * 20)]),
    )
