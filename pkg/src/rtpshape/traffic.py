"""Synthetic sender traces (CBR audio, GOP-structured video) and a seeded
channel impairment model (base delay, jitter, independent loss)."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .model import MediaPacket, SEQ_MOD, StreamKind, StreamTrace

US_PER_S = 10**6


class GenerationError(ValueError):
    """Requested duration cannot hold a single packet/frame."""


@dataclass(frozen=True)
class AudioGenConfig:
    """Constant-bitrate audio: fixed-size packets at a fixed interval."""

    ptime_us: int = 20000
    payload_bytes: int = 125
    ssrc: int = 0x000A0D10
    payload_type: int = 0

    def __post_init__(self) -> None:
        if self.ptime_us < 1000:
            raise ValueError("ptime_us must be >= 1000")
        if self.payload_bytes < 1:
            raise ValueError("payload_bytes must be >= 1")
        if not 0 <= self.ssrc < 2**32:
            raise ValueError("ssrc outside 32-bit range")
        if not 0 <= self.payload_type < 128:
            raise ValueError("payload_type outside 7-bit range")


@dataclass(frozen=True)
class VideoGenConfig:
    """Two-size GOP approximation of an H.264-style stream: large I-frames
    every `gop` frames, small P-frames between, fragmented to MTU size."""

    fps: int = 25
    gop: int = 12
    i_frame_bytes: int = 8000
    p_frame_bytes: int = 1500
    size_jitter_pct: int = 20
    mtu_payload_bytes: int = 1200
    ssrc: int = 0x000F1DE0
    payload_type: int = 96

    def __post_init__(self) -> None:
        if self.fps < 1 or self.gop < 1:
            raise ValueError("fps and gop must be >= 1")
        if self.mtu_payload_bytes < 64:
            raise ValueError("mtu_payload_bytes must be >= 64")
        if self.i_frame_bytes < self.p_frame_bytes:
            raise ValueError("i_frame_bytes must be >= p_frame_bytes")
        if self.p_frame_bytes < 1:
            raise ValueError("p_frame_bytes must be >= 1")
        if not 0 <= self.size_jitter_pct <= 100:
            raise ValueError("size_jitter_pct must lie in [0, 100]")
        if not 0 <= self.ssrc < 2**32:
            raise ValueError("ssrc outside 32-bit range")
        if not 0 <= self.payload_type < 128:
            raise ValueError("payload_type outside 7-bit range")


@dataclass(frozen=True)
class NoJitter:
    pass


@dataclass(frozen=True)
class UniformJitter:
    lo_us: int
    hi_us: int

    def __post_init__(self) -> None:
        if not 0 <= self.lo_us <= self.hi_us:
            raise ValueError("need 0 <= lo_us <= hi_us")


@dataclass(frozen=True)
class ExponentialJitter:
    mean_us: int

    def __post_init__(self) -> None:
        if self.mean_us < 0:
            raise ValueError("mean_us must be >= 0")


JitterModel = Union[NoJitter, UniformJitter, ExponentialJitter]


@dataclass(frozen=True)
class ChannelModel:
    """Additive delay plus independent per-packet loss, fully determined by
    the seed (counter-based draws, one splitmix64 stream per packet index)."""

    base_delay_us: int = 0
    jitter: JitterModel = NoJitter()
    loss_prob: Fraction = Fraction(0)
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "loss_prob", Fraction(self.loss_prob))
        if self.base_delay_us < 0:
            raise ValueError("base_delay_us must be >= 0")
        if not 0 <= self.loss_prob < 1:
            raise ValueError("loss_prob must lie in [0, 1)")


def generate_audio(cfg: AudioGenConfig, duration_us: int) -> StreamTrace:
    """Packets at 0, ptime, 2*ptime, ... < duration; seq wraps at 2^16."""
    if duration_us < cfg.ptime_us:
        raise GenerationError("duration_us shorter than one packet interval")
    count = -(-duration_us // cfg.ptime_us)  # packets with k*ptime < duration
    packets = tuple(
        MediaPacket(k % SEQ_MOD, cfg.ssrc, cfg.payload_type, False,
                    k * cfg.ptime_us, None, cfg.payload_bytes)
        for k in range(count)
    )
    return StreamTrace(kind=StreamKind.AUDIO, packets=packets)


def generate_video(cfg: VideoGenConfig, duration_us: int, seed: int) -> StreamTrace:
    """Frame k at floor(k*10^6/fps); I-frame when k % gop == 0; frame sizes
    jittered by a seeded uniform factor, then fragmented to the MTU with all
    fragments sharing the frame send time and marker on the last."""
    if duration_us * cfg.fps < US_PER_S:
        raise GenerationError("duration_us shorter than one frame interval")
    rng = random.Random(seed)
    packets: list[MediaPacket] = []
    seq = 0
    k = 0
    while True:
        ts = (k * US_PER_S) // cfg.fps
        if ts >= duration_us:
            break
        mean = cfg.i_frame_bytes if k % cfg.gop == 0 else cfg.p_frame_bytes
        u = rng.uniform(-cfg.size_jitter_pct / 100, cfg.size_jitter_pct / 100)
        size = max(1, round(mean * (1 + u)))
        remaining = size
        while remaining > 0:
            frag = min(cfg.mtu_payload_bytes, remaining)
            remaining -= frag
            packets.append(MediaPacket(seq % SEQ_MOD, cfg.ssrc, cfg.payload_type,
                                       remaining == 0, ts, None, frag))
            seq += 1
        k += 1
    return StreamTrace(kind=StreamKind.VIDEO, packets=tuple(packets))


_SM64_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _splitmix64_pair(seed: int) -> tuple[int, int]:
    """First two outputs of a splitmix64 stream."""

    def mix(state: int) -> int:
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4B5B9 & _MASK64
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
        return z ^ (z >> 31)

    s1 = (seed + _SM64_GAMMA) & _MASK64
    s2 = (s1 + _SM64_GAMMA) & _MASK64
    return mix(s1), mix(s2)


def _sample_jitter(model: JitterModel, word: int) -> int:
    if isinstance(model, NoJitter):
        return 0
    if isinstance(model, UniformJitter):
        return model.lo_us + word % (model.hi_us - model.lo_us + 1)
    if isinstance(model, ExponentialJitter):
        u = (word >> 11) * 2.0**-53  # 53-bit uniform in [0, 1)
        return max(0, round(-model.mean_us * math.log1p(-u)))
    raise TypeError(f"unknown jitter model: {model!r}")


def apply_channel(trace: StreamTrace, ch: ChannelModel) -> StreamTrace:
    """Stamp arrival times and apply loss; deterministic per (trace, seed).

    Packet index i draws from splitmix64 seeded with seed XOR i: the first
    word decides loss, the second the jitter sample, so the two are
    independent.
    """
    num, den = ch.loss_prob.numerator, ch.loss_prob.denominator
    survivors: list[tuple[int, int, MediaPacket]] = []
    for i, pkt in enumerate(trace.packets):
        loss_word, jitter_word = _splitmix64_pair((ch.seed ^ i) & _MASK64)
        if loss_word * den < num << 64:
            continue
        recv = pkt.send_ts_us + ch.base_delay_us + _sample_jitter(ch.jitter, jitter_word)
        survivors.append((recv, i, pkt._replace(recv_ts_us=recv)))
    survivors.sort(key=lambda item: (item[0], item[1]))
    return StreamTrace(kind=trace.kind,
                       packets=tuple(pkt for _, _, pkt in survivors),
                       clock_resolution_us=trace.clock_resolution_us)
