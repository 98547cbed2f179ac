"""Classic-PCAP ingestion: Ethernet II / IPv4 / UDP dissection with an RTP heuristic.

Deliberately narrow: classic libpcap format only, Ethernet link type, IPv4,
UDP. A UDP payload is treated as RTP when it is at least 12 bytes long and
its version bits read 2; like Wireshark's "decode as RTP", this is a
heuristic, and ``port_filter`` lets callers disambiguate.

Captures carry only arrival times, so imported packets get
``send_ts_us == recv_ts_us`` by convention.
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from typing import Optional

from .model import MediaPacket, StreamKind, StreamTrace, check_trace

MAGIC_NATIVE = b"\xa1\xb2\xc3\xd4"
MAGIC_SWAPPED = b"\xd4\xc3\xb2\xa1"
LINKTYPE_ETHERNET = 1
ETHERTYPE_IPV4 = 0x0800
PROTO_UDP = 17


class PcapError(Exception):
    """Base class for PCAP import failures."""


class PcapFormatError(PcapError):
    """Input is not a classic PCAP byte stream."""


class PcapTruncatedError(PcapError):
    """A record header or body is cut short."""

    def __init__(self, record_index: int, message: str):
        self.record_index = record_index
        super().__init__(f"record {record_index}: {message}")


class PcapLinkTypeError(PcapError):
    """Capture uses a link type other than Ethernet."""


def _parse_rtp(payload: bytes, payload_len: int) -> Optional[tuple[int, int, int, bool, int]]:
    """Return (seq, ssrc, payload_type, marker, media_bytes) or None."""
    if payload_len < 12 or len(payload) < 12:
        return None
    b0 = payload[0]
    if b0 >> 6 != 2:
        return None
    padding = bool(b0 & 0x20)
    extension = bool(b0 & 0x10)
    cc = b0 & 0x0F
    marker = bool(payload[1] & 0x80)
    pt = payload[1] & 0x7F
    seq, = struct.unpack_from(">H", payload, 2)
    ssrc, = struct.unpack_from(">I", payload, 8)

    header_len = 12 + 4 * cc
    if extension:
        if len(payload) < header_len + 4:
            return None
        ext_words, = struct.unpack_from(">H", payload, header_len + 2)
        header_len += 4 + 4 * ext_words
    pad_len = 0
    if padding:
        if payload_len > len(payload):
            return None  # snaplen cut the padding byte off; cannot size it
        pad_len = payload[payload_len - 1]
    media_bytes = payload_len - header_len - pad_len
    if media_bytes < 1:
        return None
    return seq, ssrc, pt, marker, media_bytes


def _parse_frame(frame: bytes, port_filter: Optional[int]):
    """Dissect Ethernet II -> IPv4 -> UDP -> RTP; None when not RTP/UDP."""
    if len(frame) < 14:
        return None
    ethertype, = struct.unpack_from(">H", frame, 12)
    if ethertype != ETHERTYPE_IPV4:
        return None
    ip = frame[14:]
    if len(ip) < 20:
        return None
    if ip[0] >> 4 != 4:
        return None
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        return None
    if ip[9] != PROTO_UDP:
        return None
    udp = ip[ihl:]
    if len(udp) < 8:
        return None
    sport, dport, ulen = struct.unpack_from(">HHH", udp, 0)
    if port_filter is not None and port_filter not in (sport, dport):
        return None
    if ulen < 8:
        return None
    payload_len = ulen - 8
    payload = udp[8:8 + payload_len]
    if len(payload) < payload_len:
        # snaplen-truncated payload; cannot dissect reliably
        if len(payload) < 12:
            return None
    return _parse_rtp(payload, payload_len)


def import_pcap(data: bytes, port_filter: Optional[int] = None) -> list[StreamTrace]:
    """Parse a classic PCAP byte stream into one StreamTrace per RTP SSRC.

    Arrival timestamps are offset so the earliest RTP packet sits at 0.
    Streams whose packets all share one size are labelled audio, the rest
    video.
    """
    if len(data) < 4 or data[0:4] not in (MAGIC_NATIVE, MAGIC_SWAPPED):
        raise PcapFormatError("missing classic PCAP magic")
    endian = ">" if data[0:4] == MAGIC_NATIVE else "<"
    if len(data) < 24:
        raise PcapFormatError("truncated global header")
    _, _, _, _, _, _, network = struct.unpack(endian + "IHHiIII", data[:24])
    if network != LINKTYPE_ETHERNET:
        raise PcapLinkTypeError(f"unsupported link type {network} (need Ethernet)")

    found: list[tuple[int, int, int, int, bool, int]] = []  # ts, seq, ssrc, pt, marker, size
    offset = 24
    record = 0
    while offset < len(data):
        if len(data) - offset < 16:
            raise PcapTruncatedError(record, "record header cut short")
        ts_sec, ts_usec, incl_len, _ = struct.unpack_from(endian + "IIII", data, offset)
        offset += 16
        if incl_len > len(data) - offset:
            raise PcapTruncatedError(record, "record body cut short")
        frame = data[offset:offset + incl_len]
        offset += incl_len
        parsed = _parse_frame(frame, port_filter)
        if parsed is not None:
            seq, ssrc, pt, marker, size = parsed
            found.append((ts_sec * 10**6 + ts_usec, seq, ssrc, pt, marker, size))
        record += 1

    if not found:
        return []

    t0 = min(item[0] for item in found)
    by_ssrc: "OrderedDict[int, list[tuple[int, int]]]" = OrderedDict()
    for order, (ts, seq, ssrc, pt, marker, size) in enumerate(found):
        rel = ts - t0
        pkt = MediaPacket(seq, ssrc, pt, marker, rel, rel, size)
        by_ssrc.setdefault(ssrc, []).append((order, pkt))

    traces = []
    for ssrc, items in by_ssrc.items():
        items.sort(key=lambda it: (it[1].recv_ts_us, it[0]))
        packets = tuple(pkt for _, pkt in items)
        sizes = {p.size_bytes for p in packets}
        kind = StreamKind.AUDIO if len(sizes) == 1 else StreamKind.VIDEO
        traces.append(check_trace(StreamTrace(kind=kind, packets=packets)))
    return traces
