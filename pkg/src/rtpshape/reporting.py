"""Report surfaces: CSV serializations of shaping/metric results and the
stacked-panel SVG figures (3 panels for the leaky bucket, 4 for the token
bucket).

All output is byte-deterministic: fixed field order, fixed decimal
formatting, LF newlines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .metrics import ComparisonReport, MetricsReport, format_decimal
from .model import StreamTrace
from .shaping import LeakyBucketConfig, ShapeResult, ShaperConfig, TokenBucketConfig


@dataclass(frozen=True)
class Panel:
    title: str
    kind: Literal["scatter", "step"]
    unit: str
    points: tuple[tuple[int, int], ...]  # (ts_us, value)


@dataclass(frozen=True)
class PanelReport:
    panels: tuple[Panel, ...]


def _packet_points(trace: StreamTrace) -> tuple[tuple[int, int], ...]:
    return tuple((p.recv_ts_us, p.size_bytes) for p in trace.packets)


def panel_report(incoming: StreamTrace, result: ShapeResult,
                 cfg: ShaperConfig) -> PanelReport:
    """Figure layout for one shaping stage: dots for packets, step lines for
    occupancy, matching the three/four-diagram structure of the shapers."""
    panels = [
        Panel("incoming traffic", "scatter", "bytes", _packet_points(incoming)),
        Panel("shaped traffic", "scatter", "bytes", _packet_points(result.shaped)),
    ]
    if isinstance(cfg, LeakyBucketConfig):
        panels.append(Panel("bucket content (packets)", "step", "packets",
                            tuple((s.ts_us, s.queued_packets) for s in result.occupancy)))
    elif isinstance(cfg, TokenBucketConfig):
        panels.append(Panel("packet queue (bytes)", "step", "bytes",
                            tuple((s.ts_us, s.queued_bytes) for s in result.occupancy)))
        panels.append(Panel("tokens available", "step", "tokens",
                            tuple((s.ts_us, s.tokens) for s in result.occupancy)))
    else:
        raise TypeError(f"unknown shaper config: {cfg!r}")
    return PanelReport(panels=tuple(panels))


def occupancy_csv(result: ShapeResult) -> str:
    lines = ["ts_us,queued_packets,queued_bytes,tokens"]
    lines += [f"{s.ts_us},{s.queued_packets},{s.queued_bytes},{s.tokens}"
              for s in result.occupancy]
    return "\n".join(lines) + "\n"


def drops_csv(result: ShapeResult) -> str:
    lines = ["seq,ssrc,ts_us,reason"]
    lines += [f"{p.seq},{p.ssrc},{p.recv_ts_us},{reason}" for p, reason in result.dropped]
    return "\n".join(lines) + "\n"


def panels_csv(report: PanelReport) -> str:
    lines = ["panel,kind,ts_us,value"]
    for panel in report.panels:
        lines += [f"{panel.title},{panel.kind},{ts},{v}" for ts, v in panel.points]
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    return format_decimal(value)


def summary_lines(report: MetricsReport) -> list[str]:
    jitter = "insufficient-data" if report.jitter_final_us is None \
        else format_decimal(report.jitter_final_us)
    lines = [
        f"total_packets,{report.total_packets}",
        f"total_bytes,{report.total_bytes}",
        f"duration_us,{report.duration_us}",
        f"jitter_final_us,{jitter}",
    ]
    if report.pdv_stats is None:
        lines += [f"pdv_{k}_us,insufficient-data" for k in ("min", "max", "mean", "p50", "p99")]
    else:
        lines += [f"pdv_{k}_us,{format_decimal(report.pdv_stats[k])}"
                  for k in ("min", "max", "mean", "p50", "p99")]
    lines += [
        f"loss_count,{report.loss_count}",
        f"loss_rate,{format_decimal(report.loss_rate)}",
        f"duplicate_count,{report.duplicate_count}",
    ]
    return lines


def summary_csv(report: MetricsReport) -> str:
    return "\n".join(summary_lines(report)) + "\n"


def comparison_csv(report: ComparisonReport) -> str:
    lines = [f"before_{line}" for line in summary_lines(report.before)]
    lines += [f"after_{line}" for line in summary_lines(report.after)]
    lines += [
        f"pdv_max_reduction_pct,{_fmt(report.pdv_max_reduction_pct)}",
        f"jitter_final_reduction_pct,{_fmt(report.jitter_final_reduction_pct)}",
        f"added_latency_mean_us,{format_decimal(report.added_latency_mean_us)}",
        f"added_latency_max_us,{report.added_latency_max_us}",
        f"drops_introduced,{report.drops_introduced}",
    ]
    return "\n".join(lines) + "\n"


def jitter_csv(report: MetricsReport) -> str:
    lines = ["index,jitter_us"]
    if report.jitter_series:
        lines += [f"{i},{format_decimal(j)}" for i, j in report.jitter_series]
    return "\n".join(lines) + "\n"


def pdv_csv(report: MetricsReport) -> str:
    lines = ["index,pdv_us"]
    if report.pdv_per_packet_us:
        lines += [f"{i},{v}" for i, v in enumerate(report.pdv_per_packet_us)]
    return "\n".join(lines) + "\n"


def throughput_csv(report: MetricsReport) -> str:
    lines = ["window_start_us,bytes"]
    lines += [f"{start},{total}" for start, total in report.throughput_series]
    return "\n".join(lines) + "\n"


PANEL_WIDTH = 800
PANEL_HEIGHT = 150
MARGIN_LEFT = 70
MARGIN_RIGHT = 20
MARGIN_TOP = 30
MARGIN_BOTTOM = 30


def _scale(points, width, height):
    ts = [p[0] for p in points]
    vs = [p[1] for p in points]
    t_lo, t_hi = min(ts), max(ts)
    v_lo, v_hi = min(min(vs), 0), max(vs)
    t_span = (t_hi - t_lo) or 1
    v_span = (v_hi - v_lo) or 1

    def to_xy(t, v):
        x = (t - t_lo) / t_span * width
        y = height - (v - v_lo) / v_span * height
        return f"{x:.2f}", f"{y:.2f}"

    return to_xy, (t_lo, t_hi, v_lo, v_hi)


def render_svg(report: PanelReport) -> str:
    """Standalone SVG: one vertically stacked <g class="panel"> per panel,
    <circle> dots for scatter panels, a step <polyline> for occupancy."""
    inner_w = PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    inner_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    total_h = PANEL_HEIGHT * len(report.panels)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_WIDTH}" '
        f'height="{max(total_h, 1)}" viewBox="0 0 {PANEL_WIDTH} {max(total_h, 1)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for idx, panel in enumerate(report.panels):
        top = idx * PANEL_HEIGHT
        out.append(f'<g class="panel" transform="translate({MARGIN_LEFT},{top + MARGIN_TOP})">')
        out.append(f'<text x="0" y="-10" font-size="12" font-family="sans-serif">'
                   f'{panel.title}</text>')
        out.append(f'<line x1="0" y1="{inner_h}" x2="{inner_w}" y2="{inner_h}" '
                   'stroke="black" stroke-width="1"/>')
        out.append(f'<line x1="0" y1="0" x2="0" y2="{inner_h}" '
                   'stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{inner_w // 2}" y="{inner_h + 22}" font-size="10" '
                   f'font-family="sans-serif" text-anchor="middle">time (us)</text>')
        out.append(f'<text x="-8" y="{inner_h // 2}" font-size="10" '
                   f'font-family="sans-serif" text-anchor="end">{panel.unit}</text>')
        if panel.points:
            to_xy, (t_lo, t_hi, v_lo, v_hi) = _scale(panel.points, inner_w, inner_h)
            out.append(f'<text x="0" y="{inner_h + 22}" font-size="9" '
                       f'font-family="sans-serif">{t_lo}</text>')
            out.append(f'<text x="{inner_w}" y="{inner_h + 22}" font-size="9" '
                       f'font-family="sans-serif" text-anchor="end">{t_hi}</text>')
            out.append(f'<text x="-4" y="10" font-size="9" font-family="sans-serif" '
                       f'text-anchor="end">{v_hi}</text>')
            if panel.kind == "scatter":
                for t, v in panel.points:
                    x, y = to_xy(t, v)
                    out.append(f'<circle cx="{x}" cy="{y}" r="1.5" fill="steelblue"/>')
            else:
                coords = []
                prev_v = None
                for t, v in panel.points:
                    if prev_v is not None:
                        x, y = to_xy(t, prev_v)
                        coords.append(f"{x},{y}")
                    x, y = to_xy(t, v)
                    coords.append(f"{x},{y}")
                    prev_v = v
                out.append(f'<polyline points="{" ".join(coords)}" fill="none" '
                           'stroke="darkorange" stroke-width="1"/>')
        out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
