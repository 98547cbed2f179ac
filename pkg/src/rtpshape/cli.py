"""Command-line surface: generate | shape | analyze | report | run.

Exit codes: 0 success, 2 usage/config/validation problems, 3 I/O problems.
Diagnostics go to stderr; machine-readable output goes to files or stdout.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics as metrics_mod
from . import reporting
from .model import (StreamKind, StreamTrace, TraceFormatError, TraceValidationError,
                    read_trace_csv, write_trace_csv)
from .scenario import ConfigError, ScenarioConfig, parse_scenario
from .shaping import (ShapeResult, ShapingPreconditionError, PipelineStageError,
                      run_pipeline)
from .traffic import (AudioGenConfig, GenerationError, apply_channel,
                      generate_audio, generate_video)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3

_USAGE_ERRORS = (ConfigError, TraceFormatError, TraceValidationError,
                 ShapingPreconditionError, GenerationError,
                 metrics_mod.InsufficientDataError,
                 metrics_mod.MetricPreconditionError,
                 metrics_mod.InconsistentInputError)


def _load_scenario(path: str) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="ascii"))


def _read_trace(path: str, kind: StreamKind) -> StreamTrace:
    return read_trace_csv(Path(path).read_bytes(), kind)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("ascii"))


def _generate_trace(scenario: ScenarioConfig, seed_override=None) -> StreamTrace:
    seed = scenario.seed if seed_override is None else seed_override
    if isinstance(scenario.generator, AudioGenConfig):
        trace = generate_audio(scenario.generator, scenario.duration_us)
    else:
        trace = generate_video(scenario.generator, scenario.duration_us, seed)
    if scenario.channel is not None:
        channel = scenario.channel if seed_override is None \
            else replace(scenario.channel, seed=seed_override)
        trace = apply_channel(trace, channel)
    return trace


def _stage_prefix(prefix: str, k: int) -> str:
    return f"{prefix}stage{k}."


def _write_stage(prefix: str, k: int, incoming: StreamTrace, result: ShapeResult) -> None:
    base = _stage_prefix(prefix, k)
    _write(Path(base + "input.csv"), write_trace_csv(incoming).decode("ascii"))
    _write(Path(base + "shaped.csv"), write_trace_csv(result.shaped).decode("ascii"))
    _write(Path(base + "drops.csv"), reporting.drops_csv(result))
    _write(Path(base + "occupancy.csv"), reporting.occupancy_csv(result))


def _write_metrics(prefix: str, report: metrics_mod.MetricsReport) -> None:
    _write(Path(prefix + "summary.csv"), reporting.summary_csv(report))
    _write(Path(prefix + "jitter.csv"), reporting.jitter_csv(report))
    _write(Path(prefix + "pdv.csv"), reporting.pdv_csv(report))
    _write(Path(prefix + "throughput.csv"), reporting.throughput_csv(report))


def cmd_generate(args) -> int:
    scenario = _load_scenario(args.config)
    trace = _generate_trace(scenario, args.seed)
    _write(Path(args.output), write_trace_csv(trace).decode("ascii"))
    duration = 0
    if trace.packets:
        ts = trace.active_timestamps()
        duration = ts[-1] - ts[0]
    print(f"packets={len(trace)} duration_us={duration}")
    return EXIT_OK


def cmd_shape(args) -> int:
    scenario = _load_scenario(args.config)
    if not scenario.pipeline:
        raise ConfigError("pipeline is empty; nothing to shape")
    kind = StreamKind.AUDIO if isinstance(scenario.generator, AudioGenConfig) \
        else StreamKind.VIDEO
    trace = _read_trace(args.input, kind)
    _, results = run_pipeline(list(scenario.pipeline), trace)
    current = trace
    for k, result in enumerate(results):
        _write_stage(args.output, k, current, result)
        current = result.shaped
    print(f"stages={len(results)} shaped={len(current)} "
          f"dropped={sum(len(r.dropped) for r in results)}")
    return EXIT_OK


def _reconstruct_result(before: StreamTrace, prefix: str) -> ShapeResult:
    shaped = read_trace_csv(Path(prefix + "shaped.csv").read_bytes(), before.kind)
    by_identity = {(p.ssrc, p.seq): p for p in before.packets}
    dropped = []
    drop_lines = Path(prefix + "drops.csv").read_text(encoding="ascii").splitlines()
    for line in drop_lines[1:]:
        seq, ssrc, _, reason = line.split(",", 3)
        pkt = by_identity.get((int(ssrc), int(seq)))
        if pkt is None:
            raise metrics_mod.InconsistentInputError(
                f"dropped packet (ssrc {ssrc}, seq {seq}) not in the before trace")
        dropped.append((pkt, reason))
    return ShapeResult(shaped=shaped, dropped=tuple(dropped), occupancy=())


def cmd_analyze(args) -> int:
    window = 10**6
    if args.config:
        window = _load_scenario(args.config).throughput_window_us
    trace = _read_trace(args.input, StreamKind.AUDIO)
    out_prefix = args.output or ""
    if args.result is None:
        report = metrics_mod.metrics_report(trace, window)
        if out_prefix:
            _write_metrics(out_prefix, report)
        sys.stdout.write(reporting.summary_csv(report))
    else:
        result = _reconstruct_result(trace, args.result)
        comparison = metrics_mod.compare(trace, result, window)
        if out_prefix:
            _write(Path(out_prefix + "comparison.csv"),
                   reporting.comparison_csv(comparison))
            _write_metrics(out_prefix + "before.", comparison.before)
            _write_metrics(out_prefix + "after.", comparison.after)
        sys.stdout.write(reporting.comparison_csv(comparison))
    return EXIT_OK


def _report_stage(scenario: ScenarioConfig, prefix: str, k: int,
                  svg_path: str) -> reporting.PanelReport:
    if k >= len(scenario.pipeline):
        raise ConfigError(f"config has no pipeline stage {k}")
    cfg = scenario.pipeline[k]
    base = _stage_prefix(prefix, k)
    kind = StreamKind.AUDIO if isinstance(scenario.generator, AudioGenConfig) \
        else StreamKind.VIDEO
    incoming = read_trace_csv(Path(base + "input.csv").read_bytes(), kind)
    shaped = read_trace_csv(Path(base + "shaped.csv").read_bytes(), kind)
    occupancy = []
    occ_lines = Path(base + "occupancy.csv").read_text(encoding="ascii").splitlines()
    from .shaping import OccupancySample
    for line in occ_lines[1:]:
        ts, qp, qb, tok = (int(v) for v in line.split(","))
        occupancy.append(OccupancySample(ts, qp, qb, tok))
    result = ShapeResult(shaped=shaped, dropped=(), occupancy=tuple(occupancy))
    panel = reporting.panel_report(incoming, result, cfg)
    _write(Path(svg_path), reporting.render_svg(panel))
    _write(Path(svg_path).with_suffix(".panels.csv"), reporting.panels_csv(panel))
    return panel


def cmd_report(args) -> int:
    scenario = _load_scenario(args.config)
    panel = _report_stage(scenario, args.input, args.stage, args.output)
    print(f"panels={len(panel.panels)}")
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = _load_scenario(args.config)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    trace = _generate_trace(scenario, args.seed)
    _write(out / "input.csv", write_trace_csv(trace).decode("ascii"))

    input_report = metrics_mod.metrics_report(trace, scenario.throughput_window_us)
    _write_metrics(str(out / "metrics.input."), input_report)

    if scenario.pipeline:
        final, results = run_pipeline(list(scenario.pipeline), trace)
        prefix = str(out) + "/"
        current = trace
        for k, result in enumerate(results):
            _write_stage(prefix, k, current, result)
            _report_stage(scenario, prefix, k, str(out / f"stage{k}.figure.svg"))
            current = result.shaped
        combined = ShapeResult(
            shaped=final,
            dropped=tuple(d for r in results for d in r.dropped),
            occupancy=(),
        )
        comparison = metrics_mod.compare(trace, combined, scenario.throughput_window_us)
        _write(out / "comparison.csv", reporting.comparison_csv(comparison))
        _write_metrics(str(out / "metrics.output."), comparison.after)
        print(f"packets={len(trace)} shaped={len(final)} "
              f"dropped={len(combined.dropped)} stages={len(results)}")
    else:
        print(f"packets={len(trace)} stages=0")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtpshape",
        description="Traffic shaping and jitter analysis for RTP-style media traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a trace from a scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("shape", help="run a trace through the configured pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="output file prefix")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("analyze", help="metrics for one trace, or a before/after comparison")
    p.add_argument("--input", required=True)
    p.add_argument("--result", default=None,
                   help="stage prefix (e.g. out/stage0.) to compare against")
    p.add_argument("--output", default=None, help="output file prefix")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render the panel figure for a shape result")
    p.add_argument("--config", required=True)
    p.add_argument("--input", required=True, help="shape result prefix")
    p.add_argument("--stage", type=int, default=0)
    p.add_argument("--output", required=True, help="SVG path")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="generate, impair, shape, analyze and report in one go")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineStageError as exc:
        cause = exc.cause
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(cause, _USAGE_ERRORS) else EXIT_IO
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
