import random
from fractions import Fraction

import pytest

from rtpshape import (InconsistentInputError, InsufficientDataError,
                      LeakyBucketConfig, MediaPacket, MetricPreconditionError,
                      StreamKind, StreamTrace, TokenBucketConfig, compare,
                      format_decimal, interarrival_jitter, leaky_bucket_shape,
                      loss, metrics_report, pdv, throughput, token_bucket_shape)


def trace_from(rows, kind=StreamKind.AUDIO):
    """rows: (seq, send, recv) or (seq, send, recv, size)."""
    packets = tuple(
        MediaPacket(r[0], 1, 96, False, r[1], r[2], r[3] if len(r) > 3 else 125)
        for r in rows
    )
    return StreamTrace(kind, packets)


class TestJitter:
    def test_rfc_worked_example(self):
        trace = trace_from([(0, 0, 0), (1, 20000, 25000), (2, 40000, 45000)])
        series, final = interarrival_jitter(trace)
        assert series == ((1, Fraction(625, 2)), (2, Fraction(9375, 32)))
        assert final == Fraction("292.96875")

    def test_periodic_arrivals_zero_jitter(self):
        trace = trace_from([(k, 20000 * k, 20000 * k + 500) for k in range(10)])
        series, final = interarrival_jitter(trace)
        assert final == 0 and all(j == 0 for _, j in series)

    def test_constant_delay_cancels(self):
        base = [(k, 20000 * k, 20000 * k + (k % 3) * 700) for k in range(12)]
        shifted = [(s, snd, rcv + 50_000) for s, snd, rcv in base]
        assert interarrival_jitter(trace_from(base)) == \
            interarrival_jitter(trace_from(shifted))

    def test_too_few_packets(self):
        with pytest.raises(InsufficientDataError):
            interarrival_jitter(trace_from([(0, 0, 10)]))

    def test_missing_recv(self):
        trace = StreamTrace(StreamKind.AUDIO,
                            (MediaPacket(0, 1, 96, False, 0, None, 125),
                             MediaPacket(1, 1, 96, False, 100, None, 125)))
        with pytest.raises(MetricPreconditionError):
            interarrival_jitter(trace)


class TestPdv:
    def test_constant_delay_is_zero(self):
        trace = trace_from([(k, 1000 * k, 1000 * k + 300) for k in range(5)])
        values, stats = pdv(trace)
        assert set(values) == {0} and stats["max"] == 0

    def test_hand_example(self):
        trace = trace_from([(0, 0, 50000), (1, 0, 55000), (2, 0, 55000)])
        values, stats = pdv(trace)
        assert values == (0, 5000, 5000)
        assert stats["max"] == 5000
        assert stats["mean"] == Fraction(10000, 3)

    def test_single_packet(self):
        values, stats = pdv(trace_from([(0, 0, 123)]))
        assert values == (0,)
        assert stats == {"min": 0, "max": 0, "mean": 0, "p50": 0, "p99": 0}

    def test_shift_invariance(self):
        rows = [(k, 1000 * k, 1000 * k + 100 + (k * 37) % 500) for k in range(20)]
        shifted = [(s, snd, rcv + 9999) for s, snd, rcv in rows]
        assert pdv(trace_from(rows)) == pdv(trace_from(shifted))


class TestLoss:
    def test_complete_run(self):
        trace = trace_from([(k, k * 10, k * 10) for k in range(10)])
        assert loss(trace) == (0, Fraction(0), 0)

    def test_single_gap(self):
        trace = trace_from([(s, i * 10, i * 10) for i, s in enumerate([0, 1, 3, 4])])
        count, rate, dups = loss(trace)
        assert (count, rate, dups) == (1, Fraction(1, 5), 0)

    def test_wrap_around_gap(self):
        # stream spans 65534..3 across the wrap; 1 and 2 went missing
        seqs = [65534, 65535, 0, 3]
        trace = trace_from([(s, i * 10, i * 10) for i, s in enumerate(seqs)])
        count, rate, dups = loss(trace)
        assert count == 2 and rate == Fraction(2, 6) and dups == 0

    def test_contiguous_wrap_has_no_loss(self):
        seqs = [65534, 65535, 0, 1]
        trace = trace_from([(s, i * 10, i * 10) for i, s in enumerate(seqs)])
        assert loss(trace)[0] == 0

    def test_duplicates_counted_once(self):
        seqs = [0, 1, 1, 2]
        packets = tuple(MediaPacket(s, 1, 96, False, i * 10, i * 10, 125)
                        for i, s in enumerate(seqs))
        count, rate, dups = loss(StreamTrace(StreamKind.AUDIO, packets))
        assert count == 0 and dups == 1


class TestThroughput:
    def test_single_window(self):
        trace = trace_from([(k, k * 1000, k * 1000) for k in range(5)])
        assert throughput(trace, 10**6) == ((0, 625),)

    def test_empty_trace(self):
        assert throughput(StreamTrace(StreamKind.AUDIO, ()), 1000) == ()

    def test_half_open_windows(self):
        trace = trace_from([(0, 0, 0), (1, 999, 999), (2, 1000, 1000)])
        assert throughput(trace, 1000) == ((0, 250), (1000, 125))

    def test_shaped_output_respects_rate_bound(self):
        rng = random.Random(31)
        rows = []
        t = 0
        for k in range(300):
            t += rng.randint(0, 2000)
            rows.append((k, t, t, rng.randint(1, 400)))
        trace = trace_from(rows)
        cfg = TokenBucketConfig(rate=Fraction(100_000), capacity_tokens=2000)
        shaped = token_bucket_shape(trace, cfg).shaped
        for _, total in throughput(shaped, 10**6):
            assert total <= 100_000 + cfg.capacity_tokens


class TestCompare:
    def test_noop_shaping_yields_zero_deltas(self):
        rows = [(k, 20000 * k, 20000 * k + (k * 13) % 900) for k in range(30)]
        trace = trace_from(rows)
        cfg = TokenBucketConfig(rate=Fraction(10**9), capacity_tokens=10**6)
        report = compare(trace, token_bucket_shape(trace, cfg))
        assert report.added_latency_mean_us == 0
        assert report.added_latency_max_us == 0
        assert report.drops_introduced == 0
        assert report.pdv_max_reduction_pct == 0
        assert report.after.pdv_stats == report.before.pdv_stats

    def test_leaky_on_jittered_cbr_removes_post_transient_pdv(self):
        rng = random.Random(12)
        rows = []
        for k in range(400):
            j = rng.randint(0, 15000)
            rows.append((k, 20000 * k, 20000 * k + j))
        rows.sort(key=lambda r: r[2])
        trace = trace_from(rows)
        result = leaky_bucket_shape(trace, LeakyBucketConfig(15, 20000))
        assert result.dropped == ()
        report = compare(trace, result)
        deps = [p.recv_ts_us for p in result.shaped.packets]
        gaps = [b - a for a, b in zip(deps, deps[1:])]
        last_irregular = max((i for i, g in enumerate(gaps) if g != 20000), default=-1)
        assert last_irregular < len(gaps) - 50  # long exactly-periodic tail
        assert report.before.pdv_stats["max"] > 0

    def test_zero_before_pdv_is_undefined_not_zero(self):
        rows = [(k, 1000 * k, 1000 * k + 50) for k in range(10)]
        trace = trace_from(rows)
        cfg = TokenBucketConfig(rate=Fraction(10**9), capacity_tokens=10**6)
        report = compare(trace, token_bucket_shape(trace, cfg))
        assert report.pdv_max_reduction_pct is None

    def test_identity_mismatch(self):
        trace = trace_from([(0, 0, 10), (1, 100, 110)])
        other = trace_from([(5, 0, 10), (6, 100, 110)])
        cfg = TokenBucketConfig(rate=Fraction(10**9), capacity_tokens=10**6)
        result = token_bucket_shape(other, cfg)
        with pytest.raises(InconsistentInputError):
            compare(trace, result)


class TestReportAndFormatting:
    def test_report_degrades_per_metric(self):
        report = metrics_report(trace_from([(0, 0, 500)]))
        assert report.jitter_final_us is None  # insufficient data
        assert report.pdv_per_packet_us == (0,)
        assert report.loss_count == 0

    def test_empty_trace_is_insufficient(self):
        with pytest.raises(InsufficientDataError):
            metrics_report(StreamTrace(StreamKind.AUDIO, ()))

    @pytest.mark.parametrize("value,expected", [
        (0, "0"),
        (Fraction(625, 2), "312.5"),
        (Fraction(9375, 32), "292.96875"),
        (Fraction(1, 3), "0.333333"),
        (Fraction(-1, 3), "-0.333333"),
        (Fraction(10000, 3), "3333.333333"),
        (100, "100"),
    ])
    def test_format_decimal(self, value, expected):
        assert format_decimal(value) == expected

    def test_format_decimal_half_even_at_sixth_digit(self):
        assert format_decimal(Fraction(1, 2 * 10**6)) == "0"  # 0.5 ulp -> even
        assert format_decimal(Fraction(3, 2 * 10**6)) == "0.000002"  # 1.5 ulp -> even
