"""Monte-Carlo experiments: error rates, sign-change dynamics, message
histograms.

Every frame transmits the all-zero codeword over AWGN with noise drawn from
a generator keyed by ``(seed, frame)``. Frames are decoded in index order in
fixed-size batches (optionally on a thread pool; the numba kernel releases
the GIL) and the results are truncated at the exact frame where the stop
rule fires, so all outputs are independent of the worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import BPSK, ChannelSpec, all_zero_llr, frame_rng
from .code import TannerGraph
from .decoders import SCMS, TRACE_FULL, TRACE_STATS, DecoderConfig, decode

FRAMES_ALL, FRAMES_FAILED, FRAMES_SUCCESSFUL = "all", "failed", "successful"
POOLED, PER_FRAME = "pooled", "per-frame"
POP_ALL, POP_UNERASED = "all", "unerased"


@dataclass(frozen=True)
class StopRule:
    min_frame_errors: int = 100
    max_frames: int = 1_000_000

    def __post_init__(self):
        if self.min_frame_errors < 1 or self.max_frames < 1:
            raise ValueError("stop rule limits must be >= 1")


@dataclass(frozen=True)
class SimRecord:
    ebno_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    total_iterations: int
    bits_per_frame: int
    decoder: str
    code: str
    seed: int

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.bits_per_frame)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames

    @property
    def avg_iterations(self) -> float:
        return self.total_iterations / self.frames


SIM_COLUMNS = ("ebno_db", "frames", "bit_errors", "frame_errors", "ber", "fer", "avg_iters", "decoder", "code", "seed")


def _spec(graph: TannerGraph, ebno_db: float, rate: float | None, modulation: str) -> ChannelSpec:
    return ChannelSpec.from_ebno(ebno_db, graph.design_rate if rate is None else rate, modulation)


def _frame_llr(graph, spec, seed, frame):
    return all_zero_llr(graph.N, spec, seed, frame)


def _run_batch(graph, config, spec, seed, frames):
    out = np.empty((len(frames), 2), dtype=np.int64)
    for k, f in enumerate(frames):
        r = decode(graph, _frame_llr(graph, spec, seed, f), config)
        out[k] = int(r.bits.sum()), r.iterations
    return out


def _frame_stream(graph, config, spec, seed, workers, batch):
    """Yield ``(bit_errors, iterations)`` per frame in frame order."""
    start = 0
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while True:
            chunks = [range(start + k * batch, start + (k + 1) * batch) for k in range(max(workers, 1))]
            if pool is None:
                results = [_run_batch(graph, config, spec, seed, c) for c in chunks]
            else:
                results = list(pool.map(lambda c: _run_batch(graph, config, spec, seed, c), chunks))
            for res in results:
                yield from res
            start += batch * max(workers, 1)
    finally:
        if pool is not None:
            pool.shutdown()


def simulate_point(
    graph: TannerGraph,
    config: DecoderConfig,
    ebno_db: float,
    stop: StopRule = StopRule(),
    seed: int = 0,
    *,
    code_id: str = "code",
    rate: float | None = None,
    modulation: str = BPSK,
    workers: int = 1,
    batch: int = 32,
) -> SimRecord:
    spec = _spec(graph, ebno_db, rate, modulation)
    frames = bit_errors = frame_errors = iters = 0
    for be, it in _frame_stream(graph, config, spec, seed, workers, batch):
        frames += 1
        bit_errors += int(be)
        frame_errors += int(be > 0)
        iters += int(it)
        if frame_errors >= stop.min_frame_errors or frames >= stop.max_frames:
            break
    return SimRecord(float(ebno_db), frames, bit_errors, frame_errors, iters, graph.N, config.name, code_id, int(seed))


def run_monte_carlo(
    graph: TannerGraph,
    config: DecoderConfig,
    ebno_list,
    stop: StopRule = StopRule(),
    seed: int = 0,
    **kwargs,
) -> list[SimRecord]:
    """Bit and frame error rates over an Eb/N0 grid.

    Bit errors are counted over all ``N`` code bits of each frame (no
    encoder is involved, so information positions are not identified).
    """
    return [simulate_point(graph, config, eb, stop, seed, **kwargs) for eb in ebno_list]


def uncoded_ber(ebno_db: float, bits: int, seed: int = 0, chunk: int = 1 << 20) -> float:
    """Empirical BER of uncoded BPSK (rate 1) on the all-zero word."""
    sigma = (2.0 * 10.0 ** (ebno_db / 10.0)) ** -0.5
    errors = done = 0
    frame = 0
    while done < bits:
        n = min(chunk, bits - done)
        y = 1.0 + sigma * frame_rng(seed, frame).standard_normal(n)
        errors += int(np.count_nonzero(y < 0))
        done += n
        frame += 1
    return errors / bits


# -- sign-change dynamics ----------------------------------------------------


@dataclass
class IterStats:
    """Per-iteration averages; index ``l-1`` describes iteration ``l``."""

    sign_change_fraction: np.ndarray
    erasure_fraction: np.ndarray
    frames: int
    selector: str
    pooling: str

    @property
    def iterations(self) -> np.ndarray:
        return np.arange(1, len(self.sign_change_fraction) + 1)


ITER_COLUMNS = ("iteration", "sign_change_fraction", "erasure_fraction")


def frame_traces(graph, config, ebno_db, frames, seed=0, *, rate=None, modulation=BPSK):
    """Decode frames ``0..frames-1`` with statistics tracing; yields results."""
    spec = _spec(graph, ebno_db, rate, modulation)
    cfg = config.with_(trace=TRACE_STATS if config.trace != TRACE_FULL else TRACE_FULL)
    for f in range(frames):
        yield decode(graph, _frame_llr(graph, spec, seed, f), cfg)


def sign_change_stats(
    graph: TannerGraph,
    config: DecoderConfig,
    ebno_db: float,
    selector: str = FRAMES_ALL,
    seed: int = 0,
    *,
    frames: int = 100,
    pooling: str = POOLED,
    rate: float | None = None,
    modulation: str = BPSK,
) -> IterStats:
    """Average sign-change and erasure fractions per iteration.

    ``selector`` keeps all frames, those left with bit errors (failed) or
    those decoded correctly. With early stopping a frame only contributes to
    the iterations it ran: ``pooled`` divides summed counts by summed edges
    per iteration, ``per-frame`` averages per-frame fractions.
    """
    if selector not in (FRAMES_ALL, FRAMES_FAILED, FRAMES_SUCCESSFUL):
        raise ValueError(f"unknown frame selector {selector!r}")
    if pooling not in (POOLED, PER_FRAME):
        raise ValueError(f"unknown pooling mode {pooling!r}")
    T = config.max_iter
    changes = np.zeros(T)
    erased = np.zeros(T)
    weight = np.zeros(T)
    used = 0
    for r in frame_traces(graph, config, ebno_db, frames, seed, rate=rate, modulation=modulation):
        failed = bool(r.bits.any())
        if (selector == FRAMES_FAILED and not failed) or (selector == FRAMES_SUCCESSFUL and failed):
            continue
        used += 1
        n = r.iterations
        tr = r.trace
        if pooling == POOLED:
            changes[:n] += tr.sign_changes
            erased[:n] += tr.erasures
            weight[:n] += tr.edge_count
        else:
            changes[:n] += tr.sign_change_fraction
            erased[:n] += tr.erasure_fraction
            weight[:n] += 1
    if used == 0:
        raise ValueError(f"no frames matched selector {selector!r}")
    last = int(np.max(np.nonzero(weight)[0])) + 1
    w = weight[:last]
    with np.errstate(invalid="ignore"):
        return IterStats(changes[:last] / w, erased[:last] / w, used, selector, pooling)


# -- message histograms ------------------------------------------------------


@dataclass
class MessageHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    sample_mean: float
    sample_variance: float
    size: int
    population: str
    frames: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def consistency(self) -> float:
        """``variance / (2 mean)``; 1 for a symmetric Gaussian."""
        if self.size == 0 or self.sample_mean == 0:
            return math.nan
        return self.sample_variance / (2.0 * self.sample_mean)

    @property
    def empty(self) -> bool:
        return self.size == 0


HIST_COLUMNS = ("bin_lo", "bin_hi", "count")


def message_samples(
    graph: TannerGraph,
    config: DecoderConfig,
    ebno_db: float,
    iteration: int,
    kind: str = "check",
    population: str = POP_ALL,
    seed: int = 0,
    *,
    frames: int = 20,
    min_samples: int = 0,
    max_frames: int = 10_000,
    selector: str = FRAMES_ALL,
    rate: float | None = None,
    modulation: str = BPSK,
) -> tuple[np.ndarray, int]:
    """Edge messages of iteration ``iteration`` pooled over frames.

    ``kind='check'`` takes check-to-variable messages (``iteration >= 1``),
    ``kind='variable'`` variable-to-check messages (iteration 0 gives the
    channel LLRs). Frames are decoded without early stopping; at least
    ``frames`` frames are used and more are added until ``min_samples``
    values are collected. ``selector`` filters frames by their hard
    decisions at ``iteration``.
    """
    if kind not in ("check", "variable"):
        raise ValueError(f"unknown message kind {kind!r}")
    if population not in (POP_ALL, POP_UNERASED):
        raise ValueError(f"unknown population {population!r}")
    if kind == "check" and iteration < 1:
        raise ValueError("check messages exist from iteration 1")
    if iteration > config.max_iter:
        raise ValueError("iteration exceeds max_iter")
    spec = _spec(graph, ebno_db, rate, modulation)
    cfg = config.with_(max_iter=max(iteration, 1), early_stop=False, trace=TRACE_FULL)
    parts = []
    total = used = 0
    f = 0
    while (used < frames or total < min_samples) and f < max_frames:
        r = decode(graph, _frame_llr(graph, spec, seed, f), cfg)
        f += 1
        if iteration >= 1 and selector != FRAMES_ALL:
            failed = bool(r.bits.any())
            if (selector == FRAMES_FAILED) != failed:
                continue
        x = r.trace.beta[iteration - 1] if kind == "check" else r.trace.alpha[iteration]
        if population == POP_UNERASED:
            x = x[x != 0]
        parts.append(x)
        total += len(x)
        used += 1
    return (np.concatenate(parts) if parts else np.empty(0)), used


def histogram(samples: np.ndarray, bins: int | np.ndarray = 100, population: str = POP_ALL, frames: int = 0) -> MessageHistogram:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        return MessageHistogram(np.empty(0), np.empty(0, dtype=np.int64), math.nan, math.nan, 0, population, frames)
    counts, edges = np.histogram(samples, bins=bins)
    return MessageHistogram(edges, counts, float(samples.mean()), float(samples.var()), int(samples.size), population, frames)


def message_histogram(
    graph: TannerGraph,
    config: DecoderConfig,
    ebno_db: float,
    iteration: int,
    kind: str = "check",
    population: str | None = None,
    seed: int = 0,
    bins: int | np.ndarray = 100,
    **kwargs,
) -> MessageHistogram:
    """Histogram with mean/variance of one message population.

    The population defaults to unerased messages for the self-corrected
    decoder and to all messages otherwise.
    """
    if population is None:
        population = POP_UNERASED if config.variant == SCMS else POP_ALL
    x, used = message_samples(graph, config, ebno_db, iteration, kind, population, seed, **kwargs)
    return histogram(x, bins, population, used)


# -- CSV ----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(stream, columns, rows, comment: str | None = None) -> None:
    if comment:
        for line in comment.splitlines():
            stream.write(f"# {line}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def sim_rows(records):
    for r in records:
        yield (r.ebno_db, r.frames, r.bit_errors, r.frame_errors, r.ber, r.fer, r.avg_iterations, r.decoder, r.code, r.seed)


def iter_rows(stats: IterStats):
    for l, s, e in zip(stats.iterations, stats.sign_change_fraction, stats.erasure_fraction):
        yield (int(l), s, e)


def hist_rows(h: MessageHistogram):
    for lo, hi, c in zip(h.bin_edges[:-1], h.bin_edges[1:], h.counts):
        yield (lo, hi, int(c))


def to_csv_text(columns, rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    write_csv(buf, columns, rows, comment)
    return buf.getvalue()
