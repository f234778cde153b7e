"""Command-line front end.

Subcommands::

    sim        BER/FER over an Eb/N0 grid
    signstats  per-iteration sign-change and erasure fractions
    hist       histogram of decoder messages at one iteration
    threshold  density-evolution threshold of an ensemble
    detraj     density-evolution trajectory at one noise level
    treecheck  computation-tree check of SCMS against pruned MS

Every CSV starts with ``#`` lines echoing the configuration (worker count
and output path excluded) so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import ga, harness
from .channel import BPSK, QPSK, ebno_to_sigma
from .code import DegreeDistribution, TannerGraph, expand_qc, load_alist, load_qc, sample_irregular
from .decoders import DecoderConfig, QuantSpec
from .tree import pruning_trials

COMMANDS = ("sim", "signstats", "hist", "threshold", "detraj", "treecheck")
# rate-1/2 irregular ensemble used for the desk-scale experiments
DESK_ENSEMBLE = "3:0.15,4:0.85;7:0.35,8:0.65"


class UsageError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """``start:step:stop`` (inclusive), or a single value."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"cannot parse Eb/N0 grid {text!r}") from None
    if len(vals) == 1:
        return vals
    if len(vals) != 3:
        raise UsageError(f"Eb/N0 grid must be start:step:stop, got {text!r}")
    start, step, stop = vals
    if step <= 0 or stop < start:
        raise UsageError(f"empty Eb/N0 grid {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(n)]


def parse_ensemble(text: str) -> DegreeDistribution:
    return DegreeDistribution.parse(DESK_ENSEMBLE if text.strip().lower() == "desk" else text)


@dataclass
class ExperimentConfig:
    command: str
    code_source: tuple[str, str] | None = None
    N: int | None = None
    code_seed: int = 1
    decoder: DecoderConfig | None = None
    ebno: list[float] = field(default_factory=list)
    seed: int = 0
    quant: QuantSpec | None = None
    out: str | None = None
    workers: int = 1
    options: dict = field(default_factory=dict)

    def echo(self) -> str:
        """Configuration summary for CSV headers (no workers or paths)."""
        items = [f"command={self.command}"]
        if self.code_source is not None:
            items.append(f"code={self.code_label()}")
        if self.decoder is not None:
            d = self.decoder
            items += [f"decoder={d.name}", f"max_iter={d.max_iter}", f"early_stop={d.early_stop}"]
            items.append(f"quant={'float' if d.quant is None else d.quant.label()}")
        if self.ebno:
            items.append("ebno=" + ",".join(repr(e) for e in self.ebno))
        items.append(f"seed={self.seed}")
        items += [f"{k}={v}" for k, v in sorted(self.options.items())]
        return " ".join(items)

    def code_label(self) -> str:
        kind, value = self.code_source
        if kind == "ensemble":
            return f"ensemble[{parse_ensemble(value).spec()}]/N={self.N}/seed={self.code_seed}"
        return f"{kind}:{Path(value).name}"

    def load_code(self) -> TannerGraph:
        kind, value = self.code_source
        if kind == "alist":
            return load_alist(Path(value).read_text())
        if kind == "qc":
            return expand_qc(load_qc(Path(value).read_text()))
        return sample_irregular(parse_ensemble(value), self.N, self.code_seed)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scms", description="Self-corrected min-sum LDPC decoding experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def code_args(sp, required=True):
        g = sp.add_mutually_exclusive_group(required=required)
        g.add_argument("--alist", help="parity-check matrix in alist format")
        g.add_argument("--qc", help="quasi-cyclic base matrix file")
        g.add_argument("--ensemble", help='degree distribution, e.g. "3,6", "2:0.3,3:0.7;6:1" or "desk"')
        sp.add_argument("--N", type=int, help="code length for --ensemble")
        sp.add_argument("--code-seed", type=int, default=1, help="graph sampling seed for --ensemble")

    def decoder_args(sp, default="scms"):
        sp.add_argument("--decoder", default=default, help="name[:param]: sp, ms, nms[:scale], oms[:offset], scms")
        sp.add_argument("--max-iter", type=int, help="iteration limit (default 200 float, 30 fixed point)")
        sp.add_argument("--quant", default="float", help="float, fig4 or step:msg:app")
        sp.add_argument("--rate", type=float, help="rate for Eb/N0 conversion (default: design rate)")
        sp.add_argument("--modulation", choices=(BPSK, QPSK), default=BPSK)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="CSV output path ('-' for stdout)")

    s = sub.add_parser("sim", help="BER/FER Monte-Carlo simulation")
    code_args(s)
    decoder_args(s)
    s.add_argument("--ebno", required=True, help="Eb/N0 grid start:step:stop in dB (inclusive)")
    s.add_argument("--min-frame-errors", type=int, default=100)
    s.add_argument("--max-frames", type=int, default=1_000_000)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--batch", type=int, default=16, help="frames per worker task")
    common(s)

    s = sub.add_parser("signstats", help="sign-change fractions per iteration")
    code_args(s)
    decoder_args(s)
    s.add_argument("--ebno", required=True, type=float)
    s.add_argument("--frames", type=int, default=200)
    s.add_argument("--selector", choices=("all", "failed", "successful"), default="failed")
    s.add_argument("--pooling", choices=("pooled", "per-frame"), default="pooled")
    s.add_argument("--early-stop", action="store_true", help="stop frames at a valid codeword")
    common(s)

    s = sub.add_parser("hist", help="message histogram at one iteration")
    code_args(s)
    decoder_args(s)
    s.add_argument("--ebno", required=True, type=float)
    s.add_argument("--iteration", type=int, default=20)
    s.add_argument("--kind", choices=("check", "variable"), default="check")
    s.add_argument("--population", choices=("all", "unerased"), help="default: unerased for scms, all otherwise")
    s.add_argument("--frames", type=int, default=20)
    s.add_argument("--min-samples", type=int, default=0)
    s.add_argument("--bins", type=int, default=100)
    common(s)

    s = sub.add_parser("threshold", help="density-evolution threshold")
    s.add_argument("--ensemble", required=True)
    s.add_argument("--recurrence", default="scalar", help="scalar (alias theorem1) or joint (alias theorem2)")
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--sigma-lo", type=float, default=0.3)
    s.add_argument("--sigma-hi", type=float, default=2.0)
    s.add_argument("--de-iter", type=int, default=10_000)
    common(s)

    s = sub.add_parser("detraj", help="density-evolution trajectory")
    s.add_argument("--ensemble", required=True)
    s.add_argument("--recurrence", default="joint")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--sigma", type=float)
    g.add_argument("--ebno", type=float, help="Eb/N0 in dB at the design rate")
    s.add_argument("--de-iter", type=int, default=10_000)
    common(s)

    s = sub.add_parser("treecheck", help="SCMS vs MS on pruned computation trees")
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--max-nodes", type=int, default=60)
    common(s)
    return p


def parse_args(argv=None) -> ExperimentConfig:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        return _config_from(a)
    except ValueError as exc:
        parser.error(str(exc))


def _config_from(a) -> ExperimentConfig:
    cfg = ExperimentConfig(a.command, seed=a.seed, out=a.out)
    if a.command in ("sim", "signstats", "hist"):
        srcs = [(k, getattr(a, k)) for k in ("alist", "qc", "ensemble") if getattr(a, k) is not None]
        cfg.code_source = srcs[0]
        cfg.code_seed = a.code_seed
        if srcs[0][0] == "ensemble":
            if a.N is None:
                raise UsageError("--ensemble needs --N")
            cfg.N = a.N
        elif a.N is not None:
            raise UsageError("--N only applies to --ensemble")
        quant = QuantSpec.parse(a.quant)
        max_iter = a.max_iter if a.max_iter is not None else (200 if quant is None else 30)
        early = True if a.command == "sim" else (a.command == "signstats" and a.early_stop)
        cfg.decoder = DecoderConfig.parse(a.decoder, max_iter=max_iter, quant=quant, early_stop=early)
        cfg.quant = quant
        cfg.options["modulation"] = a.modulation
        if a.rate is not None:
            cfg.options["rate"] = a.rate
    if a.command == "sim":
        cfg.ebno = parse_grid(a.ebno)
        harness.StopRule(a.min_frame_errors, a.max_frames)
        cfg.options.update(min_frame_errors=a.min_frame_errors, max_frames=a.max_frames)
        if a.workers < 1 or a.batch < 1:
            raise UsageError("--workers and --batch must be >= 1")
        cfg.workers = a.workers
        cfg.options["batch"] = a.batch
    elif a.command == "signstats":
        cfg.ebno = [a.ebno]
        cfg.options.update(frames=a.frames, selector=a.selector, pooling=a.pooling)
    elif a.command == "hist":
        cfg.ebno = [a.ebno]
        if not 0 <= a.iteration <= cfg.decoder.max_iter:
            raise UsageError("--iteration must lie in [0, max_iter]")
        pop = a.population or ("unerased" if cfg.decoder.variant == "scms" else "all")
        cfg.options.update(iteration=a.iteration, kind=a.kind, population=pop, frames=a.frames,
                           min_samples=a.min_samples, bins=a.bins)
    elif a.command in ("threshold", "detraj"):
        cfg.options["ensemble"] = parse_ensemble(a.ensemble).spec()
        cfg.options["recurrence"] = ga.recurrence_name(a.recurrence)
        cfg.options["de_iter"] = a.de_iter
        if a.command == "threshold":
            cfg.options.update(tol=a.tol, sigma_lo=a.sigma_lo, sigma_hi=a.sigma_hi)
        else:
            dist = parse_ensemble(a.ensemble)
            sigma = a.sigma if a.sigma is not None else ebno_to_sigma(a.ebno, dist.design_rate)
            cfg.options["sigma"] = sigma
    elif a.command == "treecheck":
        if a.depth < 1 or a.trials < 1:
            raise UsageError("--depth and --trials must be >= 1")
        cfg.options.update(depth=a.depth, trials=a.trials, max_nodes=a.max_nodes)
    return cfg


class _Output:
    """CSV destination; with ``-`` the CSV goes to stdout and summaries to stderr."""

    def __init__(self, cfg: ExperimentConfig):
        self.path = cfg.out if cfg.out is not None else f"{cfg.command}.csv"
        self.log = sys.stderr if self.path == "-" else sys.stdout

    def write(self, text: str, path: str | None = None) -> None:
        path = path or self.path
        if path == "-":
            sys.stdout.write(text)
        else:
            Path(path).write_text(text)

    def sidecar(self, suffix: str) -> str:
        if self.path == "-":
            return "-"
        p = Path(self.path)
        return str(p.with_name(p.stem + suffix + p.suffix))

    def say(self, msg: str) -> None:
        print(msg, file=self.log)


def _sim_kwargs(cfg: ExperimentConfig) -> dict:
    kw = {"modulation": cfg.options["modulation"]}
    if "rate" in cfg.options:
        kw["rate"] = cfg.options["rate"]
    return kw


def run(cfg: ExperimentConfig) -> int:
    out = _Output(cfg)
    opt = cfg.options
    echo = cfg.echo()
    if cfg.command == "treecheck":
        matches, pruned = pruning_trials(opt["trials"], opt["depth"], cfg.seed, opt["max_nodes"])
        out.say(f"{matches}/{opt['trials']} exact matches ({pruned} trees pruned)")
        out.write(harness.to_csv_text(("trials", "matches", "pruned"), [(opt["trials"], matches, pruned)], echo))
        return 0 if matches == opt["trials"] else 1

    if cfg.command in ("threshold", "detraj"):
        dist = DegreeDistribution.parse(opt["ensemble"])
        rec = opt["recurrence"]
        if cfg.command == "threshold":
            sigma = ga.threshold_search(dist, rec, opt["tol"], sigma_lo=opt["sigma_lo"], sigma_hi=opt["sigma_hi"],
                                        max_iter=opt["de_iter"])
            out.say(f"sigma*={sigma:.6f} Eb/N0*={ga.sigma_to_ebno(sigma, dist.design_rate):.4f} dB ({rec}, {dist.spec()})")
        else:
            sigma = opt["sigma"]
        rows = ga.trajectory(ga.EnsembleParams(dist, sigma), rec, max_iter=opt["de_iter"])
        if cfg.command == "detraj":
            last = rows[-1]
            out.say(f"sigma={sigma:.6f} iterations={last[0]} Pe={last[3]:.3e}")
        out.write(harness.to_csv_text(ga.TRAJECTORY_COLUMNS, rows, f"{echo} sigma={sigma!r}"))
        return 0

    graph = cfg.load_code()
    code_id = cfg.code_label()
    dec = cfg.decoder
    kw = _sim_kwargs(cfg)
    if cfg.command == "sim":
        stop = harness.StopRule(opt["min_frame_errors"], opt["max_frames"])
        records = []
        for eb in cfg.ebno:
            r = harness.simulate_point(graph, dec, eb, stop, cfg.seed, code_id=code_id, workers=cfg.workers,
                                       batch=opt["batch"], **kw)
            out.say(f"Eb/N0={eb:g} dB frames={r.frames} BER={r.ber:.4e} FER={r.fer:.4e} avg_iters={r.avg_iterations:.2f}")
            records.append(r)
        out.write(harness.to_csv_text(harness.SIM_COLUMNS, harness.sim_rows(records), echo))
    elif cfg.command == "signstats":
        st = harness.sign_change_stats(graph, dec, cfg.ebno[0], opt["selector"], cfg.seed, frames=opt["frames"],
                                       pooling=opt["pooling"], **kw)
        out.say(f"{st.frames} frames; iteration 1: {st.sign_change_fraction[0]:.4f}, "
                f"last ({len(st.sign_change_fraction)}): {st.sign_change_fraction[-1]:.4f}")
        out.write(harness.to_csv_text(harness.ITER_COLUMNS, harness.iter_rows(st), echo))
    elif cfg.command == "hist":
        h = harness.message_histogram(graph, dec, cfg.ebno[0], opt["iteration"], opt["kind"], opt["population"],
                                      cfg.seed, opt["bins"], frames=opt["frames"], min_samples=opt["min_samples"], **kw)
        out.say(f"{h.size} samples from {h.frames} frames; mean={h.sample_mean:.4f} variance={h.sample_variance:.4f} "
                f"variance/(2 mean)={h.consistency:.4f}")
        out.write(harness.to_csv_text(harness.HIST_COLUMNS, harness.hist_rows(h), echo))
        stats = [(h.size, h.sample_mean, h.sample_variance, h.consistency)]
        out.write(harness.to_csv_text(("samples", "mean", "variance", "consistency"), stats, echo), out.sidecar(".stats"))
    return 0


def main(argv=None) -> int:
    cfg = parse_args(argv)
    try:
        return run(cfg)
    except (OSError, ValueError) as exc:
        print(f"scms {cfg.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
