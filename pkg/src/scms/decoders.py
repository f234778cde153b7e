"""Flooding message-passing decoders: SP, MS, NMS, OMS and self-corrected MS.

The per-node update rules are available as small numpy functions
(:func:`check_update_ms`, :func:`variable_update`, :func:`scms_filter`, ...).
:func:`decode` runs the full iteration in a numba kernel that implements
the same rules over flat edge arrays (see :class:`scms.code.EdgeIndex`).

Conventions
-----------
* ``sgn(0) = +1`` inside check updates. The magnitude is then 0, so the
  choice never reaches an output, but it keeps traces deterministic.
* In the self-corrected variant a zero on either side of the sign
  comparison matches any sign: an erased message is always replaced by the
  new extrinsic value, and a zero extrinsic value is passed through.
* Hard decision is ``app < 0``; ``app == 0`` decides bit 0.
* Variable-node sums accumulate ``gamma`` then the incoming ``beta`` in
  adjacency order, and ``alpha_tmp = app - beta`` is formed from the
  rounded ``app``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .code import TannerGraph

SP, MS, NMS, OMS, SCMS = "sp", "ms", "nms", "oms", "scms"
VARIANTS = (SP, MS, NMS, OMS, SCMS)
_VARIANT_CODE = {v: i for i, v in enumerate(VARIANTS)}

TRACE_NONE, TRACE_STATS, TRACE_FULL = "none", "stats", "full"


@dataclass(frozen=True)
class QuantSpec:
    """Uniform fixed-point grid with saturation.

    Channel LLRs and edge messages live in ``[msg_lo, msg_hi)``, the
    a-posteriori sums in ``[app_lo, app_hi)``; all on multiples of ``step``.
    """

    step: float = 0.25
    msg_lo: float = -8.0
    msg_hi: float = 8.0
    app_lo: float = -32.0
    app_hi: float = 32.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("quantization step must be positive")
        for lo, hi in ((self.msg_lo, self.msg_hi), (self.app_lo, self.app_hi)):
            if not lo < hi:
                raise ValueError(f"empty range [{lo}, {hi})")
            for v in (lo, hi):
                if abs(v / self.step - round(v / self.step)) > 1e-9:
                    raise ValueError(f"range bound {v} is not a multiple of step {self.step}")

    @classmethod
    def parse(cls, text: str) -> "QuantSpec | None":
        """``float`` -> None, ``fig4`` -> the 0.25 / [-8,8) / [-32,32) grid,
        ``step:msg:app`` -> symmetric ranges ``[-msg, msg)`` and ``[-app, app)``."""
        text = text.strip().lower()
        if text in ("float", "none", ""):
            return None
        if text == "fig4":
            return cls()
        try:
            step, msg, app = (float(t) for t in text.split(":"))
        except ValueError:
            raise ValueError(f"cannot parse quantization spec {text!r}") from None
        return cls(step, -msg, msg, -app, app)

    def label(self) -> str:
        return f"{self.step!r}:{self.msg_hi!r}:{self.app_hi!r}"


@dataclass(frozen=True)
class DecoderConfig:
    variant: str = SCMS
    max_iter: int = 200
    early_stop: bool = True
    scale: float = 0.8
    offset: float = 0.5
    quant: QuantSpec | None = None
    trace: str = TRACE_NONE
    llr_cap: float = 30.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown decoder variant {self.variant!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.scale <= 1:
            raise ValueError("NMS scale must lie in (0, 1]")
        if self.offset < 0:
            raise ValueError("OMS offset must be >= 0")
        if self.trace not in (TRACE_NONE, TRACE_STATS, TRACE_FULL):
            raise ValueError(f"unknown trace level {self.trace!r}")
        if not self.llr_cap > 0:
            raise ValueError("llr_cap must be positive")

    @classmethod
    def parse(cls, text: str, **kwargs) -> "DecoderConfig":
        """``name[:param]``, e.g. ``scms``, ``nms:0.8``, ``oms:0.5``."""
        name, _, param = text.strip().lower().partition(":")
        if name not in VARIANTS:
            raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(VARIANTS)}")
        if param:
            if name == NMS:
                kwargs["scale"] = float(param)
            elif name == OMS:
                kwargs["offset"] = float(param)
            else:
                raise ValueError(f"decoder {name!r} takes no parameter")
        return cls(variant=name, **kwargs)

    @property
    def name(self) -> str:
        if self.variant == NMS:
            return f"nms:{self.scale!r}"
        if self.variant == OMS:
            return f"oms:{self.offset!r}"
        return self.variant

    def with_(self, **changes) -> "DecoderConfig":
        return replace(self, **changes)


@dataclass
class DecodeTrace:
    """Per-iteration statistics; ``alpha`` / ``beta`` only at full trace.

    ``sign_changes[l-1]`` counts edges whose variable-to-check message
    changed sign at iteration ``l`` relative to its last non-zero sign; a
    non-zero message replaced by zero also counts. ``alpha[0]`` holds the
    initial messages, ``alpha[l]`` and ``beta[l-1]`` those of iteration l.
    """

    edge_count: int
    sign_changes: np.ndarray
    erasures: np.ndarray
    app_ties: np.ndarray
    alpha: np.ndarray | None = None
    beta: np.ndarray | None = None

    @property
    def sign_change_fraction(self) -> np.ndarray:
        return self.sign_changes / self.edge_count

    @property
    def erasure_fraction(self) -> np.ndarray:
        return self.erasures / self.edge_count


@dataclass
class DecodeResult:
    bits: np.ndarray
    app: np.ndarray
    iterations: int
    converged: bool
    trace: DecodeTrace | None = field(default=None, repr=False)


# -- scalar / vector update rules ------------------------------------------


def _sgn(x) -> np.ndarray:
    return np.where(np.asarray(x) < 0, -1.0, 1.0)


def check_update_ms(incoming) -> float:
    """Min-sum check output from the extrinsic inputs (target edge excluded)."""
    a = np.asarray(incoming, dtype=float)
    if a.size == 0:
        raise ValueError("check update needs at least one incoming message")
    return float(np.prod(_sgn(a)) * np.min(np.abs(a)))


def check_update_sp(incoming, llr_cap: float = 30.0) -> float:
    """Sum-product (tanh rule) check output, saturated at ``|beta| <= llr_cap``."""
    a = np.asarray(incoming, dtype=float)
    if a.size == 0:
        raise ValueError("check update needs at least one incoming message")
    p = float(np.prod(np.tanh(a / 2.0)))
    lim = math.tanh(llr_cap / 2.0)
    return 2.0 * math.atanh(min(max(p, -lim), lim))


def apply_correction(beta, config: DecoderConfig):
    """NMS scales, OMS subtracts an offset clamped at zero, others pass through."""
    b = np.asarray(beta, dtype=float)
    if config.variant == NMS:
        out = config.scale * b
    elif config.variant == OMS:
        out = _sgn(b) * np.maximum(np.abs(b) - config.offset, 0.0)
    else:
        out = b
    return float(out) if out.ndim == 0 else out


def variable_update(gamma: float, incoming_beta) -> tuple[float, np.ndarray]:
    """Return ``(app, alpha_tmp)`` with ``app = gamma + sum(beta)`` and
    ``alpha_tmp[k] = app - beta[k]``."""
    b = np.asarray(incoming_beta, dtype=float)
    app = float(gamma)
    for v in b:
        app += v
    return app, app - b


def scms_filter(alpha_tmp, alpha_prev):
    """Erase (set to 0) new messages whose sign disagrees with the previous
    message; a zero on either side is compatible with both signs."""
    t = np.asarray(alpha_tmp, dtype=float)
    p = np.asarray(alpha_prev, dtype=float)
    flip = (p != 0) & (t != 0) & ((p < 0) != (t < 0))
    out = np.where(flip, 0.0, t)
    return float(out) if out.ndim == 0 else out


def quantize(x, spec: QuantSpec, kind: str = "message"):
    """Saturate to ``[lo, hi - step]`` then round to the nearest multiple of
    ``step``, ties away from zero."""
    if kind == "message":
        lo, hi = spec.msg_lo, spec.msg_hi
    elif kind == "app":
        lo, hi = spec.app_lo, spec.app_hi
    else:
        raise ValueError(f"unknown quantization range {kind!r}")
    v = np.clip(np.asarray(x, dtype=float), lo, hi - spec.step)
    out = np.sign(v) * np.floor(np.abs(v) / spec.step + 0.5) * spec.step + 0.0
    return float(out) if out.ndim == 0 else out


# -- kernel -----------------------------------------------------------------

_jit = numba.njit(cache=True, nogil=True)


@_jit
def _qz(x, step, lo, hi):
    if x < lo:
        x = lo
    elif x > hi - step:
        x = hi - step
    k = math.floor(abs(x) / step + 0.5)
    if x < 0:
        return -k * step + 0.0
    return k * step


@_jit
def _decode_kernel(
    chk_ptr, edge_var, var_ptr, var_edges, gamma_in,
    variant, scale, offset, max_iter, early_stop,
    use_quant, step, msg_lo, msg_hi, app_lo, app_hi, llr_cap,
    app, bits, alpha, beta, sign_changes, erasures, app_ties,
    alpha_trace, beta_trace,
):
    M = chk_ptr.shape[0] - 1
    N = var_ptr.shape[0] - 1
    E = edge_var.shape[0]
    full = alpha_trace.shape[0] > 0
    gamma = np.empty(N)
    for n in range(N):
        gamma[n] = _qz(gamma_in[n], step, msg_lo, msg_hi) if use_quant else gamma_in[n]
    lastsign = np.zeros(E, dtype=np.int8)
    for n in range(N):
        s = 1 if gamma[n] > 0 else (-1 if gamma[n] < 0 else 0)
        for k in range(var_ptr[n], var_ptr[n + 1]):
            e = var_edges[k]
            alpha[e] = gamma[n]
            lastsign[e] = s
    if full:
        for e in range(E):
            alpha_trace[0, e] = alpha[e]
    dmax = 0
    for m in range(M):
        d = chk_ptr[m + 1] - chk_ptr[m]
        if d > dmax:
            dmax = d
    pre = np.empty(dmax + 1)
    suf = np.empty(dmax + 1)
    th = np.empty(dmax + 1)
    lim = math.tanh(llr_cap / 2.0)

    it = 0
    converged = False
    while it < max_iter:
        it += 1
        # check node processing
        for m in range(M):
            lo = chk_ptr[m]
            hi = chk_ptr[m + 1]
            if variant == 0:
                d = hi - lo
                for k in range(d):
                    th[k] = math.tanh(alpha[lo + k] / 2.0)
                pre[0] = 1.0
                for k in range(d):
                    pre[k + 1] = pre[k] * th[k]
                suf[d] = 1.0
                for k in range(d - 1, -1, -1):
                    suf[k] = suf[k + 1] * th[k]
                for k in range(d):
                    p = pre[k] * suf[k + 1]
                    if p > lim:
                        p = lim
                    elif p < -lim:
                        p = -lim
                    b = 2.0 * math.atanh(p)
                    if use_quant:
                        b = _qz(b, step, msg_lo, msg_hi)
                    beta[lo + k] = b
            else:
                min1 = np.inf
                min2 = np.inf
                imin = -1
                neg = 0
                for e in range(lo, hi):
                    a = alpha[e]
                    if a < 0:
                        neg += 1
                        a = -a
                    if a < min1:
                        min2 = min1
                        min1 = a
                        imin = e
                    elif a < min2:
                        min2 = a
                for e in range(lo, hi):
                    mag = min2 if e == imin else min1
                    sneg = neg - (1 if alpha[e] < 0 else 0)
                    if variant == 2:
                        mag = scale * mag
                    elif variant == 3:
                        mag = mag - offset
                        if mag < 0.0:
                            mag = 0.0
                    b = -mag if sneg & 1 else mag
                    if use_quant:
                        b = _qz(b, step, msg_lo, msg_hi)
                    beta[e] = b + 0.0
        if full:
            for e in range(E):
                beta_trace[it - 1, e] = beta[e]
        # a-posteriori and variable node processing
        changes = 0
        zeros = 0
        ties = 0
        for n in range(N):
            lo = var_ptr[n]
            hi = var_ptr[n + 1]
            s = gamma[n]
            for k in range(lo, hi):
                s += beta[var_edges[k]]
            if use_quant:
                s = _qz(s, step, app_lo, app_hi)
            app[n] = s
            bits[n] = 1 if s < 0 else 0
            if s == 0:
                ties += 1
            for k in range(lo, hi):
                e = var_edges[k]
                t = s - beta[e]
                if use_quant:
                    t = _qz(t, step, msg_lo, msg_hi)
                old = alpha[e]
                new = t
                if variant == 4 and old != 0.0 and t != 0.0 and ((old < 0) != (t < 0)):
                    new = 0.0
                if new == 0.0:
                    zeros += 1
                    if old != 0.0:
                        changes += 1
                else:
                    sg = 1 if new > 0 else -1
                    if lastsign[e] != 0 and sg != lastsign[e]:
                        changes += 1
                    lastsign[e] = sg
                alpha[e] = new + 0.0
        sign_changes[it - 1] = changes
        erasures[it - 1] = zeros
        app_ties[it - 1] = ties
        if full:
            for e in range(E):
                alpha_trace[it, e] = alpha[e]
        # syndrome
        ok = True
        for m in range(M):
            par = 0
            for e in range(chk_ptr[m], chk_ptr[m + 1]):
                par ^= bits[edge_var[e]]
            if par:
                ok = False
                break
        converged = ok
        if ok and early_stop:
            break
    return it, converged


def decode(graph: TannerGraph, llr, config: DecoderConfig) -> DecodeResult:
    """Decode one frame of channel LLRs with the flooding schedule."""
    gamma = np.ascontiguousarray(llr, dtype=np.float64)
    if gamma.shape != (graph.N,):
        raise ValueError(f"expected {graph.N} LLRs, got shape {gamma.shape}")
    if graph.chk_degrees.min() < 2:
        raise ValueError("graph has check nodes of degree < 2; not decodable")
    ix = graph.edges
    E = len(ix.edge_var)
    T = config.max_iter
    q = config.quant
    app = np.empty(graph.N)
    bits = np.empty(graph.N, dtype=np.uint8)
    alpha = np.empty(E)
    beta = np.empty(E)
    changes = np.zeros(T, dtype=np.int64)
    zeros = np.zeros(T, dtype=np.int64)
    ties = np.zeros(T, dtype=np.int64)
    full = config.trace == TRACE_FULL
    a_tr = np.zeros((T + 1, E) if full else (0, 0))
    b_tr = np.zeros((T, E) if full else (0, 0))
    iters, conv = _decode_kernel(
        ix.chk_ptr, ix.edge_var, ix.var_ptr, ix.var_edges, gamma,
        _VARIANT_CODE[config.variant], config.scale, config.offset, T, config.early_stop,
        q is not None,
        q.step if q else 1.0, q.msg_lo if q else 0.0, q.msg_hi if q else 0.0,
        q.app_lo if q else 0.0, q.app_hi if q else 0.0,
        config.llr_cap,
        app, bits, alpha, beta, changes, zeros, ties, a_tr, b_tr,
    )
    trace = None
    if config.trace != TRACE_NONE:
        trace = DecodeTrace(
            E, changes[:iters], zeros[:iters], ties[:iters],
            a_tr[: iters + 1] if full else None,
            b_tr[:iters] if full else None,
        )
    return DecodeResult(bits, app, int(iters), bool(conv), trace)
