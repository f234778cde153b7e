"""Slow pure-Python flooding decoder used as an oracle for the compiled kernel.

Written from the update rules directly with dictionaries keyed by ``(m, n)``;
it shares no code with :mod:`scms.decoders` beyond the graph object.
"""

import math


def _sgn(x):
    return -1.0 if x < 0 else 1.0


def _q(x, q, lo, hi):
    x = min(max(x, lo), hi - q.step)
    k = math.floor(abs(x) / q.step + 0.5)
    return (-k if x < 0 else k) * q.step + 0.0


def reference_decode(graph, gamma, variant, max_iter, scale=0.8, offset=0.5, quant=None, early_stop=False, cap=30.0):
    """Return ``(bits, app, iterations, alpha_history)``."""
    gamma = [float(g) for g in gamma]
    if quant is not None:
        gamma = [_q(g, quant, quant.msg_lo, quant.msg_hi) for g in gamma]
    alpha = {(m, n): gamma[n] for n in range(graph.N) for m in graph.var_adj[n]}
    history = [dict(alpha)]
    bits = [0] * graph.N
    app = list(gamma)
    it = 0
    for it in range(1, max_iter + 1):
        beta = {}
        for m, nbrs in enumerate(graph.chk_adj):
            for n in nbrs:
                others = [alpha[(m, k)] for k in nbrs if k != n]
                if variant == "sp":
                    p = 1.0
                    for a in others:
                        p *= math.tanh(a / 2.0)
                    lim = math.tanh(cap / 2.0)
                    b = 2.0 * math.atanh(min(max(p, -lim), lim))
                else:
                    s = 1.0
                    for a in others:
                        s *= _sgn(a)
                    mag = min(abs(a) for a in others)
                    if variant == "nms":
                        mag = scale * mag
                    elif variant == "oms":
                        mag = max(mag - offset, 0.0)
                    b = s * mag
                if quant is not None:
                    b = _q(b, quant, quant.msg_lo, quant.msg_hi)
                beta[(m, n)] = b + 0.0
        for n in range(graph.N):
            total = gamma[n]
            for m in graph.var_adj[n]:
                total += beta[(m, n)]
            if quant is not None:
                total = _q(total, quant, quant.app_lo, quant.app_hi)
            app[n] = total
            bits[n] = 1 if total < 0 else 0
            for m in graph.var_adj[n]:
                t = total - beta[(m, n)]
                if quant is not None:
                    t = _q(t, quant, quant.msg_lo, quant.msg_hi)
                old = alpha[(m, n)]
                if variant == "scms" and old != 0 and t != 0 and (old < 0) != (t < 0):
                    t = 0.0
                alpha[(m, n)] = t + 0.0
        history.append(dict(alpha))
        if early_stop and all(sum(bits[n] for n in nbrs) % 2 == 0 for nbrs in graph.chk_adj):
            break
    return bits, app, it, history
