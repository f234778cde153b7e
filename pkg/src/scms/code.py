"""LDPC code model: Tanner graphs, degree distributions and code construction.

Two plain-text exchange formats are supported.

alist
    ``N M`` / ``max_var_deg max_chk_deg`` / the N variable degrees / the M
    check degrees / N lines of 1-indexed check neighbours / M lines of
    1-indexed variable neighbours. Neighbour lines may be padded with zeros.

QC shift grid
    ``rows cols z`` followed by ``rows`` lines of ``cols`` integers. ``-1``
    marks an all-zero block, ``s >= 0`` a ``z x z`` identity cyclically
    shifted by ``s``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class CodeFormatError(ValueError):
    """Raised for malformed alist / QC text. Carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite graph of ``N`` variable nodes and ``M`` check nodes.

    ``var_adj[n]`` lists the checks adjacent to variable ``n`` and
    ``chk_adj[m]`` the variables adjacent to check ``m``, both in a fixed
    order. Instances are immutable and validated on construction.
    """

    N: int
    M: int
    var_adj: tuple[tuple[int, ...], ...]
    chk_adj: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.var_adj) != self.N or len(self.chk_adj) != self.M:
            raise ValueError("adjacency lists do not match N, M")
        for n, checks in enumerate(self.var_adj):
            if not checks:
                raise ValueError(f"variable node {n} has degree 0")
            if len(set(checks)) != len(checks):
                raise ValueError(f"parallel edge at variable node {n}")
            for m in checks:
                if not 0 <= m < self.M:
                    raise ValueError(f"variable node {n}: check index {m} out of range")
        from_checks = set()
        for m, variables in enumerate(self.chk_adj):
            if not variables:
                raise ValueError(f"check node {m} has degree 0")
            if len(set(variables)) != len(variables):
                raise ValueError(f"parallel edge at check node {m}")
            for n in variables:
                if not 0 <= n < self.N:
                    raise ValueError(f"check node {m}: variable index {n} out of range")
                from_checks.add((n, m))
        from_vars = {(n, m) for n, checks in enumerate(self.var_adj) for m in checks}
        if from_vars != from_checks:
            raise ValueError("var_adj and chk_adj describe different edge sets")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_edges(cls, N: int, M: int, edges: Iterable[tuple[int, int]]) -> "TannerGraph":
        """Build from ``(variable, check)`` pairs; neighbour lists come out sorted."""
        var_adj: list[list[int]] = [[] for _ in range(N)]
        chk_adj: list[list[int]] = [[] for _ in range(M)]
        for n, m in edges:
            var_adj[int(n)].append(int(m))
            chk_adj[int(m)].append(int(n))
        return cls(
            N, M,
            tuple(tuple(sorted(a)) for a in var_adj),
            tuple(tuple(sorted(a)) for a in chk_adj),
        )

    @classmethod
    def from_matrix(cls, H) -> "TannerGraph":
        """Build from a dense or sparse ``M x N`` 0/1 parity-check matrix."""
        H = sp.coo_matrix(H)
        M, N = H.shape
        mask = H.data % 2 == 1
        return cls.from_edges(N, M, zip(H.col[mask], H.row[mask]))

    # -- derived data ------------------------------------------------------

    @cached_property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.chk_adj)

    @cached_property
    def var_degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.var_adj], dtype=np.int64)

    @cached_property
    def chk_degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.chk_adj], dtype=np.int64)

    @cached_property
    def edges(self) -> "EdgeIndex":
        return EdgeIndex.build(self)

    def pcm(self) -> sp.csr_matrix:
        """Parity-check matrix as a sparse ``M x N`` uint8 matrix."""
        e = self.edges
        data = np.ones(len(e.edge_var), dtype=np.uint8)
        return sp.csr_matrix((data, (e.edge_chk, e.edge_var)), shape=(self.M, self.N))

    @property
    def design_rate(self) -> float:
        return 1.0 - self.M / self.N

    def __repr__(self) -> str:
        return f"TannerGraph(N={self.N}, M={self.M}, edges={self.edge_count})"


@dataclass(frozen=True)
class EdgeIndex:
    """Flat edge arrays used by the decoding kernels.

    Edges are numbered check-major: edges of check ``m`` occupy
    ``chk_ptr[m]:chk_ptr[m+1]`` in ``chk_adj[m]`` order. ``var_edges``
    groups the same edge ids by variable node in ``var_adj`` order.
    """

    chk_ptr: np.ndarray
    edge_var: np.ndarray
    edge_chk: np.ndarray
    var_ptr: np.ndarray
    var_edges: np.ndarray

    @classmethod
    def build(cls, g: TannerGraph) -> "EdgeIndex":
        chk_ptr = np.zeros(g.M + 1, dtype=np.int64)
        chk_ptr[1:] = np.cumsum([len(a) for a in g.chk_adj])
        edge_var = np.fromiter((n for a in g.chk_adj for n in a), dtype=np.int64, count=int(chk_ptr[-1]))
        edge_chk = np.repeat(np.arange(g.M, dtype=np.int64), np.diff(chk_ptr))
        lookup = {(int(n), int(m)): e for e, (n, m) in enumerate(zip(edge_var, edge_chk))}
        var_ptr = np.zeros(g.N + 1, dtype=np.int64)
        var_ptr[1:] = np.cumsum([len(a) for a in g.var_adj])
        var_edges = np.fromiter(
            (lookup[(n, m)] for n, a in enumerate(g.var_adj) for m in a),
            dtype=np.int64, count=int(var_ptr[-1]),
        )
        for arr in (chk_ptr, edge_var, edge_chk, var_ptr, var_edges):
            arr.setflags(write=False)
        return cls(chk_ptr, edge_var, edge_chk, var_ptr, var_edges)

    def edge_id(self, n: int, m: int) -> int:
        lo, hi = self.chk_ptr[m], self.chk_ptr[m + 1]
        hits = np.nonzero(self.edge_var[lo:hi] == n)[0]
        if len(hits) == 0:
            raise KeyError((n, m))
        return int(lo + hits[0])


# -- degree distributions ---------------------------------------------------


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distribution pair.

    ``lam[i]`` is the fraction of edges attached to degree-``i`` variable
    nodes and ``rho[j]`` the fraction attached to degree-``j`` check nodes.
    """

    lam: Mapping[int, float]
    rho: Mapping[int, float]
    tol: float = field(default=1e-9, repr=False, compare=False)

    def __post_init__(self):
        for name, coeffs in (("lambda", self.lam), ("rho", self.rho)):
            if not coeffs:
                raise ValueError(f"{name} is empty")
            for d, c in coeffs.items():
                if int(d) != d or d < 1:
                    raise ValueError(f"{name}: invalid degree {d}")
                if not 0.0 <= c <= 1.0:
                    raise ValueError(f"{name}: coefficient {c} outside [0, 1]")
            if abs(sum(coeffs.values()) - 1.0) > self.tol:
                raise ValueError(f"{name} coefficients sum to {sum(coeffs.values())}, not 1")
        object.__setattr__(self, "lam", {int(d): float(c) for d, c in sorted(self.lam.items()) if c > 0})
        object.__setattr__(self, "rho", {int(d): float(c) for d, c in sorted(self.rho.items()) if c > 0})

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        return cls({dv: 1.0}, {dc: 1.0})

    @classmethod
    def parse(cls, text: str) -> "DegreeDistribution":
        """Parse ``"dv,dc"`` (regular) or ``"2:0.3,3:0.7;6:1"`` (lambda;rho)."""
        text = text.strip()
        if ";" not in text:
            try:
                dv, dc = (int(t) for t in text.split(","))
            except ValueError:
                raise ValueError(f"cannot parse ensemble {text!r}") from None
            return cls.regular(dv, dc)

        def coeffs(part: str) -> dict[int, float]:
            out = {}
            for item in part.split(","):
                d, c = item.split(":")
                out[int(d)] = float(c)
            return out

        lam_part, rho_part = text.split(";")
        return cls(coeffs(lam_part), coeffs(rho_part))

    @property
    def dv(self) -> int:
        return max(self.lam)

    @property
    def dc(self) -> int:
        return max(self.rho)

    def lam_poly(self, x):
        return sum(c * np.power(x, d - 1) for d, c in self.lam.items())

    def rho_poly(self, x):
        return sum(c * np.power(x, d - 1) for d, c in self.rho.items())

    @property
    def design_rate(self) -> float:
        return 1.0 - sum(c / d for d, c in self.rho.items()) / sum(c / d for d, c in self.lam.items())

    def node_fractions(self, side: str = "var") -> dict[int, float]:
        coeffs = self.lam if side == "var" else self.rho
        w = {d: c / d for d, c in coeffs.items()}
        total = sum(w.values())
        return {d: v / total for d, v in w.items()}

    def spec(self) -> str:
        """Inverse of :meth:`parse` (general form)."""
        fmt = lambda cs: ",".join(f"{d}:{c!r}" for d, c in cs.items())  # noqa: E731
        return f"{fmt(self.lam)};{fmt(self.rho)}"

    def isclose(self, other: "DegreeDistribution", tol: float = 1e-12) -> bool:
        def same(a, b):
            return set(a) == set(b) and all(abs(a[k] - b[k]) <= tol for k in a)

        return same(self.lam, other.lam) and same(self.rho, other.rho)


def degree_distributions(graph: TannerGraph) -> DegreeDistribution:
    """Measure the edge-perspective degree distributions of ``graph``."""
    E = graph.edge_count

    def fractions(degrees: np.ndarray) -> dict[int, float]:
        ds, counts = np.unique(degrees, return_counts=True)
        raw = {int(d): int(d) * int(c) / E for d, c in zip(ds, counts)}
        s = sum(raw.values())
        return {d: v / s for d, v in raw.items()}

    return DegreeDistribution(fractions(graph.var_degrees), fractions(graph.chk_degrees), tol=1e-12)


# -- syndrome ---------------------------------------------------------------


def syndrome(graph: TannerGraph, bits) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape != (graph.N,):
        raise ValueError(f"expected {graph.N} bits, got shape {bits.shape}")
    return np.asarray(graph.pcm() @ (bits.astype(np.int64) & 1)) % 2


def syndrome_ok(graph: TannerGraph, bits) -> bool:
    """True iff every parity check is satisfied by ``bits``."""
    return not syndrome(graph, bits).any()


# -- alist ------------------------------------------------------------------


def _ints(tokens: Sequence[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise CodeFormatError("non-integer token", lineno) from None


def load_alist(text: str) -> TannerGraph:
    """Parse an alist description into a :class:`TannerGraph`."""
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise CodeFormatError("empty alist input")
    it = iter(lines)

    def take(what: str) -> tuple[int, list[int]]:
        try:
            lineno, toks = next(it)
        except StopIteration:
            raise CodeFormatError(f"unexpected end of input, expected {what}") from None
        return lineno, _ints(toks, lineno)

    lineno, head = take("header 'N M'")
    if len(head) != 2 or min(head) < 1:
        raise CodeFormatError("header must be two positive integers 'N M'", lineno)
    N, M = head
    lineno, maxdeg = take("max degrees")
    if len(maxdeg) != 2:
        raise CodeFormatError("expected 'max_var_deg max_chk_deg'", lineno)
    lineno, vdeg = take("variable degree list")
    if len(vdeg) != N:
        raise CodeFormatError(f"expected {N} variable degrees, got {len(vdeg)}", lineno)
    lineno, cdeg = take("check degree list")
    if len(cdeg) != M:
        raise CodeFormatError(f"expected {M} check degrees, got {len(cdeg)}", lineno)
    if max(vdeg) > maxdeg[0] or max(cdeg) > maxdeg[1]:
        raise CodeFormatError("degree exceeds declared maximum", lineno)

    def neighbour_block(count: int, degrees: list[int], bound: int, kind: str) -> list[tuple[int, ...]]:
        out = []
        for k in range(count):
            lineno, idx = take(f"{kind} neighbour list {k + 1}")
            nz = [i for i in idx if i != 0]
            if len(nz) != degrees[k]:
                raise CodeFormatError(f"{kind} node {k + 1}: declared degree {degrees[k]}, found {len(nz)} neighbours", lineno)
            for i in nz:
                if not 1 <= i <= bound:
                    raise CodeFormatError(f"{kind} node {k + 1}: index {i} out of range 1..{bound}", lineno)
            if len(set(nz)) != len(nz):
                raise CodeFormatError(f"{kind} node {k + 1}: parallel edge", lineno)
            out.append(tuple(i - 1 for i in nz))
        return out

    var_adj = neighbour_block(N, vdeg, M, "variable")
    chk_adj = neighbour_block(M, cdeg, N, "check")
    rest = list(it)
    if rest:
        raise CodeFormatError("trailing content after check neighbour lists", rest[0][0])
    try:
        return TannerGraph(N, M, tuple(var_adj), tuple(chk_adj))
    except ValueError as exc:
        raise CodeFormatError(str(exc)) from None


def to_alist(graph: TannerGraph) -> str:
    """Serialize to alist, zero-padding neighbour lines to the maximum degree."""
    vd, cd = graph.var_degrees, graph.chk_degrees
    dv, dc = int(vd.max()), int(cd.max())

    def row(adj: Sequence[int], width: int) -> str:
        vals = [a + 1 for a in adj] + [0] * (width - len(adj))
        return " ".join(map(str, vals))

    lines = [
        f"{graph.N} {graph.M}",
        f"{dv} {dc}",
        " ".join(map(str, vd)),
        " ".join(map(str, cd)),
    ]
    lines += [row(a, dv) for a in graph.var_adj]
    lines += [row(a, dc) for a in graph.chk_adj]
    return "\n".join(lines) + "\n"


# -- quasi-cyclic -----------------------------------------------------------


@dataclass(frozen=True)
class QcBaseMatrix:
    """Base matrix of circulant shifts; ``-1`` is the all-zero block."""

    shifts: tuple[tuple[int, ...], ...]
    z: int

    def __post_init__(self):
        if self.z < 1:
            raise ValueError("expansion factor z must be >= 1")
        widths = {len(r) for r in self.shifts}
        if len(widths) != 1:
            raise ValueError("ragged base matrix")
        for r, row in enumerate(self.shifts):
            for c, s in enumerate(row):
                if s < -1 or s >= self.z:
                    raise ValueError(f"cell ({r},{c}): shift {s} outside [-1, {self.z - 1}]")

    @property
    def rows(self) -> int:
        return len(self.shifts)

    @property
    def cols(self) -> int:
        return len(self.shifts[0])


def load_qc(text: str) -> QcBaseMatrix:
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise CodeFormatError("empty QC input")
    lineno, head = lines[0]
    head = _ints(head, lineno)
    if len(head) != 3:
        raise CodeFormatError("header must be 'rows cols z'", lineno)
    rows, cols, z = head
    if len(lines) - 1 != rows:
        raise CodeFormatError(f"expected {rows} shift rows, got {len(lines) - 1}", lines[-1][0])
    grid = []
    for lineno, toks in lines[1:]:
        vals = _ints(toks, lineno)
        if len(vals) != cols:
            raise CodeFormatError(f"expected {cols} shifts, got {len(vals)}", lineno)
        for s in vals:
            if s < -1 or s >= z:
                raise CodeFormatError(f"shift {s} outside [-1, {z - 1}]", lineno)
        grid.append(tuple(vals))
    return QcBaseMatrix(tuple(grid), z)


def expand_qc(base: QcBaseMatrix) -> TannerGraph:
    """Lift a base matrix: cell (r, c) with shift s links variable
    ``c*z + (k+s) % z`` to check ``r*z + k`` for ``k = 0..z-1``."""
    z = base.z
    k = np.arange(z)
    edges = []
    for r, row in enumerate(base.shifts):
        for c, s in enumerate(row):
            if s < 0:
                continue
            if s >= z:
                raise ValueError(f"shift {s} >= z={z}")
            edges.extend(zip(c * z + (k + s) % z, r * z + k))
    return TannerGraph.from_edges(base.cols * z, base.rows * z, edges)


# -- random irregular ensembles ----------------------------------------------


def _largest_remainder(weights: Mapping[int, float], total: int) -> dict[int, int]:
    keys = list(weights)
    raw = np.array([weights[k] for k in keys], dtype=float) * total
    base = np.floor(raw).astype(int)
    short = total - int(base.sum())
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:short]] += 1
    return dict(zip(keys, base.tolist()))


def degree_sequences(dist: DegreeDistribution, N: int) -> tuple[list[int], list[int]]:
    """Node degree sequences realising ``dist`` on ``N`` variables.

    Node counts are obtained by largest-remainder rounding. If the check
    side cannot absorb the variable-side edge count exactly, single check
    nodes are moved to an adjacent degree within the support of rho.
    """
    var_counts = _largest_remainder(dist.node_fractions("var"), N)
    E = sum(d * c for d, c in var_counts.items())
    chk_frac = dist.node_fractions("chk")
    M = round(E * sum(c / d for d, c in dist.rho.items()))
    chk_counts = _largest_remainder(chk_frac, M)
    deficit = E - sum(d * c for d, c in chk_counts.items())
    support = sorted(chk_counts)
    while deficit != 0:
        step = 1 if deficit > 0 else -1
        moves = [d for d in support if chk_counts[d] > 0 and (d + step) in chk_counts]
        if not moves:
            raise ConstructionError(
                f"degree sequence infeasible: {E} variable sockets vs "
                f"{E - deficit} check sockets for N={N}"
            )
        d = moves[0] if step > 0 else moves[-1]
        chk_counts[d] -= 1
        chk_counts[d + step] += 1
        deficit -= step
    vdeg = [d for d, c in var_counts.items() for _ in range(c)]
    cdeg = [d for d, c in chk_counts.items() for _ in range(c)]
    if min(cdeg, default=0) < 2:
        raise ConstructionError("rounding produced check nodes of degree < 2")
    return vdeg, cdeg


def _four_cycle_edges(var_of: np.ndarray, chk_of: np.ndarray, N: int, M: int) -> np.ndarray:
    """Indices of edges lying on some length-4 cycle."""
    H = sp.csr_matrix((np.ones(len(var_of), dtype=np.int32), (chk_of, var_of)), shape=(M, N))
    C = (H @ H.T).tocoo()
    bad = (C.data >= 2) & (C.row < C.col)
    if not bad.any():
        return np.empty(0, dtype=np.int64)
    pairs = set()
    Hl = H.tolil()
    rows = Hl.rows
    for a, b in zip(C.row[bad], C.col[bad]):
        shared = set(rows[a]) & set(rows[b])
        for n in shared:
            pairs.add((n, a))
            pairs.add((n, b))
    key = var_of.astype(np.int64) * M + chk_of
    wanted = np.array([n * M + m for n, m in pairs], dtype=np.int64)
    return np.nonzero(np.isin(key, wanted))[0]


def sample_irregular(dist: DegreeDistribution, N: int, seed: int, *, cycle_swaps: int = 2000) -> TannerGraph:
    """Random Tanner graph from the configuration model.

    Parallel edges are removed by random socket swaps (mandatory). Length-4
    cycles are then attacked with at most ``cycle_swaps`` swaps; any that
    survive are logged and kept.
    """
    if min(dist.lam) < 2:
        raise ConstructionError("variable degrees must be >= 2")
    vdeg, cdeg = degree_sequences(dist, N)
    M = len(cdeg)
    rng = np.random.default_rng(seed)
    var_of = np.repeat(np.arange(N), vdeg)
    chk_sockets = np.repeat(np.arange(M), cdeg)
    chk_of = rng.permutation(chk_sockets)
    E = len(var_of)

    def parallel_edges() -> np.ndarray:
        key = var_of * M + chk_of
        _, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
        dup = counts[inv] > 1
        # keep the first occurrence of each duplicated pair
        first = np.zeros(E, dtype=bool)
        _, idx = np.unique(key, return_index=True)
        first[idx] = True
        return np.nonzero(dup & ~first)[0]

    def try_swap(e: int) -> bool:
        f = int(rng.integers(E))
        a, b = chk_of[e], chk_of[f]
        if a == b:
            return False
        ne, nf = var_of[e], var_of[f]
        # reject swaps that would create a parallel edge
        if b in var_checks[ne] or a in var_checks[nf]:
            return False
        var_checks[ne].discard(a); var_checks[ne].add(b)
        var_checks[nf].discard(b); var_checks[nf].add(a)
        chk_of[e], chk_of[f] = b, a
        return True

    for _ in range(100):
        bad = parallel_edges()
        if len(bad) == 0:
            break
        var_checks = [set() for _ in range(N)]
        for n, m in zip(var_of, chk_of):
            var_checks[n].add(m)
        for e in bad:
            for _ in range(1000):
                f = int(rng.integers(E))
                a, b = chk_of[e], chk_of[f]
                ne, nf = var_of[e], var_of[f]
                if a == b or b in var_checks[ne] or a in var_checks[nf]:
                    continue
                # e is a duplicate: var_checks[ne] keeps a through the first copy
                var_checks[ne].add(b)
                var_checks[nf].discard(b); var_checks[nf].add(a)
                chk_of[e], chk_of[f] = b, a
                break
    else:
        raise ConstructionError("could not remove parallel edges")
    if len(parallel_edges()):
        raise ConstructionError("could not remove parallel edges")

    var_checks = [set() for _ in range(N)]
    for n, m in zip(var_of, chk_of):
        var_checks[n].add(m)
    used = 0
    bad = _four_cycle_edges(var_of, chk_of, N, M)
    while len(bad) and used < cycle_swaps:
        for e in rng.permutation(bad):
            if used >= cycle_swaps:
                break
            used += 1
            try_swap(int(e))
        bad = _four_cycle_edges(var_of, chk_of, N, M)
    if len(bad):
        log.info("sample_irregular: %d edges still on 4-cycles after %d swaps", len(bad), used)
    else:
        log.debug("sample_irregular: 4-cycle free after %d swaps", used)
    return TannerGraph.from_edges(N, M, zip(var_of.tolist(), chk_of.tolist()))
