"""Computation trees of message-passing decoders.

A computation tree unrolls the message recursion at a variable node over
``depth`` iterations. Tree node 0 is the root variable node; variable and
check levels alternate and every leaf is a variable node. Because a tree
has no cycles, running a decoder on it for ``depth`` iterations leaves the
root's a-posteriori value equal to what the same decoder computes at the
root of the original graph (up to float summation order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .code import TannerGraph
from .decoders import MS, SCMS, TRACE_FULL, DecoderConfig, DecodeResult, decode

VAR, CHK = 0, 1


@dataclass(frozen=True)
class ComputationTree:
    """Rooted bipartite tree stored as flat arrays (node 0 is the root).

    ``kind[k]`` is VAR or CHK, ``parent[k]`` the parent node (-1 for the
    root), ``origin[k]`` the graph node this copy stands for, ``level[k]``
    the variable depth (a check takes the depth of its parent variable) and
    ``llr[k]`` the channel LLR of a variable copy (0 for checks).
    """

    kind: np.ndarray
    parent: np.ndarray
    origin: np.ndarray
    level: np.ndarray
    llr: np.ndarray

    def __post_init__(self):
        if len(self.kind) == 0 or self.kind[0] != VAR or self.parent[0] != -1:
            raise ValueError("root must be a variable node")
        leaves = set(range(len(self.kind))) - set(self.parent[1:].tolist())
        if any(self.kind[k] != VAR for k in leaves):
            raise ValueError("every leaf must be a variable node")

    @property
    def size(self) -> int:
        return len(self.kind)

    @property
    def depth(self) -> int:
        return int(self.level.max())

    def children(self, k: int) -> np.ndarray:
        return np.nonzero(self.parent == k)[0]

    def with_llr(self, gamma) -> "ComputationTree":
        """Assign LLRs to variable copies from a per-origin vector ``gamma``."""
        gamma = np.asarray(gamma, dtype=float)
        llr = np.where(self.kind == VAR, gamma[np.where(self.kind == VAR, self.origin, 0)], 0.0)
        return ComputationTree(self.kind, self.parent, self.origin, self.level, llr)

    def subtree(self, keep: np.ndarray) -> "ComputationTree":
        """Restrict to nodes with ``keep`` set; kept nodes must be closed under parent."""
        keep = np.asarray(keep, dtype=bool)
        idx = np.nonzero(keep)[0]
        if not keep[0] or any(not keep[self.parent[k]] for k in idx if k):
            raise ValueError("kept nodes do not form a rooted subtree")
        new_id = -np.ones(self.size, dtype=np.int64)
        new_id[idx] = np.arange(len(idx))
        parent = np.where(self.parent[idx] >= 0, new_id[self.parent[idx]], -1)
        return ComputationTree(self.kind[idx], parent, self.origin[idx], self.level[idx], self.llr[idx])

    def variable_ids(self) -> np.ndarray:
        return np.nonzero(self.kind == VAR)[0]

    def to_graph(self) -> tuple[TannerGraph, np.ndarray, np.ndarray]:
        """Tanner graph of the tree plus maps tree-node -> graph variable /
        check index (-1 where not applicable). Root becomes variable 0.

        Each variable lists its parent check first, then its children in
        tree order.
        """
        var_id = -np.ones(self.size, dtype=np.int64)
        chk_id = -np.ones(self.size, dtype=np.int64)
        vs = self.kind == VAR
        var_id[vs] = np.arange(vs.sum())
        chk_id[~vs] = np.arange((~vs).sum())
        N, M = int(vs.sum()), int((~vs).sum())
        var_adj: list[list[int]] = [[] for _ in range(N)]
        chk_adj: list[list[int]] = [[] for _ in range(M)]
        for k in range(1, self.size):
            p = self.parent[k]
            if self.kind[k] == CHK:
                var_adj[var_id[p]].append(int(chk_id[k]))
                chk_adj[chk_id[k]].append(int(var_id[p]))
        for k in range(1, self.size):
            p = self.parent[k]
            if self.kind[k] == VAR:
                var_adj[var_id[k]].insert(0, int(chk_id[p]))
                chk_adj[chk_id[p]].append(int(var_id[k]))
        g = TannerGraph(N, M, tuple(map(tuple, var_adj)), tuple(map(tuple, chk_adj)))
        return g, var_id, chk_id


class _Builder:
    def __init__(self):
        self.kind, self.parent, self.origin, self.level = [], [], [], []

    def add(self, kind: int, parent: int, origin: int, level: int) -> int:
        self.kind.append(kind)
        self.parent.append(parent)
        self.origin.append(origin)
        self.level.append(level)
        return len(self.kind) - 1

    def build(self, llr=None) -> ComputationTree:
        n = len(self.kind)
        return ComputationTree(
            np.array(self.kind, dtype=np.int8),
            np.array(self.parent, dtype=np.int64),
            np.array(self.origin, dtype=np.int64),
            np.array(self.level, dtype=np.int64),
            np.zeros(n) if llr is None else np.asarray(llr, dtype=float),
        )


def unroll_tree(graph: TannerGraph, root: int, exclude: int | None = None, depth: int = 1) -> ComputationTree:
    """Computation tree of variable ``root`` after ``depth`` iterations.

    With ``exclude = m`` the check ``m`` is left out below the root, giving
    the tree of the message from ``root`` to ``m``; otherwise the tree of
    the a-posteriori value. Graph nodes may be copied many times.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if exclude is not None and exclude not in graph.var_adj[root]:
        raise ValueError(f"check {exclude} is not adjacent to variable {root}")
    b = _Builder()
    b.add(VAR, -1, root, 0)
    frontier = [(0, root, exclude)]
    for level in range(depth):
        nxt = []
        for k, n, parent_chk in frontier:
            for m in graph.var_adj[n]:
                if m == parent_chk:
                    continue
                c = b.add(CHK, k, m, level)
                for n2 in graph.chk_adj[m]:
                    if n2 == n:
                        continue
                    v = b.add(VAR, c, n2, level + 1)
                    nxt.append((v, n2, m))
        frontier = nxt
    return b.build()


def random_tree(
    rng: np.random.Generator,
    depth: int,
    max_nodes: int = 60,
    check_children: tuple[int, int] = (1, 3),
    var_children: tuple[int, int] = (1, 3),
    llr_mean: float = 2.0,
) -> ComputationTree:
    """Random tree of variable depth at most ``depth`` and at most
    ``max_nodes`` nodes, leaf-and-node LLRs drawn from N(m, 2m).

    Expansion is breadth first; once the node budget would be exceeded the
    remaining variables become leaves.
    """
    b = _Builder()
    b.add(VAR, -1, 0, 0)
    frontier = [0]
    for level in range(depth):
        nxt = []
        for k in frontier:
            for _ in range(int(rng.integers(check_children[0], check_children[1] + 1))):
                nv = int(rng.integers(var_children[0], var_children[1] + 1))
                if len(b.kind) + 1 + nv > max_nodes:
                    break
                c = b.add(CHK, k, len(b.kind), level)
                for _ in range(nv):
                    nxt.append(b.add(VAR, c, len(b.kind), level + 1))
        frontier = nxt
    n = len(b.kind)
    llr = llr_mean + np.sqrt(2.0 * llr_mean) * rng.standard_normal(n)
    kinds = np.array(b.kind)
    return b.build(np.where(kinds == VAR, llr, 0.0))


def _tree_config(variant: str, depth: int) -> DecoderConfig:
    return DecoderConfig(variant, max_iter=depth, early_stop=False, trace=TRACE_FULL)


def tree_run(tree: ComputationTree, variant: str) -> DecodeResult | None:
    """Run ``variant`` on the tree for ``tree.depth`` iterations (None at depth 0)."""
    if tree.depth == 0:
        return None
    g, var_id, _ = tree.to_graph()
    llr = tree.llr[tree.kind == VAR]
    return decode(g, llr, _tree_config(variant, tree.depth))


def tree_decode(tree: ComputationTree, variant: str = MS) -> float:
    """A-posteriori value of the root after ``tree.depth`` iterations."""
    res = tree_run(tree, variant)
    if res is None:
        return float(tree.llr[0])
    return float(res.app[0])


def prune_erased(tree: ComputationTree, result: DecodeResult | None = None) -> ComputationTree:
    """Drop every check whose input from one of its children was erased when
    it was last used on the way to the root.

    The check below a variable at depth ``k`` feeds the root at iteration
    ``L`` through its output of iteration ``L - k``, which is computed from
    its children's messages of iteration ``L - k - 1``. ``result`` must be a
    full-trace self-corrected run of this tree (computed if omitted).
    """
    if tree.depth == 0:
        return tree
    if result is None:
        result = tree_run(tree, SCMS)
    g, var_id, chk_id = tree.to_graph()
    ix = g.edges
    L = tree.depth
    alpha = result.trace.alpha
    keep = np.ones(tree.size, dtype=bool)
    for k in range(tree.size):
        if tree.kind[k] != CHK:
            continue
        it = L - int(tree.level[k]) - 1
        m = int(chk_id[k])
        lo, hi = ix.chk_ptr[m], ix.chk_ptr[m + 1]
        kids = {int(var_id[c]) for c in tree.children(k)}
        for e in range(lo, hi):
            if int(ix.edge_var[e]) in kids and alpha[it, e] == 0.0:
                keep[k] = False
                break
    # propagate removal to descendants (parents precede children)
    for k in range(1, tree.size):
        if not keep[tree.parent[k]]:
            keep[k] = False
    return tree.subtree(keep)


def pruning_check(tree: ComputationTree) -> tuple[float, float]:
    """``(SCMS on tree, MS on pruned tree)`` root values."""
    res = tree_run(tree, SCMS)
    scms_value = float(tree.llr[0]) if res is None else float(res.app[0])
    pruned = prune_erased(tree, res)
    return scms_value, tree_decode(pruned, MS)


def dyadic(x, bits: int = 20) -> np.ndarray:
    """Round to multiples of ``2**-bits`` so tree sums are exact in float64."""
    s = float(2**bits)
    return np.round(np.asarray(x, dtype=float) * s) / s


def pruning_trials(trials: int, depth: int = 4, seed: int = 0, max_nodes: int = 60, llr_mean: float = 2.0) -> tuple[int, int]:
    """Count random trees on which SCMS equals MS on the pruned tree bit for bit.

    Tree ``t`` has depth drawn uniformly from ``1..depth`` and dyadic leaf
    LLRs from the generator keyed by ``(seed, t)``. Returns
    ``(matches, trees_with_pruning)``.
    """
    matches = pruned = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        tree = random_tree(rng, int(rng.integers(1, depth + 1)), max_nodes, llr_mean=llr_mean)
        tree = ComputationTree(tree.kind, tree.parent, tree.origin, tree.level, dyadic(tree.llr))
        res = tree_run(tree, SCMS)
        scms_value = float(tree.llr[0]) if res is None else float(res.app[0])
        cut = prune_erased(tree, res)
        matches += scms_value == tree_decode(cut, MS)
        pruned += cut.size < tree.size
    return matches, pruned
