"""Sparse directed graphs, strongly connected components, condensation, periods.

Edges are stored in the same orientation as matrix rows: an edge (i, j) means a
random walk at i may step to j, and the transition matrix built from the graph
puts its mass on row i. A component is *closed* when no condensation edge
leaves it, i.e. it is the recurrent part of the walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError


class DirectedGraph:
    """Immutable sparse directed graph with optional non-negative edge weights.

    Duplicate (source, target) pairs are merged at construction: weights are
    summed when present, otherwise the duplicates collapse to a single edge.
    Undirected input is stored as symmetric directed edge pairs.
    """

    __slots__ = ("node_count", "sources", "targets", "weights", "directed",
                 "_indptr", "_meta")

    def __init__(self, node_count, edges=(), weights=None, directed=True, meta=None):
        node_count = int(node_count)
        if node_count < 0:
            raise StructuralError("node_count must be non-negative")
        self.node_count = node_count
        self.directed = bool(directed)
        self._meta = dict(meta) if meta else {}

        edges = list(edges)
        if weights is not None:
            weights = [float(w) for w in weights]
            if len(weights) != len(edges):
                raise StructuralError("weights length must match edges length")

        if not directed:
            # symmetrize; self-loops stay single
            extra, extra_w = [], []
            for idx, (s, t) in enumerate(edges):
                if s != t:
                    extra.append((t, s))
                    if weights is not None:
                        extra_w.append(weights[idx])
            edges = edges + extra
            if weights is not None:
                weights = weights + extra_w

        src = np.asarray([e[0] for e in edges], dtype=np.int64)
        dst = np.asarray([e[1] for e in edges], dtype=np.int64)
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= node_count or dst.max() >= node_count:
                raise StructuralError("edge endpoint out of range")
        w = None if weights is None else np.asarray(weights, dtype=np.float64)
        if w is not None and w.size and (not np.all(np.isfinite(w)) or w.min() < 0):
            raise StructuralError("weights must be finite and non-negative")

        # merge duplicates in row-major order
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if w is not None:
            w = w[order]
        if src.size:
            keep = np.ones(src.size, dtype=bool)
            keep[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            if w is not None:
                group = np.cumsum(keep) - 1
                merged = np.zeros(int(group[-1]) + 1)
                np.add.at(merged, group, w)
                w = merged
            src, dst = src[keep], dst[keep]
        self.sources = src
        self.targets = dst
        self.weights = w
        self._indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.add.at(self._indptr, src + 1, 1)
        np.cumsum(self._indptr, out=self._indptr)

    # -- accessors -----------------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self.sources.size)

    @property
    def meta(self) -> dict:
        return self._meta

    def successors(self, node: int) -> np.ndarray:
        lo, hi = self._indptr[node], self._indptr[node + 1]
        return self.targets[lo:hi]

    def out_degree(self, node: int) -> int:
        return int(self._indptr[node + 1] - self._indptr[node])

    def out_weights(self, node: int) -> np.ndarray | None:
        if self.weights is None:
            return None
        lo, hi = self._indptr[node], self._indptr[node + 1]
        return self.weights[lo:hi]

    def has_edge(self, s: int, t: int) -> bool:
        return bool(np.any(self.successors(s) == t))

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.sources.tolist(), self.targets.tolist()))

    def reverse(self) -> "DirectedGraph":
        return DirectedGraph(self.node_count,
                             list(zip(self.targets.tolist(), self.sources.tolist())),
                             None if self.weights is None else self.weights.tolist())

    def subgraph(self, nodes) -> "DirectedGraph":
        """Induced subgraph; node order follows the given sequence."""
        nodes = np.asarray(sorted(set(int(v) for v in nodes)), dtype=np.int64)
        remap = -np.ones(self.node_count, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        mask = (remap[self.sources] >= 0) & (remap[self.targets] >= 0)
        edges = list(zip(remap[self.sources[mask]].tolist(),
                         remap[self.targets[mask]].tolist()))
        w = None if self.weights is None else self.weights[mask].tolist()
        return DirectedGraph(nodes.size, edges, w, meta={"parent_nodes": nodes})

    def __repr__(self):
        return f"DirectedGraph(nodes={self.node_count}, edges={self.edge_count})"


@dataclass
class SccDecomposition:
    """Partition of a graph into strongly connected components.

    `closed[c]` is True when component c has no outgoing condensation edge
    (the walk cannot leave it). `periods[c]` is the gcd of all cycle lengths;
    a single loop-free node gets period 1 with `trivial_period[c]` set.
    """

    component_of: np.ndarray
    components: list[np.ndarray]
    condensation_edges: list[tuple[int, int]]
    closed: np.ndarray
    periods: list[int]
    trivial_period: list[bool]
    topo_order: list[int] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.components)

    def closed_components(self) -> list[int]:
        return [c for c in range(self.count) if self.closed[c]]

    def transient_nodes(self) -> np.ndarray:
        """Nodes in open components, in ascending index order."""
        open_mask = ~self.closed[self.component_of] if self.count else np.zeros(0, bool)
        return np.flatnonzero(open_mask)

    def recurrent_nodes(self) -> np.ndarray:
        if not self.count:
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(self.closed[self.component_of])


def scc_decompose(graph: DirectedGraph) -> SccDecomposition:
    """Tarjan's algorithm (iterative) plus condensation, closed flags, periods.

    Components come out in reverse topological order of the condensation, so
    `topo_order` is just the reversed discovery order.
    """
    n = graph.node_count
    indptr, targets = graph._indptr, graph.targets
    index = np.full(n, -1, dtype=np.int64)
    lowlink = np.zeros(n, dtype=np.int64)
    on_stack = np.zeros(n, dtype=bool)
    comp_of = np.full(n, -1, dtype=np.int64)
    stack: list[int] = []
    components: list[np.ndarray] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        # explicit DFS stack of (node, next-edge-cursor)
        work = [(root, indptr[root])]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, cursor = work[-1]
            if cursor < indptr[v + 1]:
                work[-1] = (v, cursor + 1)
                w = int(targets[cursor])
                if index[w] == -1:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, indptr[w]))
                elif on_stack[w]:
                    if index[w] < lowlink[v]:
                        lowlink[v] = index[w]
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    if lowlink[v] < lowlink[parent]:
                        lowlink[parent] = lowlink[v]
                if lowlink[v] == index[v]:
                    comp = []
                    while True:
                        u = stack.pop()
                        on_stack[u] = False
                        comp_of[u] = len(components)
                        comp.append(u)
                        if u == v:
                            break
                    components.append(np.asarray(sorted(comp), dtype=np.int64))

    # condensation edges (deduplicated) and closed flags
    k = len(components)
    closed = np.ones(k, dtype=bool)
    cond: set[tuple[int, int]] = set()
    for s, t in zip(graph.sources.tolist(), graph.targets.tolist()):
        cs, ct = int(comp_of[s]), int(comp_of[t])
        if cs != ct:
            cond.add((cs, ct))
            closed[cs] = False

    periods, trivial = [], []
    for comp in components:
        p, tflag = _component_period(graph, comp, comp_of)
        periods.append(p)
        trivial.append(tflag)

    # Tarjan emits components in reverse topological order
    topo = list(range(k - 1, -1, -1))
    return SccDecomposition(comp_of, components, sorted(cond), closed,
                            periods, trivial, topo)


def _component_period(graph: DirectedGraph, comp: np.ndarray, comp_of: np.ndarray):
    """(period, trivial_flag) via BFS levels restricted to the component."""
    cid = comp_of[comp[0]]
    if comp.size == 1:
        v = int(comp[0])
        if graph.has_edge(v, v):
            return 1, False
        return 1, True  # loop-free singleton: period 1 by convention
    level = {int(comp[0]): 0}
    queue = [int(comp[0])]
    g = 0
    while queue:
        nxt = []
        for u in queue:
            for w in graph.successors(u):
                w = int(w)
                if comp_of[w] != cid:
                    continue
                if w not in level:
                    level[w] = level[u] + 1
                    nxt.append(w)
        queue = nxt
    for u in comp.tolist():
        lu = level[u]
        for w in graph.successors(u):
            w = int(w)
            if comp_of[w] == cid:
                g = math.gcd(g, lu + 1 - level[w])
    return (abs(g) if g else 1), False


def scc_period(graph: DirectedGraph, component) -> int:
    """Gcd of all cycle lengths inside a strongly connected node set.

    Raises StructuralError when the set is not strongly connected within the
    graph. A singleton without a self-loop returns 1 (convention).
    """
    comp = np.asarray(sorted(set(int(v) for v in component)), dtype=np.int64)
    if comp.size == 0:
        raise StructuralError("empty component")
    sub = graph.subgraph(comp)
    if not _is_strongly_connected(sub):
        raise StructuralError("component is not strongly connected")
    comp_of = np.zeros(sub.node_count, dtype=np.int64)
    p, _ = _component_period(sub, np.arange(sub.node_count), comp_of)
    return p


def _is_strongly_connected(graph: DirectedGraph) -> bool:
    n = graph.node_count
    if n <= 1:
        return True
    for g in (graph, graph.reverse()):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = [0]
        while queue:
            u = queue.pop()
            for w in g.successors(u):
                if not seen[w]:
                    seen[w] = True
                    queue.append(int(w))
        if not seen.all():
            return False
    return True


def condensation(decomp: SccDecomposition) -> DirectedGraph:
    """One node per component; deduplicated inter-component edges; acyclic."""
    return DirectedGraph(decomp.count, decomp.condensation_edges)
