"""Cumulative pairwise interaction totals, the strong interaction digraph,
and its island partition (strongly connected components).

An ordered pair (i, j) is highly interactive when its cumulative rate series
sum_n a_ij(n) diverges; at a finite horizon we substitute the same trend
policy used for flow series.  Agents are partitioned into islands: the
equivalence classes of mutual reachability in the digraph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import Chain
from .errors import InvalidParameter
from .properties import DIVERGENT, TrendPolicy, _iter_chunks


@dataclass(frozen=True)
class InteractionTotals:
    """Cumulative sums of a_ij(n): series[m] = sum_{n < m} A_n, m = 0..horizon."""

    series: np.ndarray
    horizon: int

    @property
    def totals(self) -> np.ndarray:
        return self.series[-1]

    def pair_series(self, i: int, j: int) -> np.ndarray:
        return self.series[1:, i, j]


@dataclass(frozen=True)
class StrongInteractionDigraph:
    size: int
    edges: frozenset
    pair_verdicts: dict | None = None

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def successors(self, i: int):
        return sorted(j for (a, j) in self.edges if a == i)

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class IslandPartition:
    """Disjoint agent classes covering 0..s-1, each sorted, ordered by min member."""

    classes: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.classes)

    def as_lists(self) -> list[list[int]]:
        return [list(c) for c in self.classes]


def accumulate_interactions(chain: Chain, horizon: int) -> InteractionTotals:
    """Exact partial sums of interaction rates per ordered pair."""
    if horizon < 1:
        raise InvalidParameter("horizon must be >= 1")
    s = chain.size
    series = np.empty((horizon + 1, s, s))
    series[0] = 0.0
    pos = 1
    for block in _iter_chunks(chain, horizon):
        np.cumsum(block, axis=0, out=block)
        series[pos:pos + block.shape[0]] = block + series[pos - 1]
        pos += block.shape[0]
    series.setflags(write=False)
    return InteractionTotals(series, horizon)


def build_digraph(totals: InteractionTotals,
                  policy: TrendPolicy = TrendPolicy()) -> StrongInteractionDigraph:
    """Edge (i, j) present iff the pair's cumulative series is divergent-trend."""
    s = totals.totals.shape[0]
    edges = set()
    verdicts = {}
    for i in range(s):
        for j in range(s):
            verdict = policy.classify(totals.pair_series(i, j))
            verdicts[(i, j)] = verdict
            if verdict == DIVERGENT:
                edges.add((i, j))
    return StrongInteractionDigraph(s, frozenset(edges), verdicts)


def islands(g: StrongInteractionDigraph) -> IslandPartition:
    """Strongly connected components of g (Tarjan, iterative).

    Self-loops are recorded in the digraph but cannot change the components.
    """
    adjacency = [[] for _ in range(g.size)]
    for (i, j) in g.edges:
        if i != j:
            adjacency[i].append(j)
    for nbrs in adjacency:
        nbrs.sort()

    index = [-1] * g.size
    lowlink = [0] * g.size
    on_stack = [False] * g.size
    stack: list[int] = []
    counter = 0
    components: list[tuple[int, ...]] = []

    for root in range(g.size):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(adjacency[v]):
                w = adjacency[v][pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(tuple(sorted(comp)))

    components.sort(key=lambda c: c[0])
    return IslandPartition(tuple(components))


def interaction_islands(chain: Chain, horizon: int,
                        policy: TrendPolicy = TrendPolicy()):
    """Convenience pipeline: totals -> digraph -> islands."""
    totals = accumulate_interactions(chain, horizon)
    g = build_digraph(totals, policy)
    return totals, g, islands(g)


def write_edge_list(g: StrongInteractionDigraph, path) -> None:
    """One 'i j trend' line per digraph edge (edges are divergent by construction)."""
    with open(path, "w") as fh:
        for (i, j) in g.edge_list():
            fh.write(f"{i} {j} {DIVERGENT}\n")
