## @file graph.py
## @brief Time-invariant directed communication graph.
##
## Edge (i, j) means j ∈ N_i: agent i reads agent j's estimate. Every node is
## its own neighbour. Reachability queries are answered by networkx BFS.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from .errors import InvalidInputError, NotStronglyConnectedError


@dataclass(frozen=True)
class Digraph:
    node_count: int
    edges: frozenset[tuple[int, int]] = frozenset()
    _nx: nx.DiGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 1:
            raise InvalidInputError(f"graph needs at least one node, got {self.node_count}")
        clean: set[tuple[int, int]] = set()
        for edge in self.edges:
            i, j = (int(v) for v in edge)
            for v in (i, j):
                if not 0 <= v < self.node_count:
                    raise InvalidInputError(
                        f"edge ({i}, {j}) references node {v} outside [0, {self.node_count})"
                    )
            if i != j:
                clean.add((i, j))
        g = nx.DiGraph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(clean)
        object.__setattr__(self, "edges", frozenset(clean))
        object.__setattr__(self, "_nx", g)

    def _check(self, i: int) -> None:
        if not 0 <= i < self.node_count:
            raise InvalidInputError(f"node {i} outside [0, {self.node_count})")


def complete_graph(node_count: int) -> Digraph:
    return Digraph(node_count, frozenset(
        (i, j) for i in range(node_count) for j in range(node_count) if i != j
    ))


def directed_ring(node_count: int) -> Digraph:
    """@brief Ring with edges (i, i+1 mod N)."""
    return Digraph(node_count, frozenset(
        (i, (i + 1) % node_count) for i in range(node_count)
    ))


def from_edge_list(node_count: int, edges: Iterable[Iterable[int]]) -> Digraph:
    return Digraph(node_count, frozenset(tuple(e) for e in edges))


def neighbors(g: Digraph, i: int) -> frozenset[int]:
    """@brief N_i = {j : (i, j) ∈ E} ∪ {i}."""
    g._check(i)
    return frozenset(g._nx.successors(i)) | {i}


def dhop(g: Digraph, i: int, d: int) -> frozenset[int]:
    """@brief N_i^d: nodes reachable from i by a directed path of length ≤ d."""
    g._check(i)
    if d < 0:
        raise InvalidInputError(f"hop count must be nonnegative, got {d}")
    return frozenset(nx.single_source_shortest_path_length(g._nx, i, cutoff=d))


def hop_distances(g: Digraph, i: int) -> dict[int, int]:
    g._check(i)
    return dict(nx.single_source_shortest_path_length(g._nx, i))


def diameter(g: Digraph) -> int:
    """@brief Largest shortest directed path length over ordered node pairs.
    @param g  Strongly connected digraph.
    @return   Diameter; 0 for a single node.
    """
    if not nx.is_strongly_connected(g._nx):
        raise NotStronglyConnectedError(
            f"graph with {g.node_count} nodes is not strongly connected"
        )
    return max(
        max(lengths.values())
        for _, lengths in nx.all_pairs_shortest_path_length(g._nx)
    )
