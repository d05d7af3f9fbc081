"""Similarity communities and representative-token selection.

The graph is thresholded (keep edges with weight strictly above tau_sim),
communities are its connected components, oversized communities are split
by a deterministic BFS-chunk rule, each token is scored by its average
cosine similarity to the rest of its community, and the top ceil(|c|*r)
tokens per community are retained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import connected_components

from .graph import SpatioTemporalGraph
from .grid import TokenGrid

SINGLETON_SCORE = 1.0


@dataclass(frozen=True)
class CommunityPartition:
    """Dense per-token labels plus per-community member lists.

    Community ids are assigned by ascending minimum member index; member
    lists are sorted ascending. Every token belongs to exactly one community.
    """

    labels: np.ndarray
    communities: list[np.ndarray]

    @property
    def m(self) -> int:
        return len(self.communities)

    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.communities], dtype=np.int64)


def _canonicalize(labels_raw: np.ndarray) -> CommunityPartition:
    """Relabel by first occurrence (== ascending minimum member index)."""
    _, first, inverse = np.unique(labels_raw, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    labels = rank[inverse]
    order = np.argsort(labels, kind="stable")
    counts = np.bincount(labels)
    communities = np.split(order, np.cumsum(counts)[:-1])
    labels.flags.writeable = False
    return CommunityPartition(labels=labels, communities=[np.sort(c) for c in communities])


def threshold_components(graph: SpatioTemporalGraph, tau_sim: float) -> CommunityPartition:
    """Connected components of the subgraph keeping edges with w > tau_sim."""
    keep = graph.weights > tau_sim
    n = graph.n_nodes
    row = np.repeat(np.arange(n, dtype=np.int64), np.diff(graph.offsets))[keep]
    col = graph.neighbors[keep]
    adj = csr_array(
        (np.ones(len(row), dtype=np.int8), (row, col)), shape=(n, n)
    )
    _, labels_raw = connected_components(adj, directed=False)
    return _canonicalize(labels_raw)


def _bfs_visit_order(
    graph: SpatioTemporalGraph, members: np.ndarray, in_comm: np.ndarray, visited: np.ndarray
) -> np.ndarray:
    """BFS discovery order over intra-community edges, restarting from the
    minimum-index unvisited member if the community is not connected."""
    in_comm[members] = True
    visited[members] = False
    order_parts: list[np.ndarray] = []
    seen = 0
    restart_pos = 0
    while seen < len(members):
        while visited[members[restart_pos]]:
            restart_pos += 1
        root = members[restart_pos]
        visited[root] = True
        frontier = np.array([root], dtype=np.int64)
        order_parts.append(frontier)
        seen += 1
        while len(frontier):
            counts = (graph.offsets[frontier + 1] - graph.offsets[frontier]).astype(np.int64)
            starts = graph.offsets[frontier]
            flat = np.repeat(starts, counts) + (
                np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
            )
            nbrs = graph.neighbors[flat]
            cand = nbrs[in_comm[nbrs] & ~visited[nbrs]]
            if len(cand) == 0:
                break
            # first occurrence keeps classic FIFO enqueue order
            _, first = np.unique(cand, return_index=True)
            frontier = cand[np.sort(first)]
            visited[frontier] = True
            order_parts.append(frontier)
            seen += len(frontier)
    in_comm[members] = False
    return np.concatenate(order_parts)


def enforce_size_cap(
    partition: CommunityPartition, graph: SpatioTemporalGraph, cap: int
) -> CommunityPartition:
    """Split every community larger than *cap* into BFS-ordered chunks.

    The traversal starts at the community's minimum-index token, walks graph
    edges between community members with neighbors in ascending order, and
    emits contiguous chunks of at most *cap* tokens in visit order. The
    union of the chunks equals the original community.
    """
    if cap < 1:
        raise ValueError(f"community size cap must be >= 1, got {cap}")
    if all(len(c) <= cap for c in partition.communities):
        return partition
    in_comm = np.zeros(graph.n_nodes, dtype=bool)
    visited = np.zeros(graph.n_nodes, dtype=bool)
    labels = np.empty(graph.n_nodes, dtype=np.int64)
    next_label = 0
    for members in partition.communities:
        if len(members) <= cap:
            labels[members] = next_label
            next_label += 1
            continue
        order = _bfs_visit_order(graph, members, in_comm, visited)
        for lo in range(0, len(order), cap):
            labels[order[lo:lo + cap]] = next_label
            next_label += 1
    return _canonicalize(labels)


def centrality_scores(grid: TokenGrid, partition: CommunityPartition) -> np.ndarray:
    """Average cosine similarity of each token to the rest of its community.

    Exact O(|c|*d) per community via the unit-vector identity
    sum_{b != a} cos(a, b) = u_a . (S - u_a) with S = sum_b u_b. Subtracting
    u_a from S before the dot (rather than u_a . u_a after) makes the two
    members of any 2-token community round identically, so mathematical
    ties stay ties and the index tie-break stays meaningful.
    Singleton communities score 1.0 by convention.
    """
    unit = grid.unit_features()
    scores = np.full(grid.n_tokens, SINGLETON_SCORE, dtype=np.float64)
    sizes = partition.sizes()

    # |c| = 2 reduces to one shared pairwise cosine; assigning the same
    # scalar to both members keeps their mathematical tie exact in floats
    pair_ids = np.flatnonzero(sizes == 2)
    if len(pair_ids):
        pairs = np.stack([partition.communities[i] for i in pair_ids])
        w = np.clip(np.einsum("ij,ij->i", unit[pairs[:, 0]], unit[pairs[:, 1]]), -1.0, 1.0)
        scores[pairs[:, 0]] = w
        scores[pairs[:, 1]] = w

    multi = sizes > 2
    if not multi.any():
        return scores
    grouped = np.concatenate([c for c, keep in zip(partition.communities, multi) if keep])
    g_sizes = sizes[multi]
    starts = np.concatenate([[0], np.cumsum(g_sizes)[:-1]])
    u = unit[grouped]
    comm_sum = np.add.reduceat(u, starts, axis=0)
    lab = np.repeat(np.arange(len(g_sizes)), g_sizes)
    dots = np.einsum("ij,ij->i", u, comm_sum[lab] - u)
    scores[grouped] = dots / (g_sizes[lab] - 1)
    return scores


def select_representatives(
    partition: CommunityPartition, scores: np.ndarray, r: float
) -> np.ndarray:
    """Top ceil(|c|*r) tokens per community by score, ties to the lower index.

    Returns the union as a sorted ascending index array; every community
    contributes at least one token for any r > 0.
    """
    if not 0.0 < r <= 1.0:
        raise ValueError(f"retain ratio must be in (0, 1], got {r}")
    sizes = partition.sizes()
    keep_counts = np.ceil(sizes.astype(np.float64) * r).astype(np.int64)
    labels = partition.labels
    token_idx = np.arange(len(labels), dtype=np.int64)
    order = np.lexsort((token_idx, -scores, labels))
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    rank_in_comm = np.arange(len(labels)) - starts[labels[order]]
    kept = order[rank_in_comm < keep_counts[labels[order]]]
    return np.sort(kept)


def default_community_cap(n_tokens: int) -> int:
    """ceil(sqrt(N)), the automatic community-size cap."""
    return int(math.ceil(math.sqrt(n_tokens)))
