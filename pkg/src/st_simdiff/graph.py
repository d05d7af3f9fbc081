"""Sparse spatio-temporal graph over video tokens.

Nodes are tokens. Spatial edges join 4-adjacent patches within one frame;
temporal edges join same-position patches in adjacent frames. Every edge
is weighted by the cosine similarity of its endpoint feature vectors,
accumulated in float64. Undirected edge counts are closed-form:

    |E_S| = T * (H*(W-1) + (H-1)*W)        |E_T| = (T-1) * H * W

so the maximum degree is 6 (4 spatial + 2 temporal).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .grid import TokenGrid

SPATIAL = 0
TEMPORAL = 1

_PARALLEL_MIN_EDGES = 4096


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two equal-length vectors, clamped to [-1, 1].

    Returns 0.0 if either norm is below 1e-12, so near-zero padding tokens
    are similar to nothing rather than NaN.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"cosine needs equal-length vectors, got {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class SpatioTemporalGraph:
    """CSR adjacency with both directions of every undirected edge stored.

    ``offsets`` has length N+1; ``neighbors[offsets[i]:offsets[i+1]]`` are
    node i's neighbors in ascending index order, with parallel ``weights``
    and ``kinds`` (SPATIAL/TEMPORAL) entries. ``n_edges`` counts undirected
    edges. Temporal weights are additionally cached in later-frame order
    (entry k is the weight of edge k -> k + H*W).
    """

    frames: int
    height: int
    width: int
    n_nodes: int
    offsets: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray
    kinds: np.ndarray
    n_edges: int
    _temporal_w: np.ndarray = field(repr=False, compare=False, hash=False, default=None)

    @property
    def tokens_per_frame(self) -> int:
        return self.height * self.width

    def degree(self, node: int) -> int:
        return int(self.offsets[node + 1] - self.offsets[node])

    def neighbor_slice(self, node: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = int(self.offsets[node]), int(self.offsets[node + 1])
        return self.neighbors[lo:hi], self.weights[lo:hi], self.kinds[lo:hi]


def _pairwise_weights(unit: np.ndarray, a: np.ndarray, b: np.ndarray, threads: int) -> np.ndarray:
    out = np.empty(len(a), dtype=np.float64)

    def fill(lo: int, hi: int) -> None:
        np.einsum("ij,ij->i", unit[a[lo:hi]], unit[b[lo:hi]], out=out[lo:hi])

    if threads > 1 and len(a) >= _PARALLEL_MIN_EDGES:
        bounds = np.linspace(0, len(a), threads + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(fill, int(bounds[i]), int(bounds[i + 1]))
                for i in range(threads)
            ]
            for fut in futures:
                fut.result()
    else:
        fill(0, len(a))
    np.clip(out, -1.0, 1.0, out=out)
    return out


def build_graph(grid: TokenGrid, threads: int = 1) -> SpatioTemporalGraph:
    """Single pass over all tokens, O(N*d).

    Edge weights are computed from the grid's cached unit vectors; splitting
    the work across threads writes disjoint slices of the same preallocated
    array, so the result is identical for any thread count.
    """
    t, h, w = grid.frames, grid.height, grid.width
    n = grid.n_tokens
    unit = grid.unit_features()
    idx = np.arange(n, dtype=np.int64).reshape(t, h, w)

    horiz_a = idx[:, :, :-1].ravel()
    horiz_b = idx[:, :, 1:].ravel()
    vert_a = idx[:, :-1, :].ravel()
    vert_b = idx[:, 1:, :].ravel()
    temp_a = idx[:-1].ravel()
    temp_b = idx[1:].ravel()

    src = np.concatenate([horiz_a, vert_a, temp_a])
    dst = np.concatenate([horiz_b, vert_b, temp_b])
    kind = np.concatenate([
        np.zeros(len(horiz_a) + len(vert_a), dtype=np.uint8),
        np.ones(len(temp_a), dtype=np.uint8),
    ])
    wts = _pairwise_weights(unit, src, dst, threads)
    temporal_w = wts[len(horiz_a) + len(vert_a):].copy()
    temporal_w.flags.writeable = False

    both_src = np.concatenate([src, dst])
    both_dst = np.concatenate([dst, src])
    both_w = np.concatenate([wts, wts])
    both_kind = np.concatenate([kind, kind])
    order = np.lexsort((both_dst, both_src))

    neighbors = both_dst[order]
    weights = both_w[order]
    kinds = both_kind[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(both_src, minlength=n), out=offsets[1:])

    for arr in (neighbors, weights, kinds, offsets):
        arr.flags.writeable = False
    return SpatioTemporalGraph(
        frames=t,
        height=h,
        width=w,
        n_nodes=n,
        offsets=offsets,
        neighbors=neighbors,
        weights=weights,
        kinds=kinds,
        n_edges=len(src),
        _temporal_w=temporal_w,
    )


def temporal_edge_arrays(graph: SpatioTemporalGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(earlier, later, weight) arrays for all temporal edges, ascending later index."""
    per_frame = graph.tokens_per_frame
    m = (graph.frames - 1) * per_frame
    earlier = np.arange(m, dtype=np.int64)
    later = earlier + per_frame
    return earlier, later, graph._temporal_w


def temporal_edges(graph: SpatioTemporalGraph) -> Iterator[tuple[int, int, float]]:
    """Yield each temporal edge once, oriented earlier -> later frame."""
    earlier, later, wts = temporal_edge_arrays(graph)
    for a, b, wt in zip(earlier.tolist(), later.tolist(), wts.tolist()):
        yield a, b, wt


@dataclass(frozen=True)
class EdgeStats:
    spatial_count: int
    temporal_count: int
    spatial_hist: list[int]
    temporal_hist: list[int]
    bin_edges: list[float]
    min_weight: float
    mean_weight: float
    max_weight: float
    min_temporal_weight: float

    def to_dict(self) -> dict:
        return {
            "spatial_count": self.spatial_count,
            "temporal_count": self.temporal_count,
            "spatial_hist": self.spatial_hist,
            "temporal_hist": self.temporal_hist,
            "bin_edges": self.bin_edges,
            "min_weight": self.min_weight,
            "mean_weight": self.mean_weight,
            "max_weight": self.max_weight,
            "min_temporal_weight": self.min_temporal_weight,
        }


def edge_stats(graph: SpatioTemporalGraph, bins: int = 20) -> EdgeStats:
    """Per-kind counts and weight histograms over undirected edges."""
    mask_upper = np.repeat(
        np.arange(graph.n_nodes), np.diff(graph.offsets)
    ) < graph.neighbors
    wts = graph.weights[mask_upper]
    kinds = graph.kinds[mask_upper]
    spatial_w = wts[kinds == SPATIAL]
    temporal_w = wts[kinds == TEMPORAL]
    edges = np.linspace(-1.0, 1.0, bins + 1)
    spatial_hist, _ = np.histogram(spatial_w, bins=edges)
    temporal_hist, _ = np.histogram(temporal_w, bins=edges)
    return EdgeStats(
        spatial_count=int(len(spatial_w)),
        temporal_count=int(len(temporal_w)),
        spatial_hist=spatial_hist.tolist(),
        temporal_hist=temporal_hist.tolist(),
        bin_edges=[float(x) for x in edges],
        min_weight=float(wts.min()) if len(wts) else 0.0,
        mean_weight=float(wts.mean()) if len(wts) else 0.0,
        max_weight=float(wts.max()) if len(wts) else 0.0,
        min_temporal_weight=float(temporal_w.min()) if len(temporal_w) else 0.0,
    )


def expected_edge_counts(frames: int, height: int, width: int) -> tuple[int, int]:
    """Closed-form undirected (spatial, temporal) edge counts."""
    spatial = frames * (height * (width - 1) + (height - 1) * width)
    temporal = (frames - 1) * height * width
    return spatial, temporal
