"""Brute-force reference implementations for small instances.

Everything here recomputes the pipeline semantics from first principles:
edge lists by coordinate arithmetic, naive union-find, explicit all-pairs
centrality, literal top-k / event-scan / budget rules. No algorithmic code
is shared with the optimized modules; only the documented conventions
(zero-norm cosine 0, singleton score 1.0, ceil budgets, index tie-breaks)
are restated. Size guards keep these paths off benchmark-scale inputs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .budget import PROV_BOTH, PROV_EVENT, PROV_FILL, PROV_REP, SelectionResult
from .communities import CommunityPartition
from .errors import EmptyDomainError, GuardError
from .grid import TokenGrid
from .pipeline import SelectionConfig
from .events import FixedThreshold

MAX_COMPONENT_TOKENS = 4096
MAX_CENTRALITY_COMMUNITY = 1024
MAX_PIPELINE_TOKENS = 1024


@dataclass(frozen=True)
class OracleReport:
    """One comparison between the optimized path and its reference."""

    case: str
    optimized: object
    reference: object
    max_deviation: float

    @property
    def matches(self) -> bool:
        return self.max_deviation == 0.0


def _unit_rows(grid: TokenGrid) -> np.ndarray:
    feats = np.array(grid.features, dtype=np.float64)
    out = np.zeros_like(feats)
    for k in range(len(feats)):
        norm = math.sqrt(float(feats[k] @ feats[k]))
        if norm >= 1e-12:
            out[k] = feats[k] / norm
    return out


def _cos(unit: np.ndarray, i: int, j: int) -> float:
    return float(np.clip(unit[i] @ unit[j], -1.0, 1.0))


def _edge_list(grid: TokenGrid) -> list[tuple[int, int, int]]:
    """All undirected (i, j, kind) pairs by coordinate arithmetic; kind 0/1."""
    t, h, w = grid.frames, grid.height, grid.width
    edges = []
    for frame in range(t):
        for row in range(h):
            for col in range(w):
                k = grid.flat_index(frame, row, col)
                if col + 1 < w:
                    edges.append((k, k + 1, 0))
                if row + 1 < h:
                    edges.append((k, k + w, 0))
                if frame + 1 < t:
                    edges.append((k, k + h * w, 1))
    return edges


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _partition_from_labels(labels: list[int]) -> CommunityPartition:
    first_seen: dict[int, int] = {}
    for k, lab in enumerate(labels):
        first_seen.setdefault(lab, len(first_seen))
    dense = np.array([first_seen[lab] for lab in labels], dtype=np.int64)
    comms: list[list[int]] = [[] for _ in range(len(first_seen))]
    for k, lab in enumerate(dense.tolist()):
        comms[lab].append(k)
    dense.flags.writeable = False
    return CommunityPartition(
        labels=dense, communities=[np.array(c, dtype=np.int64) for c in comms]
    )


def brute_components(grid: TokenGrid, tau_sim: float) -> CommunityPartition:
    """Naive union-find over the materialized edge list, then canonical labels."""
    if grid.n_tokens > MAX_COMPONENT_TOKENS:
        raise GuardError(f"brute_components guard: N={grid.n_tokens} > {MAX_COMPONENT_TOKENS}")
    unit = _unit_rows(grid)
    uf = _UnionFind(grid.n_tokens)
    for i, j, _ in _edge_list(grid):
        if _cos(unit, i, j) > tau_sim:
            uf.union(i, j)
    return _partition_from_labels([uf.find(k) for k in range(grid.n_tokens)])


def brute_centrality(grid: TokenGrid, partition: CommunityPartition) -> np.ndarray:
    """Explicit all-pairs cosine averages per community, float64 accumulation."""
    for members in partition.communities:
        if len(members) > MAX_CENTRALITY_COMMUNITY:
            raise GuardError(
                f"brute_centrality guard: community size {len(members)} > {MAX_CENTRALITY_COMMUNITY}"
            )
    unit = _unit_rows(grid)
    scores = np.empty(grid.n_tokens, dtype=np.float64)
    for members in partition.communities:
        if len(members) == 1:
            scores[members[0]] = 1.0
            continue
        pair = np.clip(unit[members] @ unit[members].T, -1.0, 1.0)
        for pos, token in enumerate(members.tolist()):
            # sum cosines to the *others* directly; subtracting the diagonal
            # after a full-row sum would round 2-member ties apart
            total = float(np.delete(pair[pos], pos).sum())
            scores[token] = total / (len(members) - 1)
    return scores


def _bfs_chunks(
    adjacency: dict[int, list[int]], members: np.ndarray, cap: int
) -> list[list[int]]:
    """Visit order by FIFO BFS from the minimum member, ascending neighbors."""
    member_set = set(members.tolist())
    visited: set[int] = set()
    order: list[int] = []
    for start in sorted(member_set):
        if start in visited:
            continue
        visited.add(start)
        queue = deque([start])
        while queue:
            node = queue.popleft()
            order.append(node)
            for nbr in adjacency.get(node, ()):
                if nbr in member_set and nbr not in visited:
                    visited.add(nbr)
                    queue.append(nbr)
    return [order[lo:lo + cap] for lo in range(0, len(order), cap)]


def _brute_capped(
    grid: TokenGrid, partition: CommunityPartition, cap: int
) -> CommunityPartition:
    adjacency: dict[int, list[int]] = {}
    for i, j, _ in _edge_list(grid):
        adjacency.setdefault(i, []).append(j)
        adjacency.setdefault(j, []).append(i)
    for nbrs in adjacency.values():
        nbrs.sort()
    labels = [0] * grid.n_tokens
    next_label = 0
    for members in partition.communities:
        if len(members) <= cap:
            for token in members.tolist():
                labels[token] = next_label
            next_label += 1
            continue
        for chunk in _bfs_chunks(adjacency, members, cap):
            for token in chunk:
                labels[token] = next_label
            next_label += 1
    return _partition_from_labels(labels)


def brute_pipeline(grid: TokenGrid, config: SelectionConfig) -> SelectionResult:
    """Literal end-to-end reference: components, cap, centrality, top-k,
    temporal scan, and budget rule, composed step by step."""
    if grid.n_tokens > MAX_PIPELINE_TOKENS:
        raise GuardError(f"brute_pipeline guard: N={grid.n_tokens} > {MAX_PIPELINE_TOKENS}")
    n = grid.n_tokens
    unit = _unit_rows(grid)

    partition = brute_components(grid, config.tau_sim)
    n_communities = partition.m
    cap = config.community_cap or int(math.ceil(math.sqrt(n)))
    capped = _brute_capped(grid, partition, cap)
    scores = brute_centrality(grid, capped)

    t_rep: list[int] = []
    for members in capped.communities:
        keep = int(math.ceil(len(members) * config.ratio))
        ranked = sorted(members.tolist(), key=lambda k: (-scores[k], k))
        t_rep.extend(ranked[:keep])
    t_rep_set = set(t_rep)

    if isinstance(config.diff_mode, FixedThreshold):
        tau_diff = config.diff_mode.tau_diff
    else:
        temporal_w = sorted(
            _cos(unit, i, j) for i, j, kind in _edge_list(grid) if kind == 1
        )
        if not temporal_w:
            raise EmptyDomainError("percentile threshold needs at least one temporal edge")
        # rank-th smallest difference 1 - w == rank-th largest weight; use
        # the stored weight so the strict comparison below is boundary-exact
        rank = int(math.ceil(config.diff_mode.p / 100.0 * len(temporal_w)))
        tau_diff = temporal_w[len(temporal_w) - rank]

    t_event_set = {
        j for i, j, kind in _edge_list(grid) if kind == 1 and _cos(unit, i, j) < tau_diff
    }

    imp = _brute_importance(grid, unit, config)

    cand = sorted(t_rep_set | t_event_set)
    n_target = min(n, int(math.ceil(config.ratio * n)))
    fills: list[int] = []
    if len(cand) > n_target:
        cand.sort(key=lambda k: (-imp[k], k))
        cand = sorted(cand[:n_target])
    elif config.fill and len(cand) < n_target:
        rest = sorted(set(range(n)) - set(cand), key=lambda k: (-imp[k], k))
        fills = sorted(rest[: n_target - len(cand)])

    indices = []
    provenance = []
    for k in sorted(cand + fills):
        indices.append(k)
        if k in fills:
            provenance.append(PROV_FILL)
        elif k in t_rep_set and k in t_event_set:
            provenance.append(PROV_BOTH)
        elif k in t_event_set:
            provenance.append(PROV_EVENT)
        else:
            provenance.append(PROV_REP)
    return SelectionResult(
        indices=np.array(indices, dtype=np.int64),
        provenance=np.array(provenance, dtype=np.uint8),
        n=n,
        n_target=n_target,
        rep_count=len(t_rep_set),
        event_count=len(t_event_set),
        fill_count=len(fills),
        overlap_count=len(t_rep_set & t_event_set),
        communities=n_communities,
    )


def _brute_importance(grid: TokenGrid, unit: np.ndarray, config: SelectionConfig) -> np.ndarray:
    from .budget import ExternalScores, MeanCosineProxy, UniformImportance, _load_external_scores

    if isinstance(config.importance, UniformImportance):
        return np.zeros(grid.n_tokens)
    if isinstance(config.importance, MeanCosineProxy):
        mean = unit.sum(axis=0) / len(unit)
        norm = math.sqrt(float(mean @ mean))
        if norm < 1e-12:
            return np.zeros(grid.n_tokens)
        if grid.n_tokens == 2 and all(
            math.sqrt(float(row @ row)) > 0.0 for row in unit
        ):
            # restated two-token symmetry convention: both tokens score
            # (1 + cos(a,b)) / |u_a + u_b|, an exact tie
            v = (1.0 + float(unit[0] @ unit[1])) / math.sqrt(
                float((unit[0] + unit[1]) @ (unit[0] + unit[1]))
            )
            return np.array([v, v])
        return np.array([float(unit[k] @ mean) / norm for k in range(grid.n_tokens)])
    if isinstance(config.importance, ExternalScores):
        return _load_external_scores(config.importance.path, grid.n_tokens)
    raise TypeError(f"unknown importance source {config.importance!r}")
