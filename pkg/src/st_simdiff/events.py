"""Temporal-difference event token selection.

A temporal edge whose similarity falls strictly below the difference
threshold marks a turning point; the later endpoint is retained as an
event token. The threshold is either a fixed similarity value or derived
from a percentile of the temporal difference scores (1 - weight).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDomainError, ValidationError
from .graph import SpatioTemporalGraph, temporal_edge_arrays


@dataclass(frozen=True)
class FixedThreshold:
    """Use tau_diff as-is."""

    tau_diff: float = 0.2

    def __post_init__(self) -> None:
        if not -1.0 <= self.tau_diff <= 1.0:
            raise ValidationError(f"tau_diff must be in [-1, 1], got {self.tau_diff}")


@dataclass(frozen=True)
class PercentileThreshold:
    """Derive the threshold from the p-th percentile of difference scores."""

    p: float = 95.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 100.0:
            raise ValidationError(f"percentile must be in (0, 100), got {self.p}")


DiffThresholdMode = FixedThreshold | PercentileThreshold


def resolve_threshold(mode: DiffThresholdMode, graph: SpatioTemporalGraph) -> float:
    """Turn the configured mode into a concrete similarity threshold.

    Percentile mode takes the nearest-rank p-th percentile of the
    difference scores 1 - w over all temporal edges (D*, the
    ceil(p/100 * M)-th smallest) and returns 1 - D*. Since 1 - w is
    antitone in w, that value *is* the rank-th largest weight; returning
    the stored weight bit-for-bit keeps the defining edge exactly on the
    strict w < tau boundary instead of an ulp off it.
    """
    if isinstance(mode, FixedThreshold):
        return mode.tau_diff
    _, _, wts = temporal_edge_arrays(graph)
    m = len(wts)
    if m == 0:
        raise EmptyDomainError(
            "percentile threshold needs at least one temporal edge (T >= 2)"
        )
    rank = int(math.ceil(mode.p / 100.0 * m))
    return float(np.sort(wts)[m - rank])


def select_event_tokens(graph: SpatioTemporalGraph, tau_diff: float) -> np.ndarray:
    """Later endpoints of temporal edges with w < tau_diff, sorted ascending.

    One pass over the temporal edges; frame-0 tokens can never qualify.
    """
    _, later, wts = temporal_edge_arrays(graph)
    return later[wts < tau_diff]


@dataclass(frozen=True)
class FrameDiffStats:
    frame: int
    min_weight: float
    mean_weight: float
    max_weight: float
    flagged: int

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "min_weight": self.min_weight,
            "mean_weight": self.mean_weight,
            "max_weight": self.max_weight,
            "flagged": self.flagged,
        }


def temporal_diff_profile(
    graph: SpatioTemporalGraph, tau_diff: float
) -> list[FrameDiffStats]:
    """Per-frame summary of temporal-edge weights into each frame f >= 1."""
    _, _, wts = temporal_edge_arrays(graph)
    per_frame = graph.tokens_per_frame
    profile = []
    for f in range(1, graph.frames):
        chunk = wts[(f - 1) * per_frame : f * per_frame]
        profile.append(
            FrameDiffStats(
                frame=f,
                min_weight=float(chunk.min()),
                mean_weight=float(chunk.mean()),
                max_weight=float(chunk.max()),
                flagged=int(np.count_nonzero(chunk < tau_diff)),
            )
        )
    return profile
