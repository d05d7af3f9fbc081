"""End-to-end selection pipeline and its configuration."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .budget import (
    ExternalScores,
    ImportanceSource,
    MeanCosineProxy,
    SelectionResult,
    UniformImportance,
    finalize_selection,
    importance_scores,
)
from .communities import (
    CommunityPartition,
    centrality_scores,
    default_community_cap,
    enforce_size_cap,
    select_representatives,
    threshold_components,
)
from .errors import StSimDiffError, ValidationError
from .events import (
    DiffThresholdMode,
    FixedThreshold,
    PercentileThreshold,
    resolve_threshold,
    select_event_tokens,
)
from .graph import SpatioTemporalGraph, build_graph
from .grid import TokenGrid

THREADS_ENV = "ST_SIMDIFF_THREADS"


@dataclass(frozen=True)
class SelectionConfig:
    """Pipeline parameters; defaults are the tuned operating point.

    ``community_cap`` of None means the automatic ceil(sqrt(N)) cap, and
    ``threads`` of None means the ST_SIMDIFF_THREADS environment variable
    or 1. Thread count never changes the output, only the wall time.
    """

    ratio: float = 0.3
    tau_sim: float = 0.8
    diff_mode: DiffThresholdMode = FixedThreshold(0.2)
    community_cap: int | None = None
    importance: ImportanceSource = MeanCosineProxy()
    fill: bool = True
    threads: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio <= 1.0:
            raise ValidationError(f"ratio must be in (0, 1], got {self.ratio}")
        if not -1.0 <= self.tau_sim <= 1.0:
            raise ValidationError(f"tau_sim must be in [-1, 1], got {self.tau_sim}")
        if self.community_cap is not None and self.community_cap < 1:
            raise ValidationError(
                f"community cap must be >= 1 or auto, got {self.community_cap}"
            )
        if self.threads is not None and self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return self.threads
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                value = int(env)
            except ValueError as exc:
                raise ValidationError(f"{THREADS_ENV}={env!r} is not an integer") from exc
            if value < 1:
                raise ValidationError(f"{THREADS_ENV} must be >= 1, got {value}")
            return value
        return 1

    def echo(self) -> dict:
        """Deterministic config summary for result records.

        Thread count is an execution knob, not a selection parameter, so it
        is deliberately left out: output bytes must not depend on it.
        """
        if isinstance(self.diff_mode, FixedThreshold):
            diff = {"mode": "fixed", "tau_diff": self.diff_mode.tau_diff}
        else:
            diff = {"mode": "percentile", "p": self.diff_mode.p}
        if isinstance(self.importance, MeanCosineProxy):
            importance = "proxy"
        elif isinstance(self.importance, UniformImportance):
            importance = "uniform"
        else:
            importance = f"external:{self.importance.path}"
        return {
            "ratio": self.ratio,
            "tau_sim": self.tau_sim,
            "diff_mode": diff,
            "community_cap": "auto" if self.community_cap is None else self.community_cap,
            "importance": importance,
            "fill": self.fill,
        }


class _StageClock:
    def __init__(self) -> None:
        self.stage = "setup"
        self.ms: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def enter(self, stage: str) -> None:
        now = time.perf_counter()
        self.ms[self.stage] = self.ms.get(self.stage, 0.0) + (now - self._t0) * 1e3
        self.stage = stage
        self._t0 = now


def run_pipeline(grid: TokenGrid, config: SelectionConfig | None = None) -> SelectionResult:
    """Full selection: graph -> communities/centrality -> events -> budget.

    Errors raised by any stage gain a ``stage`` attribute naming it.
    """
    config = config or SelectionConfig()
    clock = _StageClock()
    total0 = time.perf_counter()
    try:
        clock.enter("graph")
        graph = build_graph(grid, threads=config.resolved_threads())

        clock.enter("srts")
        partition = threshold_components(graph, config.tau_sim)
        n_communities = partition.m
        cap = config.community_cap or default_community_cap(grid.n_tokens)
        capped = enforce_size_cap(partition, graph, cap)
        scores = centrality_scores(grid, capped)
        t_rep = select_representatives(capped, scores, config.ratio)

        clock.enter("dets")
        tau_diff = resolve_threshold(config.diff_mode, graph)
        t_event = select_event_tokens(graph, tau_diff)

        clock.enter("budget")
        imp = importance_scores(grid, config.importance)
        result = finalize_selection(
            grid.n_tokens, config.ratio, t_rep, t_event, imp, fill=config.fill
        )
        clock.enter("done")
    except StSimDiffError as exc:
        if not hasattr(exc, "stage"):
            exc.stage = clock.stage
        raise

    timing = {f"{name}_ms": round(ms, 3) for name, ms in clock.ms.items() if name != "done"}
    timing["total_ms"] = round((time.perf_counter() - total0) * 1e3, 3)
    echo = config.echo()
    if isinstance(config.diff_mode, PercentileThreshold):
        echo["diff_mode"]["resolved_tau_diff"] = tau_diff
    return replace(
        result,
        communities=n_communities,
        config=echo,
        timing=timing,
    )


def select_tokens(
    features: np.ndarray, config: SelectionConfig | None = None
) -> SelectionResult:
    """Convenience entrypoint on an in-memory (T, H, W, d) float array."""
    return run_pipeline(TokenGrid.from_array(features), config)
