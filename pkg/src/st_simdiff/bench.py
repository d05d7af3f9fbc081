"""Measurement harness: deterministic workloads, warmup/repetition policy,
and the all-pairs quadratic baseline used as the contrast curve.

Times are wall-clock milliseconds. Each record reports the median run
(lower median for even rep counts) so stage times and the total come from
the same run and stage sums never exceed the total.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from .errors import GuardError, ResourceError, ValidationError
from .grid import MovingPatch, SyntheticSpec, TokenGrid, generate_synthetic
from .pipeline import SelectionConfig, run_pipeline

PIPELINE = "pipeline"
BASELINE = "baseline"

MAX_BASELINE_TOKENS = 65536
_BASELINE_BLOCK = 512

_STAGES = ("graph", "srts", "dets", "budget")


@dataclass(frozen=True)
class BenchRecord:
    """Median-run timing for one workload size."""

    label: str
    n: int
    d: int
    threads: int
    reps: int
    graph_ms: float
    srts_ms: float
    dets_ms: float
    budget_ms: float
    total_ms: float
    workload_hash: str

    def stage_items(self) -> list[tuple[str, float]]:
        """(stage, median_ms) rows for CSV emission."""
        if self.label == BASELINE:
            return [(BASELINE, self.total_ms)]
        return [
            ("graph", self.graph_ms),
            ("srts", self.srts_ms),
            ("dets", self.dets_ms),
            ("budget", self.budget_ms),
            ("total", self.total_ms),
        ]


def workload_shape(n_tokens: int) -> tuple[int, int, int]:
    """Factor a token count into a (frames, height, width) grid."""
    if n_tokens % 256 == 0:
        return (n_tokens // 256, 16, 16)
    if n_tokens % 16 == 0:
        return (n_tokens // 16, 4, 4)
    return (n_tokens, 1, 1)


def make_workload(n_tokens: int, dim: int) -> TokenGrid:
    """Seeded synthetic grid for a size: a few scenes, one moving patch,
    mild noise so communities are large but not degenerate."""
    frames, height, width = workload_shape(n_tokens)
    scenes = max(1, min(8, frames, dim // 2))
    cuts = sorted({frames * k // scenes for k in range(1, scenes)} - {0})
    patches = ()
    if height >= 2 and width >= 2 and frames >= 2:
        patches = (
            MovingPatch(rows=2, cols=2, row0=0, col0=0, drow=1, dcol=1, offset=1.0),
        )
    spec = SyntheticSpec(
        frames=frames,
        height=height,
        width=width,
        dim=dim,
        seed=(n_tokens * 1_000_003 + dim) & 0x7FFFFFFF,
        patches=patches,
        cuts=tuple(cuts),
        noise=0.02,
    )
    return generate_synthetic(spec)


def workload_hash(grid: TokenGrid) -> str:
    return hashlib.sha256(np.ascontiguousarray(grid.features).tobytes()).hexdigest()


def _median_run(timings: list[dict[str, float]]) -> dict[str, float]:
    ordered = sorted(timings, key=lambda t: t["total_ms"])
    return ordered[(len(ordered) - 1) // 2]


def run_scaling(
    sizes: list[int],
    d: int = 64,
    reps: int = 5,
    threads: int = 1,
    config: SelectionConfig | None = None,
) -> list[BenchRecord]:
    """Time the full pipeline per size: one warmup, then `reps` timed runs."""
    if reps < 3:
        raise ValidationError(f"reps must be >= 3, got {reps}")
    if not sizes:
        raise ValidationError("need at least one workload size")
    if list(sizes) != sorted(sizes):
        raise ValidationError("sizes must be ascending")
    if config is None:
        config = SelectionConfig(threads=threads)
    records = []
    for n in sizes:
        try:
            grid = make_workload(n, d)
            digest = workload_hash(grid)
            run_pipeline(grid, config)  # warmup: page in caches, JIT BLAS dispatch
            timings = [run_pipeline(grid, config).timing for _ in range(reps)]
        except MemoryError as exc:
            raise ResourceError(f"allocation failure at n={n}, d={d}") from exc
        med = _median_run(timings)
        records.append(
            BenchRecord(
                label=PIPELINE,
                n=n,
                d=d,
                threads=threads,
                reps=reps,
                graph_ms=med["graph_ms"],
                srts_ms=med["srts_ms"],
                dets_ms=med["dets_ms"],
                budget_ms=med["budget_ms"],
                total_ms=med["total_ms"],
                workload_hash=digest,
            )
        )
    return records


def _all_pairs_pass(unit32: np.ndarray) -> float:
    """Literal O(N^2 d) cosine sweep; returns a checksum so work is observable."""
    acc = 0.0
    n = len(unit32)
    for lo in range(0, n, _BASELINE_BLOCK):
        block = unit32[lo:lo + _BASELINE_BLOCK] @ unit32.T
        acc += float(block.sum(dtype=np.float64))
    return acc


def run_quadratic_baseline(
    sizes: list[int], d: int = 64, reps: int = 3, threads: int = 1
) -> list[BenchRecord]:
    """Time an explicit all-pairs cosine pass over the same workloads."""
    if reps < 3:
        raise ValidationError(f"reps must be >= 3, got {reps}")
    for n in sizes:
        if n > MAX_BASELINE_TOKENS:
            raise GuardError(
                f"quadratic baseline guard: n={n} > {MAX_BASELINE_TOKENS}"
            )
    records = []
    warmed = False
    for n in sizes:
        try:
            grid = make_workload(n, d)
            digest = workload_hash(grid)
            unit32 = grid.unit_features().astype(np.float32)
            if not warmed:
                _all_pairs_pass(unit32)
                warmed = True
            totals = []
            for _ in range(reps):
                start = time.perf_counter()
                _all_pairs_pass(unit32)
                totals.append((time.perf_counter() - start) * 1000.0)
        except MemoryError as exc:
            raise ResourceError(f"allocation failure at n={n}, d={d}") from exc
        totals.sort()
        records.append(
            BenchRecord(
                label=BASELINE,
                n=n,
                d=d,
                threads=threads,
                reps=reps,
                graph_ms=0.0,
                srts_ms=0.0,
                dets_ms=0.0,
                budget_ms=0.0,
                total_ms=round(totals[(reps - 1) // 2], 3),
                workload_hash=digest,
            )
        )
    return records


def doubling_ratios(records: list[BenchRecord]) -> list[tuple[int, int, float]]:
    """(n, 2n, time ratio) for consecutive records where the size doubles."""
    out = []
    for prev, nxt in zip(records, records[1:]):
        if nxt.n == 2 * prev.n and prev.total_ms > 0.0:
            out.append((prev.n, nxt.n, nxt.total_ms / prev.total_ms))
    return out
