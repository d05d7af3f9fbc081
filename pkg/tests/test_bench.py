"""Benchmark harness: workload generation, median-run timing, guards."""

from __future__ import annotations

import numpy as np
import pytest

import st_simdiff as s
from st_simdiff import bench


class TestWorkload:
    def test_shape_prefers_square_frames(self):
        assert bench.workload_shape(16384) == (64, 16, 16)
        assert bench.workload_shape(256) == (1, 16, 16)
        assert bench.workload_shape(48) == (3, 4, 4)
        assert bench.workload_shape(7) == (7, 1, 1)

    def test_shape_preserves_count(self):
        for n in (7, 48, 256, 1000, 16384):
            t, h, w = bench.workload_shape(n)
            assert t * h * w == n

    def test_deterministic(self):
        a = bench.make_workload(256, 16)
        b = bench.make_workload(256, 16)
        assert a.features.tobytes() == b.features.tobytes()
        assert bench.workload_hash(a) == bench.workload_hash(b)

    def test_hash_distinguishes_sizes(self):
        a = bench.make_workload(256, 16)
        b = bench.make_workload(512, 16)
        assert bench.workload_hash(a) != bench.workload_hash(b)

    def test_workload_has_structure(self):
        grid = bench.make_workload(1024, 32)
        res = s.run_pipeline(grid)
        assert res.communities > 1
        assert res.event_count > 0


class TestScaling:
    def test_records_and_ordering(self):
        records = bench.run_scaling([256, 512], d=8, reps=3)
        assert [r.n for r in records] == [256, 512]
        for rec in records:
            assert rec.label == "pipeline"
            assert rec.reps == 3
            stage_sum = rec.graph_ms + rec.srts_ms + rec.dets_ms + rec.budget_ms
            assert stage_sum <= rec.total_ms + 1e-6
            assert rec.workload_hash == bench.workload_hash(
                bench.make_workload(rec.n, rec.d)
            )

    def test_stage_items_pipeline(self):
        rec = bench.run_scaling([256], d=8, reps=3)[0]
        stages = dict(rec.stage_items())
        assert set(stages) == {"graph", "srts", "dets", "budget", "total"}

    def test_reps_validation(self):
        with pytest.raises(s.ValidationError):
            bench.run_scaling([256], d=8, reps=2)

    def test_sizes_must_ascend(self):
        with pytest.raises(s.ValidationError):
            bench.run_scaling([512, 256], d=8, reps=3)
        with pytest.raises(s.ValidationError):
            bench.run_scaling([], d=8, reps=3)


class TestBaseline:
    def test_guard_above_limit(self):
        with pytest.raises(s.GuardError):
            bench.run_quadratic_baseline([bench.MAX_BASELINE_TOKENS * 2], d=8, reps=3)

    def test_record_shape(self):
        rec = bench.run_quadratic_baseline([256], d=8, reps=3)[0]
        assert rec.label == "baseline"
        assert rec.stage_items() == [("baseline", rec.total_ms)]
        assert rec.total_ms > 0

    def test_quadratic_growth_visible(self):
        records = bench.run_quadratic_baseline([1024, 4096], d=16, reps=3)
        # 4x tokens -> 16x pair count; even with noise it must exceed 4x
        assert records[1].total_ms > records[0].total_ms * 4


class TestDoublingRatios:
    def _fake(self, pairs):
        return [
            bench.BenchRecord(
                label="pipeline", n=n, d=8, threads=1, reps=3,
                graph_ms=0, srts_ms=0, dets_ms=0, budget_ms=0,
                total_ms=ms, workload_hash="x",
            )
            for n, ms in pairs
        ]

    def test_pairs_only_doubled_sizes(self):
        records = self._fake([(256, 10.0), (512, 20.0), (1024, 50.0), (3000, 1.0)])
        ratios = bench.doubling_ratios(records)
        assert [(a, b) for a, b, _ in ratios] == [(256, 512), (512, 1024)]
        assert ratios[0][2] == 2.0
        assert ratios[1][2] == 2.5

    def test_empty_when_no_doubles(self):
        assert bench.doubling_ratios(self._fake([(256, 1.0), (700, 2.0)])) == []
