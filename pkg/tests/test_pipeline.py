"""End-to-end pipeline: configuration, stage wiring, timing, determinism."""

from __future__ import annotations

import numpy as np
import pytest

import st_simdiff as s


class TestSelectionConfig:
    def test_defaults(self):
        cfg = s.SelectionConfig()
        assert cfg.ratio == 0.3
        assert cfg.tau_sim == 0.8
        assert cfg.diff_mode == s.FixedThreshold(0.2)
        assert cfg.community_cap is None
        assert isinstance(cfg.importance, s.MeanCosineProxy)
        assert cfg.fill is True
        assert cfg.threads is None

    def test_validation(self):
        for bad in (0.0, -0.1, 1.01):
            with pytest.raises(s.ValidationError):
                s.SelectionConfig(ratio=bad)
        with pytest.raises(s.ValidationError):
            s.SelectionConfig(tau_sim=1.5)
        with pytest.raises(s.ValidationError):
            s.SelectionConfig(community_cap=0)
        with pytest.raises(s.ValidationError):
            s.SelectionConfig(threads=0)

    def test_threads_env_resolution(self, monkeypatch):
        monkeypatch.delenv(s.THREADS_ENV, raising=False)
        assert s.SelectionConfig().resolved_threads() == 1
        monkeypatch.setenv(s.THREADS_ENV, "3")
        assert s.SelectionConfig().resolved_threads() == 3
        assert s.SelectionConfig(threads=2).resolved_threads() == 2
        monkeypatch.setenv(s.THREADS_ENV, "zero")
        with pytest.raises(s.ValidationError):
            s.SelectionConfig().resolved_threads()
        monkeypatch.setenv(s.THREADS_ENV, "0")
        with pytest.raises(s.ValidationError):
            s.SelectionConfig().resolved_threads()

    def test_echo_omits_threads(self):
        echo = s.SelectionConfig(threads=4).echo()
        assert "threads" not in echo
        assert echo == {
            "ratio": 0.3,
            "tau_sim": 0.8,
            "diff_mode": {"mode": "fixed", "tau_diff": 0.2},
            "community_cap": "auto",
            "importance": "proxy",
            "fill": True,
        }

    def test_echo_variants(self):
        echo = s.SelectionConfig(
            diff_mode=s.PercentileThreshold(90.0),
            community_cap=8,
            importance=s.UniformImportance(),
            fill=False,
        ).echo()
        assert echo["diff_mode"] == {"mode": "percentile", "p": 90.0}
        assert echo["community_cap"] == 8
        assert echo["importance"] == "uniform"
        assert echo["fill"] is False


class TestRunPipeline:
    def test_budget_met_on_cut_fixture(self, one_cut_grid):
        res = s.run_pipeline(one_cut_grid)
        n = one_cut_grid.n_tokens
        assert res.n == n
        assert res.n_target == s.ceil_count(n, 0.3)
        assert len(res.indices) == res.n_target
        assert len(res.provenance) == res.n_target

    def test_stats_fields(self, one_cut_grid):
        res = s.run_pipeline(one_cut_grid)
        assert res.communities == 2  # one community per scene, pre-cap
        assert res.event_count == one_cut_grid.tokens_per_frame
        assert res.rep_count > 0

    def test_timing_keys_and_additivity(self, one_cut_grid):
        res = s.run_pipeline(one_cut_grid)
        stages = {"setup_ms", "graph_ms", "srts_ms", "dets_ms", "budget_ms"}
        assert stages <= set(res.timing)
        assert "total_ms" in res.timing
        stage_sum = sum(v for k, v in res.timing.items() if k != "total_ms")
        assert stage_sum <= res.timing["total_ms"] + 1.0

    def test_percentile_echo_includes_resolved_threshold(self, one_cut_grid):
        cfg = s.SelectionConfig(diff_mode=s.PercentileThreshold(90.0))
        res = s.run_pipeline(one_cut_grid, cfg)
        diff = res.config["diff_mode"]
        assert diff["mode"] == "percentile"
        assert 0.0 <= diff["resolved_tau_diff"] <= 1.0

    def test_fixed_echo_has_no_resolved_threshold(self, one_cut_grid):
        res = s.run_pipeline(one_cut_grid)
        assert "resolved_tau_diff" not in res.config["diff_mode"]

    def test_stage_attribution_on_failure(self, random_grid):
        grid = random_grid(frames=1, seed=60)
        cfg = s.SelectionConfig(diff_mode=s.PercentileThreshold(95.0))
        with pytest.raises(s.EmptyDomainError) as exc_info:
            s.run_pipeline(grid, cfg)
        assert exc_info.value.stage == "dets"

    def test_determinism_same_input(self, one_cut_grid):
        a = s.run_pipeline(one_cut_grid).to_dict()
        b = s.run_pipeline(one_cut_grid).to_dict()
        a.pop("timing")
        b.pop("timing")
        assert a == b

    def test_thread_count_does_not_change_selection(self, one_cut_grid):
        outs = []
        for threads in (1, 2, 8):
            res = s.run_pipeline(one_cut_grid, s.SelectionConfig(threads=threads))
            d = res.to_dict()
            d.pop("timing")
            outs.append(d)
        assert outs[0] == outs[1] == outs[2]

    def test_no_fill_never_exceeds_candidates(self, random_grid):
        grid = random_grid(seed=61)
        res = s.run_pipeline(grid, s.SelectionConfig(ratio=0.9, fill=False))
        assert res.fill_count == 0
        assert len(res.indices) <= res.n_target

    def test_single_token_video(self):
        grid = s.TokenGrid(1, 1, 1, 4, np.ones((1, 4), dtype=np.float32))
        res = s.run_pipeline(grid)
        assert res.indices.tolist() == [0]
        assert res.n_target == 1

    def test_pipeline_is_the_stage_composition(self, tmp_path, static_grid):
        # recompose the run from the public stage functions, with external
        # importance scores (score = token index) steering the trim
        import struct

        n = static_grid.n_tokens
        vals = np.arange(n, dtype=np.float32)
        path = tmp_path / "imp.bin"
        path.write_bytes(struct.pack("<Q", n) + vals.tobytes())
        cfg = s.SelectionConfig(importance=s.ExternalScores(str(path)))

        graph = s.build_graph(static_grid)
        part = s.threshold_components(graph, cfg.tau_sim)
        capped = s.enforce_size_cap(
            part, graph, s.default_community_cap(n)
        )
        cent = s.centrality_scores(static_grid, capped)
        t_rep = s.select_representatives(capped, cent, cfg.ratio)
        t_event = s.select_event_tokens(
            graph, s.resolve_threshold(cfg.diff_mode, graph)
        )
        imp = s.importance_scores(static_grid, cfg.importance)
        expected = s.finalize_selection(n, cfg.ratio, t_rep, t_event, imp)

        res = s.run_pipeline(static_grid, cfg)
        assert res.indices.tolist() == expected.indices.tolist()
        assert res.provenance.tolist() == expected.provenance.tolist()
        # per-community rep ceilings always cover the global ceiling, so
        # the union is trimmed, never filled, when events are absent
        assert len(t_rep) >= res.n_target
        assert res.fill_count == 0

    def test_select_tokens_matches_run_pipeline(self, random_grid):
        grid = random_grid(seed=62)
        arr = np.asarray(grid.features).reshape(4, 3, 3, 8)
        a = s.select_tokens(arr).to_dict()
        b = s.run_pipeline(grid).to_dict()
        a.pop("timing")
        b.pop("timing")
        assert a == b

    def test_uniform_importance_index_fallback(self, static_grid):
        cfg = s.SelectionConfig(importance=s.UniformImportance())
        res = s.run_pipeline(static_grid, cfg)
        assert len(res.indices) == res.n_target
