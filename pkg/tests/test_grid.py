"""Token grid model, STSD container round-trips, and synthetic videos."""

from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import st_simdiff as s


def _write(tmp_path, blob: bytes):
    path = tmp_path / "grid.stsd"
    path.write_bytes(blob)
    return path


def _valid_blob(t=2, h=2, w=2, d=4, fill=1.0) -> bytes:
    header = struct.pack("<4sIIIIIB7x", b"STSD", 1, t, h, w, d, 0)
    payload = np.full(t * h * w * d, fill, dtype="<f4").tobytes()
    return header + payload


class TestTokenGrid:
    def test_raster_flat_index(self):
        grid = s.TokenGrid(2, 3, 4, 1, np.ones((24, 1), dtype=np.float32))
        assert grid.flat_index(0, 0, 0) == 0
        assert grid.flat_index(0, 0, 3) == 3
        assert grid.flat_index(0, 1, 0) == 4
        assert grid.flat_index(1, 0, 0) == 12
        assert grid.flat_index(1, 2, 3) == 23

    def test_coords_inverts_flat_index(self):
        grid = s.TokenGrid(3, 2, 5, 1, np.ones((30, 1), dtype=np.float32))
        for k in range(grid.n_tokens):
            assert grid.flat_index(*grid.coords(k)) == k
        with pytest.raises(ValueError):
            grid.coords(30)
        with pytest.raises(ValueError):
            grid.coords(-1)

    def test_dimensions_must_be_positive(self):
        with pytest.raises(s.ValidationError):
            s.TokenGrid(0, 1, 1, 1, np.zeros((0, 1), dtype=np.float32))
        with pytest.raises(s.ValidationError):
            s.SyntheticSpec(frames=0)

    def test_feature_count_must_match_shape(self):
        with pytest.raises(s.ValidationError):
            s.TokenGrid(2, 2, 2, 4, np.zeros((7, 4), dtype=np.float32))

    def test_non_finite_rejected_with_token_index(self):
        feats = np.ones((8, 2), dtype=np.float32)
        feats[5, 1] = np.nan
        with pytest.raises(s.ValidationError, match="token 5"):
            s.TokenGrid(2, 2, 2, 2, feats)

    def test_features_are_read_only(self):
        grid = s.TokenGrid.from_array(np.ones((1, 2, 2, 3), dtype=np.float32))
        with pytest.raises(ValueError):
            grid.features[0, 0] = 2.0

    def test_unit_features_zero_norm_rows_become_zero(self):
        feats = np.zeros((4, 3), dtype=np.float32)
        feats[1] = [3.0, 4.0, 0.0]
        grid = s.TokenGrid(1, 2, 2, 3, feats)
        unit = grid.unit_features()
        assert unit.dtype == np.float64
        np.testing.assert_array_equal(unit[0], 0.0)
        np.testing.assert_allclose(unit[1], [0.6, 0.8, 0.0], atol=1e-12)


class TestContainer:
    def test_round_trip_bit_identical(self, tmp_path, random_grid):
        grid = random_grid(frames=3, height=4, width=5, dim=7, seed=11)
        path = tmp_path / "rt.stsd"
        s.save_grid(grid, path)
        back = s.load_grid(path)
        assert (back.frames, back.height, back.width, back.dim) == (3, 4, 5, 7)
        assert back.features.tobytes() == grid.features.tobytes()

    def test_header_is_32_bytes_little_endian(self, tmp_path):
        grid = s.TokenGrid.from_array(np.ones((2, 2, 2, 4), dtype=np.float32))
        path = tmp_path / "h.stsd"
        s.save_grid(grid, path)
        blob = path.read_bytes()
        assert blob[:4] == b"STSD"
        assert struct.unpack_from("<I", blob, 4)[0] == 1
        assert struct.unpack_from("<IIII", blob, 8) == (2, 2, 2, 4)
        assert blob[24] == 0  # float32 dtype code
        assert blob[25:32] == b"\x00" * 7
        assert len(blob) == 32 + 8 * 4 * 4

    def test_bad_magic(self, tmp_path):
        blob = b"XTSD" + _valid_blob()[4:]
        with pytest.raises(s.FormatError, match="magic"):
            s.load_grid(_write(tmp_path, blob))

    def test_bad_version(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[4:8] = struct.pack("<I", 2)
        with pytest.raises(s.FormatError, match="version"):
            s.load_grid(_write(tmp_path, bytes(blob)))

    def test_reserved_dtype(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[24] = 1
        with pytest.raises(s.FormatError, match="dtype"):
            s.load_grid(_write(tmp_path, bytes(blob)))

    def test_nonzero_padding(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[27] = 9
        with pytest.raises(s.FormatError, match="padding"):
            s.load_grid(_write(tmp_path, bytes(blob)))

    def test_truncated_header(self, tmp_path):
        with pytest.raises(s.FormatError, match="short"):
            s.load_grid(_write(tmp_path, b"STSD\x01"))

    def test_truncated_payload(self, tmp_path):
        blob = _valid_blob()
        with pytest.raises(s.CorruptionError):
            s.load_grid(_write(tmp_path, blob[:-1]))

    def test_trailing_bytes_rejected(self, tmp_path):
        blob = _valid_blob() + b"\x00"
        with pytest.raises(s.CorruptionError):
            s.load_grid(_write(tmp_path, blob))

    def test_zero_dimension_header_rejected(self, tmp_path):
        header = struct.pack("<4sIIIIIB7x", b"STSD", 1, 0, 1, 1, 1, 0)
        with pytest.raises(s.ValidationError):
            s.load_grid(_write(tmp_path, header))

    def test_non_finite_payload_names_token(self, tmp_path):
        payload = np.ones(2 * 2 * 2 * 4, dtype="<f4")
        payload[4 * 5 + 2] = np.inf  # token 5, component 2
        header = struct.pack("<4sIIIIIB7x", b"STSD", 1, 2, 2, 2, 4, 0)
        with pytest.raises(s.ValidationError, match="token 5"):
            s.load_grid(_write(tmp_path, header + payload.tobytes()))

    @given(
        t=st.integers(1, 3),
        h=st.integers(1, 3),
        w=st.integers(1, 3),
        d=st.integers(1, 6),
        seed=st.integers(0, 2**31 - 1),
    )
    def test_round_trip_property(self, t, h, w, d, seed, tmp_path_factory):
        rng = np.random.default_rng(seed)
        grid = s.TokenGrid.from_array(
            rng.normal(size=(t, h, w, d)).astype(np.float32)
        )
        path = tmp_path_factory.mktemp("rt") / "g.stsd"
        s.save_grid(grid, path)
        back = s.load_grid(path)
        assert back.features.tobytes() == grid.features.tobytes()
        assert (back.frames, back.height, back.width, back.dim) == (t, h, w, d)


class TestSynthetic:
    def test_identical_spec_identical_tensor(self):
        spec = s.SyntheticSpec(cuts=(3,), noise=0.05, seed=7)
        a = s.generate_synthetic(spec)
        b = s.generate_synthetic(spec)
        assert a.features.tobytes() == b.features.tobytes()

    def test_static_video_all_temporal_weights_one(self, static_grid):
        graph = s.build_graph(static_grid)
        _, _, w = s.temporal_edge_arrays(graph)
        assert (w == 1.0).all()

    def test_cut_drops_cross_scene_cosine_to_zero(self, one_cut_grid):
        graph = s.build_graph(one_cut_grid)
        src, dst, w = s.temporal_edge_arrays(graph)
        per = one_cut_grid.tokens_per_frame
        into_cut = (dst // per) == 4
        assert (w[into_cut] == 0.0).all()
        assert (w[~into_cut] == 1.0).all()

    def test_background_within_scene_cosine_near_one(self):
        grid = s.generate_synthetic(s.SyntheticSpec(cuts=(4,), noise=0.02, seed=3))
        unit = grid.unit_features()
        per = grid.tokens_per_frame
        scene0 = unit[: 4 * per]
        cos = scene0 @ scene0.T
        assert cos.min() >= 0.95

    def test_cut_frame_out_of_range(self):
        with pytest.raises(s.ValidationError):
            s.SyntheticSpec(cuts=(0,))
        with pytest.raises(s.ValidationError):
            s.SyntheticSpec(frames=4, cuts=(4,))

    def test_dim_must_fit_scene_subspaces(self):
        with pytest.raises(s.ValidationError, match="dim"):
            s.SyntheticSpec(dim=2, cuts=(2, 4))

    def test_moving_patch_offsets_secondary_axis(self):
        patch = s.MovingPatch(rows=2, cols=2, dcol=1, offset=4.0)
        grid = s.generate_synthetic(
            s.SyntheticSpec(frames=2, height=4, width=4, dim=4, patches=(patch,))
        )
        f = grid.features.reshape(2, 4, 4, 4)
        assert f[0, 0, 0, 1] == 4.0  # patch at origin in frame 0
        assert f[1, 0, 1, 1] == 4.0  # shifted one column in frame 1
        assert f[1, 0, 3, 1] == 0.0


class TestDiagnostics:
    def test_reports_zero_norm_tokens(self):
        feats = np.ones((8, 2), dtype=np.float32)
        feats[2] = 0.0
        feats[6] = 0.0
        grid = s.TokenGrid(2, 2, 2, 2, feats)
        diag = s.validate_grid(grid)
        assert diag.zero_norm_count == 2
        assert diag.n_tokens == 8
        d = diag.to_dict()
        assert d["zero_norm_count"] == 2 and d["n"] == 8

    def test_magnitude_range(self, random_grid):
        grid = random_grid(seed=5)
        diag = s.validate_grid(grid)
        assert diag.min_magnitude == float(np.abs(grid.features).min())
        assert diag.max_magnitude == float(np.abs(grid.features).max())


class TestCeilCount:
    @pytest.mark.parametrize(
        "count,ratio,expected",
        [(100, 0.3, 30), (7, 0.5, 4), (5, 0.5, 3), (1, 0.3, 1), (10, 1.0, 10)],
    )
    def test_examples(self, count, ratio, expected):
        assert s.ceil_count(count, ratio) == expected

    def test_float_product_semantics(self):
        # 3 * 0.34 lands just above 1 in binary64, so the ceiling is 2
        assert s.ceil_count(3, 0.34) == 2

    @given(count=st.integers(1, 10_000), ratio=st.floats(0.001, 1.0))
    def test_bounds(self, count, ratio):
        got = s.ceil_count(count, ratio)
        assert 1 <= got <= count or ratio > 1.0
        assert got >= count * ratio - 1e-9
