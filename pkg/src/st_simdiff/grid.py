"""Token tensor data model, the STSD on-disk container, and synthetic videos.

A video is a grid of visual tokens: T frames, each an H x W patch grid,
each patch owning a d-dimensional feature vector. Tokens are numbered in
raster order (frame-major, then row, then column), so the flat index of
token (t, h, w) is ``t*H*W + h*W + w``.

STSD container layout (little-endian throughout, no trailing bytes):

    offset  size  field
    0       4     magic ``STSD``
    4       4     version (u32, must be 1)
    8       16    T, H, W, d (four u32)
    24      1     dtype code (u8, 0 = float32; others reserved)
    25      7     padding, must be zero
    32      N*d*4 payload, float32 values in raster order
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorruptionError, FormatError, ValidationError

_MAGIC = b"STSD"
_VERSION = 1
_DTYPE_F32 = 0
_HEADER = struct.Struct("<4sIIIIIB7x")  # 32 bytes

_ZERO_NORM_EPS = 1e-12


@dataclass(frozen=True)
class TokenGrid:
    """Immutable token feature tensor for one video.

    ``features`` has shape (N, d) with N = frames*height*width, float32,
    row-major in raster order. The array is marked read-only on
    construction; derived unit vectors are cached lazily.
    """

    frames: int
    height: int
    width: int
    dim: int
    features: np.ndarray
    _unit_cache: np.ndarray | None = field(
        default=None, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        for name in ("frames", "height", "width", "dim"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        n = self.frames * self.height * self.width
        feats = np.ascontiguousarray(self.features, dtype=np.float32)
        if feats.size != n * self.dim:
            raise ValidationError(
                f"feature array has {feats.size} values, expected {n * self.dim}"
            )
        feats = feats.reshape(n, self.dim)
        if not np.isfinite(feats).all():
            bad = int(np.flatnonzero(~np.isfinite(feats).all(axis=1))[0])
            raise ValidationError(f"non-finite feature value at token {bad}")
        feats.flags.writeable = False
        object.__setattr__(self, "features", feats)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "TokenGrid":
        """Build a grid from a (T, H, W, d) array."""
        arr = np.asarray(array)
        if arr.ndim != 4:
            raise ValidationError(f"expected a (T, H, W, d) array, got ndim={arr.ndim}")
        t, h, w, d = arr.shape
        return cls(t, h, w, d, arr.reshape(t * h * w, d))

    @property
    def n_tokens(self) -> int:
        return self.frames * self.height * self.width

    @property
    def tokens_per_frame(self) -> int:
        return self.height * self.width

    def flat_index(self, frame: int, row: int, col: int) -> int:
        return frame * self.height * self.width + row * self.width + col

    def coords(self, index: int) -> tuple[int, int, int]:
        """Inverse of flat_index; bijective on [0, N)."""
        if not 0 <= index < self.n_tokens:
            raise ValueError(f"token index {index} out of range [0, {self.n_tokens})")
        per_frame = self.height * self.width
        frame, rest = divmod(index, per_frame)
        row, col = divmod(rest, self.width)
        return frame, row, col

    def unit_features(self) -> np.ndarray:
        """Unit-normalized feature rows in float64, computed once.

        Rows whose norm falls below 1e-12 become all-zero, so every cosine
        involving such a token is exactly 0.
        """
        if self._unit_cache is None:
            feats = self.features.astype(np.float64)
            norms = np.linalg.norm(feats, axis=1, keepdims=True)
            unit = np.divide(feats, norms, out=np.zeros_like(feats), where=norms > _ZERO_NORM_EPS)
            unit.flags.writeable = False
            object.__setattr__(self, "_unit_cache", unit)
        return self._unit_cache


def save_grid(grid: TokenGrid, path: str | Path) -> None:
    """Write the grid to *path* in the STSD container format."""
    header = _HEADER.pack(
        _MAGIC, _VERSION, grid.frames, grid.height, grid.width, grid.dim, _DTYPE_F32
    )
    payload = np.ascontiguousarray(grid.features, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_grid(path: str | Path) -> TokenGrid:
    """Read and validate an STSD container.

    Raises FormatError on bad magic/version/dtype/padding, CorruptionError
    on a payload length mismatch, ValidationError on non-finite values.
    """
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"file too short for an STSD header ({len(blob)} bytes)")
    magic, version, t, h, w, d, dtype = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FormatError(f"unsupported container version {version}")
    if dtype != _DTYPE_F32:
        raise FormatError(f"reserved dtype code {dtype}")
    if any(blob[25:32]):
        raise FormatError("nonzero padding bytes in header")
    if min(t, h, w, d) < 1:
        raise ValidationError(f"header dimensions must be >= 1, got T={t} H={h} W={w} d={d}")
    expected = t * h * w * d * 4
    payload = blob[_HEADER.size:]
    if len(payload) != expected:
        raise CorruptionError(
            f"payload holds {len(payload)} bytes, expected {expected} for T={t} H={h} W={w} d={d}"
        )
    feats = np.frombuffer(payload, dtype="<f4").reshape(t * h * w, d)
    finite = np.isfinite(feats)
    if not finite.all():
        flat = int(np.flatnonzero(~finite)[0]) // d
        raise ValidationError(f"non-finite feature value at token {flat}")
    return TokenGrid(t, h, w, d, feats)


@dataclass(frozen=True)
class MovingPatch:
    """Rectangular token region translated by a fixed velocity per frame.

    The patch wraps around frame borders. Its tokens get an extra feature
    component of magnitude ``offset`` along the scene's secondary axis, so
    cosine(patch, background) = 1/sqrt(1 + offset^2).
    """

    rows: int = 2
    cols: int = 2
    row0: int = 0
    col0: int = 0
    drow: int = 0
    dcol: int = 1
    offset: float = 4.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for a deterministic synthetic token video.

    Frames are segmented into scenes at ``cuts`` (frame indices in [1, T)).
    Scene s draws its tokens from the 2D subspace spanned by canonical axes
    (2s, 2s+1): the background sits exactly on axis 2s and patch tokens tilt
    toward axis 2s+1. Consecutive scenes therefore occupy orthogonal
    subspaces, which guarantees (before noise):

      * background tokens within one scene are pairwise cosine 1.0 >= 0.95,
      * every token's cosine to its previous-frame counterpart across a cut
        is exactly 0.0 <= 0.1.

    Gaussian noise of amplitude ``noise`` is added afterwards and perturbs
    those values slightly. Requires dim >= 2 * (len(cuts) + 1).
    """

    frames: int = 8
    height: int = 4
    width: int = 4
    dim: int = 16
    seed: int = 0
    patches: tuple[MovingPatch, ...] = ()
    cuts: tuple[int, ...] = ()
    noise: float = 0.0

    def __post_init__(self) -> None:
        for name in ("frames", "height", "width", "dim"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.noise < 0:
            raise ValidationError(f"noise amplitude must be >= 0, got {self.noise}")
        for cut in self.cuts:
            if not 1 <= cut < self.frames:
                raise ValidationError(
                    f"scene-cut frame {cut} outside [1, {self.frames})"
                )
        scenes = len(self.cuts) + 1
        if self.dim < 2 * scenes:
            raise ValidationError(
                f"dim={self.dim} too small for {scenes} scenes; need >= {2 * scenes}"
            )


def generate_synthetic(spec: SyntheticSpec) -> TokenGrid:
    """Render the spec into a TokenGrid. Identical spec -> identical tensor."""
    t, h, w, d = spec.frames, spec.height, spec.width, spec.dim
    cuts = sorted(set(spec.cuts))
    feats = np.zeros((t, h, w, d), dtype=np.float64)

    scene_of_frame = np.zeros(t, dtype=np.int64)
    for cut in cuts:
        scene_of_frame[cut:] += 1

    for frame in range(t):
        scene = int(scene_of_frame[frame])
        feats[frame, :, :, 2 * scene] = 1.0
        for patch in spec.patches:
            r0 = (patch.row0 + frame * patch.drow) % h
            c0 = (patch.col0 + frame * patch.dcol) % w
            rows = (r0 + np.arange(patch.rows)) % h
            cols = (c0 + np.arange(patch.cols)) % w
            feats[frame, rows[:, None], cols[None, :], 2 * scene + 1] = patch.offset

    if spec.noise > 0:
        rng = np.random.default_rng(spec.seed)
        feats += spec.noise * rng.standard_normal(feats.shape)

    return TokenGrid.from_array(feats.astype(np.float32))


@dataclass(frozen=True)
class GridDiagnostics:
    n_tokens: int
    dim: int
    zero_norm_count: int
    min_magnitude: float
    max_magnitude: float

    def to_dict(self) -> dict:
        return {
            "n": self.n_tokens,
            "dim": self.dim,
            "zero_norm_count": self.zero_norm_count,
            "min_magnitude": self.min_magnitude,
            "max_magnitude": self.max_magnitude,
        }


def validate_grid(grid: TokenGrid) -> GridDiagnostics:
    """Report-only diagnostics; zero-norm tokens are legal but worth flagging."""
    norms = np.linalg.norm(grid.features.astype(np.float64), axis=1)
    mags = np.abs(grid.features)
    return GridDiagnostics(
        n_tokens=grid.n_tokens,
        dim=grid.dim,
        zero_norm_count=int(np.count_nonzero(norms <= _ZERO_NORM_EPS)),
        min_magnitude=float(mags.min()),
        max_magnitude=float(mags.max()),
    )


def ceil_count(count: int, ratio: float) -> int:
    """ceil(count * ratio) with plain float semantics, shared by all budgets."""
    return int(math.ceil(count * ratio))
