"""Exact-budget reduction of the candidate token union.

Candidates are the union of representative and event tokens. If they
exceed the target count ceil(r*N) the lowest-importance candidates are
dropped; if they fall short and filling is enabled, the highest-importance
non-candidates are added. Importance comes from a pluggable provider so
externally exported attention scores can replace the built-in proxy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeError, ValidationError
from .grid import TokenGrid, ceil_count, load_grid

PROV_REP = 0
PROV_EVENT = 1
PROV_BOTH = 2
PROV_FILL = 3
PROV_NAMES = ("rep", "event", "both", "fill")


@dataclass(frozen=True)
class MeanCosineProxy:
    """Score each token by its cosine to the mean unit-normalized feature."""


@dataclass(frozen=True)
class UniformImportance:
    """All-equal scores; final pruning then falls back to index order."""


@dataclass(frozen=True)
class ExternalScores:
    """Per-token scores from a file (e.g. exported shallow-layer attention).

    Two layouts are accepted: an STSD container with T=H=1, W=N, d=1, or a
    raw little-endian stream of a u64 count followed by that many f32 values.
    """

    path: str


ImportanceSource = MeanCosineProxy | UniformImportance | ExternalScores


def _load_external_scores(path: str | Path, n: int) -> np.ndarray:
    blob_head = Path(path).open("rb").read(4)
    if blob_head == b"STSD":
        grid = load_grid(path)
        scores = grid.features.reshape(-1).astype(np.float64)
    else:
        blob = Path(path).read_bytes()
        if len(blob) < 8:
            raise ShapeError(f"score file too short for a count prefix: {path}")
        (count,) = struct.unpack_from("<Q", blob)
        if len(blob) != 8 + count * 4:
            raise ShapeError(
                f"score file declares {count} values but holds {len(blob) - 8} payload bytes"
            )
        scores = np.frombuffer(blob, dtype="<f4", offset=8).astype(np.float64)
    if len(scores) != n:
        raise ShapeError(f"score file holds {len(scores)} scores, expected {n}")
    if not np.isfinite(scores).all():
        raise ValidationError(f"non-finite importance score in {path}")
    return scores


def importance_scores(grid: TokenGrid, source: ImportanceSource) -> np.ndarray:
    """Per-token float64 importance scores from the configured source."""
    if isinstance(source, UniformImportance):
        return np.zeros(grid.n_tokens, dtype=np.float64)
    if isinstance(source, MeanCosineProxy):
        unit = grid.unit_features()
        mean = unit.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm < 1e-12:
            return np.zeros(grid.n_tokens, dtype=np.float64)
        if grid.n_tokens == 2 and (unit != 0.0).any(axis=1).all():
            # two nonzero tokens are equidistant from their own mean:
            # u_a.(u_a+u_b) = 1 + cos(a,b) either way; realize the tie
            # exactly so the index rule decides downstream
            c = float(unit[0] @ unit[1])
            v = (1.0 + c) / float(np.linalg.norm(unit[0] + unit[1]))
            return np.array([v, v], dtype=np.float64)
        return unit @ (mean / norm)
    if isinstance(source, ExternalScores):
        return _load_external_scores(source.path, grid.n_tokens)
    raise TypeError(f"unknown importance source {source!r}")


@dataclass(frozen=True)
class SelectionResult:
    """Retained token indices with provenance and summary statistics.

    ``indices`` is strictly ascending; ``provenance`` is a parallel uint8
    array of PROV_* codes. ``rep_count``/``event_count`` are the sizes of
    the two candidate sets before budget enforcement; ``communities`` is
    the number of detected similarity communities.
    """

    indices: np.ndarray
    provenance: np.ndarray
    n: int
    n_target: int
    rep_count: int
    event_count: int
    fill_count: int
    overlap_count: int = 0
    communities: int = 0
    config: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def provenance_names(self) -> list[str]:
        return [PROV_NAMES[code] for code in self.provenance.tolist()]

    def to_dict(self) -> dict:
        from . import SCHEMA_VERSION

        return {
            "schema_version": SCHEMA_VERSION,
            "n": self.n,
            "n_target": self.n_target,
            "config": self.config,
            "indices": self.indices.tolist(),
            "provenance": self.provenance_names(),
            "stats": {
                "communities": self.communities,
                "rep_count": self.rep_count,
                "event_count": self.event_count,
                "fill_count": self.fill_count,
            },
            "timing": self.timing,
        }


def finalize_selection(
    n: int,
    r: float,
    t_rep: np.ndarray,
    t_event: np.ndarray,
    scores: np.ndarray,
    fill: bool = True,
) -> SelectionResult:
    """Trim or fill the candidate union to exactly ceil(r*n) tokens.

    Over budget: drop the lowest-score candidates, breaking ties by dropping
    the higher index first. Under budget with fill enabled: add the
    highest-score non-candidates, ties to the lower index, tagged as fills.
    Output is sorted ascending by token index.
    """
    if not 0.0 < r <= 1.0:
        raise ValidationError(f"retain ratio must be in (0, 1], got {r}")
    if len(scores) != n:
        raise ShapeError(f"got {len(scores)} importance scores for {n} tokens")
    n_target = min(n, ceil_count(n, r))
    t_rep = np.unique(np.asarray(t_rep, dtype=np.int64))
    t_event = np.unique(np.asarray(t_event, dtype=np.int64))
    cand = np.union1d(t_rep, t_event)

    if len(cand) > n_target:
        order = np.lexsort((cand, -scores[cand]))
        kept = cand[order[:n_target]]
        kept = np.sort(kept)
        fills = np.array([], dtype=np.int64)
    else:
        kept = cand
        need = n_target - len(cand)
        if fill and need > 0:
            non_cand = np.setdiff1d(np.arange(n, dtype=np.int64), cand, assume_unique=True)
            order = np.lexsort((non_cand, -scores[non_cand]))
            fills = np.sort(non_cand[order[:need]])
        else:
            fills = np.array([], dtype=np.int64)

    in_rep = np.isin(kept, t_rep, assume_unique=True)
    in_event = np.isin(kept, t_event, assume_unique=True)
    prov_kept = np.where(in_rep & in_event, PROV_BOTH, np.where(in_event, PROV_EVENT, PROV_REP))

    indices = np.concatenate([kept, fills])
    provenance = np.concatenate([prov_kept, np.full(len(fills), PROV_FILL)]).astype(np.uint8)
    order = np.argsort(indices, kind="stable")
    indices = indices[order]
    provenance = provenance[order]
    indices.flags.writeable = False
    provenance.flags.writeable = False
    return SelectionResult(
        indices=indices,
        provenance=provenance,
        n=n,
        n_target=n_target,
        rep_count=int(len(t_rep)),
        event_count=int(len(t_event)),
        fill_count=int(len(fills)),
        overlap_count=int(len(t_rep) + len(t_event) - len(cand)),
        config={"ratio": r, "fill": fill},
    )
