"""Frame-time sampling, clip segmentation, and visual feature providers.

Real backbone features are out of scope; a deterministic synthetic provider
stands in for them. Synthetic vectors are keyed by (video id, quantized time,
dim) and blended between per-block anchor vectors so that temporally adjacent
frames correlate, which gives the effect-modeling task learnable structure.

Feature files use the "CAEF" binary layout: magic, u32 version, u32 dim,
u64 row count, a row index of (length-prefixed video id, f64 time) entries,
then the f32 little-endian rows.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .ioutil import stable_seed

SEGMENT_LABELS = ("BEF", "ACT", "AFT")
BEF, ACT, AFT = SEGMENT_LABELS

CAEF_MAGIC = b"CAEF"
CAEF_VERSION = 1

# Synthetic features interpolate between anchor vectors drawn once per
# ANCHOR_SPAN_S-second block of a video.
ANCHOR_SPAN_S = 8.0
TIME_QUANTUM = 0.5


def sample_frame_times(
    start_s: float,
    end_s: float,
    pad_s: float = 3.0,
    stride_s: float = 2.0,
) -> list[float]:
    """Frame timestamps for a clip padded by ``pad_s`` on both ends.

    Times run from max(0, start - pad) in ``stride_s`` increments while they
    stay below end + pad.
    """
    if end_s <= start_s:
        raise ValueError(f"non-positive clip duration: ({start_s}, {end_s})")
    t0 = max(0.0, start_s - pad_s)
    limit = end_s + pad_s
    times: list[float] = []
    k = 0
    while (t := t0 + k * stride_s) < limit:
        times.append(t)
        k += 1
    return times


def segment_clip(n_frames: int) -> tuple[int, int, int]:
    """Near-equal third sizes (pre-condition, action, post-condition).

    Boundaries sit at floor(n/3) and floor(2n/3); every segment is non-empty
    and sizes differ by at most one.
    """
    if n_frames < 3:
        raise ValueError(f"clip too short to segment: {n_frames} frames")
    b1 = n_frames // 3
    b2 = (2 * n_frames) // 3
    return b1, b2 - b1, n_frames - b2


def segment_labels(n_frames: int) -> list[str]:
    n_bef, n_act, n_aft = segment_clip(n_frames)
    return [BEF] * n_bef + [ACT] * n_act + [AFT] * n_aft


class FeatureProvider(Protocol):
    dim: int

    def get(self, video_id: str, time_s: float) -> np.ndarray: ...


def _anchor(video_id: str, block: int, dim: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(stable_seed(video_id, block, dim)))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def synth_features(video_id: str, time_s: float, dim: int) -> np.ndarray:
    """Deterministic unit-norm pseudo-random feature vector.

    The time key is quantized to half seconds so sampling phase does not
    matter; the vector is a convex blend of the two neighboring block anchors,
    renormalized, making nearby frames of one video correlated.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    tq = max(0.0, round(time_s * 2) / 2)
    block = int(tq // ANCHOR_SPAN_S)
    frac = (tq - block * ANCHOR_SPAN_S) / ANCHOR_SPAN_S
    vec = (1.0 - frac) * _anchor(video_id, block, dim) + frac * _anchor(video_id, block + 1, dim)
    return (vec / np.linalg.norm(vec)).astype(np.float32)


class SyntheticFeatureProvider:
    """Feature provider backed by synth_features; nothing is stored."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def get(self, video_id: str, time_s: float) -> np.ndarray:
        return synth_features(video_id, time_s, self.dim)


class FileFeatureProvider:
    """Feature provider reading a CAEF file fully into memory."""

    def __init__(self, path: str | Path):
        rows = read_feature_file(path)
        self.dim = rows.dim
        self._table = {
            (vid, round(t * 2) / 2): rows.features[i]
            for i, (vid, t) in enumerate(rows.index)
        }

    def get(self, video_id: str, time_s: float) -> np.ndarray:
        key = (video_id, round(time_s * 2) / 2)
        if key not in self._table:
            raise KeyError(f"no stored features for {key}")
        return self._table[key]


@dataclass
class FrameSequence:
    """Sampled frames of one clip: timestamps, features, and segment labels."""

    video_id: str
    times: list[float]
    features: np.ndarray  # (n_frames, dim) float32
    segments: list[str]

    def __post_init__(self):
        if len(self.times) != self.features.shape[0] or len(self.segments) != len(self.times):
            raise ValueError("times, features, and segments must agree in length")

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def indices_of(self, label: str) -> list[int]:
        return [i for i, s in enumerate(self.segments) if s == label]


def build_frame_sequence(
    video_id: str,
    start_s: float,
    end_s: float,
    provider: FeatureProvider,
    pad_s: float = 3.0,
    stride_s: float = 2.0,
) -> FrameSequence:
    """Sample, featurize, and segment the full padded window of a clip."""
    times = sample_frame_times(start_s, end_s, pad_s=pad_s, stride_s=stride_s)
    feats = np.stack([provider.get(video_id, t) for t in times]).astype(np.float32)
    return FrameSequence(
        video_id=video_id,
        times=times,
        features=feats,
        segments=segment_labels(len(times)),
    )


@dataclass
class FeatureRows:
    dim: int
    index: list[tuple[str, float]]
    features: np.ndarray  # (n_rows, dim) float32


def write_feature_file(
    path: str | Path,
    dim: int,
    rows: Sequence[tuple[str, float, np.ndarray]],
) -> None:
    with open(path, "wb") as fh:
        fh.write(CAEF_MAGIC)
        fh.write(struct.pack("<II", CAEF_VERSION, dim))
        fh.write(struct.pack("<Q", len(rows)))
        for video_id, time_s, _vec in rows:
            encoded = video_id.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<d", time_s))
        for _vid, _t, vec in rows:
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise ValueError(f"row has shape {arr.shape}, expected ({dim},)")
            fh.write(arr.tobytes())


def read_feature_file(path: str | Path) -> FeatureRows:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CAEF_MAGIC:
            raise ValueError(f"not a CAEF file (magic {magic!r})")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != CAEF_VERSION:
            raise ValueError(f"unsupported CAEF version {version}")
        (n_rows,) = struct.unpack("<Q", fh.read(8))
        index: list[tuple[str, float]] = []
        for _ in range(n_rows):
            (name_len,) = struct.unpack("<I", fh.read(4))
            video_id = fh.read(name_len).decode("utf-8")
            (time_s,) = struct.unpack("<d", fh.read(8))
            index.append((video_id, time_s))
        payload = fh.read(n_rows * dim * 4)
        features = np.frombuffer(payload, dtype="<f4").reshape(n_rows, dim).copy()
    return FeatureRows(dim=dim, index=index, features=features)


def export_features(
    path: str | Path,
    clips: Iterable[tuple[str, float, float]],
    provider: FeatureProvider,
    pad_s: float = 3.0,
    stride_s: float = 2.0,
) -> int:
    """Write the frame features of (video_id, start, end) clips to a CAEF file.

    Rows are deduplicated on (video id, quantized time) and sorted, so the
    output is byte-stable regardless of clip order. Returns the row count.
    """
    seen: dict[tuple[str, float], np.ndarray] = {}
    for video_id, start_s, end_s in clips:
        for t in sample_frame_times(start_s, end_s, pad_s=pad_s, stride_s=stride_s):
            key = (video_id, round(t * 2) / 2)
            if key not in seen:
                seen[key] = provider.get(video_id, t)
    ordered = sorted(seen.items())
    write_feature_file(
        path, provider.dim, [(vid, t, vec) for (vid, t), vec in ordered]
    )
    return len(ordered)
