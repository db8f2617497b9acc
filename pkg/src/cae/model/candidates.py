"""Candidate-set construction for the effect-reconstruction task.

Each masked post-condition frame is scored against a candidate set holding
the true frame plus sampled negatives. Negatives come from the target clip's
own pre-condition/action frames and, depending on the strategy, from other
clips: anywhere in the pool (randomized), the same video id (video_based), or
clips sharing an annotated object (object_based). Post-condition frames of
the target clip itself are never negatives, and overlapping sibling clips are
deduplicated on (video id, quantized time) so the positive appears exactly
once.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ..corpus import ClipRecord
from ..features import AFT, FeatureProvider, build_frame_sequence


@dataclass(frozen=True)
class FrameRef:
    video_id: str
    time_s: float
    segment: str
    clip_id: str

    @property
    def key(self) -> tuple[str, float]:
        return (self.video_id, round(self.time_s * 2) / 2)


@dataclass
class ClipFrames:
    """One clip's sampled frames plus the identity needed for sampling."""

    clip_id: str
    video_id: str
    objects: frozenset[str]
    times: list[float]
    segments: list[str]
    features: np.ndarray  # (n, feature_dim) float32

    def __len__(self) -> int:
        return len(self.times)

    def ref(self, i: int) -> FrameRef:
        return FrameRef(self.video_id, self.times[i], self.segments[i], self.clip_id)

    def aft_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.segments) if s == AFT]


def clip_frames(
    clip: ClipRecord,
    provider: FeatureProvider,
    pad_s: float = 3.0,
    stride_s: float = 2.0,
) -> ClipFrames:
    seq = build_frame_sequence(
        clip.video_id, clip.start_s, clip.end_s, provider, pad_s=pad_s, stride_s=stride_s
    )
    return ClipFrames(
        clip_id=clip.clip_id,
        video_id=clip.video_id,
        objects=frozenset(clip.objects),
        times=seq.times,
        segments=seq.segments,
        features=seq.features,
    )


@dataclass
class CandidateSet:
    """The true post-condition frame plus its negatives, provenance-tagged."""

    features: np.ndarray  # (k, feature_dim) float32
    positive_index: int
    refs: list[FrameRef]

    def __len__(self) -> int:
        return len(self.refs)


def _strategy_pool(
    target: ClipFrames,
    pool: list[ClipFrames],
    strategy: str,
) -> list[ClipFrames]:
    if strategy == "randomized":
        return [c for c in pool if c.clip_id != target.clip_id]
    if strategy == "video_based":
        return [c for c in pool if c.video_id == target.video_id and c.clip_id != target.clip_id]
    if strategy == "object_based":
        return [
            c for c in pool
            if c.clip_id != target.clip_id and (c.objects & target.objects)
        ]
    raise ValueError(f"unknown negative-sampling strategy {strategy!r}")


def mem_candidates(
    target: ClipFrames,
    pool: list[ClipFrames],
    strategy: str,
    rng: random.Random,
    c_max: int = 64,
) -> list[CandidateSet]:
    """One candidate set per post-condition frame of the target clip.

    Raises ValueError when a frame would end up with zero negatives.
    Candidates are sorted by provenance, so sets are reproducible for a given
    seed even when the eligible pool exceeds ``c_max`` and gets subsampled.
    """
    aft = target.aft_indices()
    if not aft:
        raise ValueError(f"clip {target.clip_id} has no post-condition frames")
    excluded_keys = {target.ref(i).key for i in aft}

    eligible: dict[tuple[str, float], tuple[FrameRef, np.ndarray]] = {}
    for i, segment in enumerate(target.segments):
        if segment != AFT:
            ref = target.ref(i)
            eligible[ref.key] = (ref, target.features[i])
    for clip in _strategy_pool(target, pool, strategy):
        for i in range(len(clip)):
            ref = clip.ref(i)
            if ref.key in excluded_keys or ref.key in eligible:
                continue
            eligible[ref.key] = (ref, clip.features[i])

    sets: list[CandidateSet] = []
    for frame_idx in aft:
        negatives = sorted(eligible.values(), key=lambda rv: (rv[0].video_id, rv[0].time_s))
        if not negatives:
            raise ValueError(
                f"degenerate candidate set: no negatives for frame {frame_idx} "
                f"of clip {target.clip_id} under strategy {strategy!r}"
            )
        if len(negatives) > c_max:
            negatives = sorted(
                rng.sample(negatives, c_max), key=lambda rv: (rv[0].video_id, rv[0].time_s)
            )
        positive_ref = target.ref(frame_idx)
        entries = negatives + [(positive_ref, target.features[frame_idx])]
        entries.sort(key=lambda rv: (rv[0].video_id, rv[0].time_s, rv[0].clip_id))
        refs = [ref for ref, _ in entries]
        sets.append(
            CandidateSet(
                features=np.stack([vec for _, vec in entries]).astype(np.float32),
                positive_index=refs.index(positive_ref),
                refs=refs,
            )
        )
    return sets
