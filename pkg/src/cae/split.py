"""Generalized zero-shot splitting of verb classes and clips.

Verbs are assigned seen/unseen within their (canonical) frame with a seeded
80/20 draw; clips of seen verbs follow 80/10/10 train/val/test, clips of
unseen verbs 0/50/50. Every shuffle is seeded per frame or per lemma so that
adding a verb never perturbs the other verbs' assignments.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from .corpus import ClipRecord
from .ioutil import stable_seed

log = logging.getLogger(__name__)

SEEN = "seen"
UNSEEN = "unseen"
SPLITS = ("train", "val", "test")


@dataclass
class SplitConfig:
    seed: int = 42
    seen_fraction_per_frame: float = 0.8
    seen_clip_ratio: tuple[float, float, float] = (0.8, 0.1, 0.1)
    unseen_clip_ratio: tuple[float, float, float] = (0.0, 0.5, 0.5)
    excluded_seen_lemmas: set[str] = field(default_factory=set)

    def __post_init__(self):
        for name, ratio in (("seen_clip_ratio", self.seen_clip_ratio),
                            ("unseen_clip_ratio", self.unseen_clip_ratio)):
            if abs(sum(ratio) - 1.0) > 1e-9:
                raise ValueError(f"{name} must sum to 1, got {ratio}")
        if not (0.0 <= self.seen_fraction_per_frame <= 1.0):
            raise ValueError("seen_fraction_per_frame must lie in [0, 1]")


@dataclass
class SplitManifest:
    verb_class: dict[str, str]
    clip_assignment: dict[str, str]
    stats: dict

    def clips_in(self, split: str) -> set[str]:
        return {cid for cid, s in self.clip_assignment.items() if s == split}


def assign_verb_classes(
    frame_index: dict[str, set[str] | list[str]],
    cfg: SplitConfig,
) -> dict[str, str]:
    """Assign each lemma to seen/unseen within its canonical frame.

    A lemma under several frames is drawn once, under its lexicographically
    smallest frame. Per frame, ceil(seen_fraction * n) lemmas become seen via
    a seeded shuffle; lemmas on the exclusion list (Kinetics overlap) are
    forced unseen afterwards.
    """
    canonical: dict[str, str] = {}
    for frame in sorted(frame_index):
        for lemma in frame_index[frame]:
            if lemma not in canonical or frame < canonical[lemma]:
                canonical[lemma] = frame

    groups: dict[str, list[str]] = {}
    for lemma, frame in canonical.items():
        groups.setdefault(frame, []).append(lemma)

    assignment: dict[str, str] = {}
    for frame in sorted(groups):
        lemmas = sorted(groups[frame])
        rng = random.Random(stable_seed(cfg.seed, "frame", frame))
        rng.shuffle(lemmas)
        n_seen = math.ceil(cfg.seen_fraction_per_frame * len(lemmas))
        for i, lemma in enumerate(lemmas):
            assignment[lemma] = SEEN if i < n_seen else UNSEEN

    for lemma in cfg.excluded_seen_lemmas:
        if assignment.get(lemma) == SEEN:
            assignment[lemma] = UNSEEN
    return assignment


def _partition_counts(n: int, train_fraction: float) -> int:
    return math.floor(train_fraction * n)


def _assign_for_verb(
    clips: list[ClipRecord],
    verb_class: str,
    cfg: SplitConfig,
    lemma: str,
) -> dict[str, str]:
    """Split one verb's clips; remainder alternates val/test, stratified by category."""
    ordered = sorted(clips, key=lambda c: c.clip_id)
    rng = random.Random(stable_seed(cfg.seed, "clips", lemma))
    rng.shuffle(ordered)

    train_fraction = cfg.seen_clip_ratio[0] if verb_class == SEEN else cfg.unseen_clip_ratio[0]
    n_train = _partition_counts(len(ordered), train_fraction)
    result = {clip.clip_id: "train" for clip in ordered[:n_train]}

    remainder = ordered[n_train:]
    by_category: dict[str, list[ClipRecord]] = {}
    for clip in remainder:
        by_category.setdefault(clip.category, []).append(clip)
    take_val = True
    for category in sorted(by_category):
        for clip in by_category[category]:
            result[clip.clip_id] = "val" if take_val else "test"
            take_val = not take_val
    return result


def _zero_shot_stats(
    clips_by_id: dict[str, ClipRecord],
    assignment: dict[str, str],
) -> dict:
    train_videos: set[str] = set()
    train_verbs: set[str] = set()
    train_objects: set[str] = set()
    for cid, split in assignment.items():
        if split != "train":
            continue
        clip = clips_by_id[cid]
        train_videos.add(clip.video_id)
        train_verbs.add(clip.result_verb)
        train_objects.update(clip.objects)

    stats: dict = {"n_clips": {s: 0 for s in SPLITS}}
    for split in ("val", "test"):
        zero_video = zero_action = zero_object = 0
        total = 0
        for cid, s in assignment.items():
            if s != split:
                continue
            clip = clips_by_id[cid]
            total += 1
            if clip.video_id not in train_videos:
                zero_video += 1
            if clip.result_verb not in train_verbs:
                zero_action += 1
            if clip.objects and not (clip.objects & train_objects):
                zero_object += 1
        denom = max(total, 1)
        stats[f"pct_zero_shot_{split}"] = {
            "videos": round(100.0 * zero_video / denom, 4),
            "actions": round(100.0 * zero_action / denom, 4),
            "objects": round(100.0 * zero_object / denom, 4),
        }
    for split in assignment.values():
        stats["n_clips"][split] += 1
    total = sum(stats["n_clips"].values())
    stats["global_ratio"] = {
        s: round(stats["n_clips"][s] / max(total, 1), 4) for s in SPLITS
    }
    return stats


def assign_clip_splits(
    clips: list[ClipRecord],
    verb_class: dict[str, str],
    cfg: SplitConfig,
) -> SplitManifest:
    """Assign every clip to train/val/test according to its verb's class.

    Raises ValueError listing offenders when a clip's verb has no class.
    Seen-verb clips follow the seen ratio (floor of the train share, rest
    alternating val/test); unseen-verb clips never enter train.
    """
    missing = sorted({c.result_verb for c in clips if c.result_verb not in verb_class})
    if missing:
        raise ValueError(f"clips reference verbs without a class: {missing}")

    by_verb: dict[str, list[ClipRecord]] = {}
    for clip in clips:
        by_verb.setdefault(clip.result_verb, []).append(clip)

    assignment: dict[str, str] = {}
    for lemma in sorted(by_verb):
        assignment.update(_assign_for_verb(by_verb[lemma], verb_class[lemma], cfg, lemma))

    clips_by_id = {c.clip_id: c for c in clips}
    for cid, split in assignment.items():
        if split == "train" and verb_class[clips_by_id[cid].result_verb] == UNSEEN:
            raise AssertionError(f"unseen-verb clip {cid} assigned to train")

    stats = _zero_shot_stats(clips_by_id, assignment)
    return SplitManifest(verb_class=dict(verb_class), clip_assignment=assignment, stats=stats)


def write_manifest(path: str | Path, manifest: SplitManifest) -> None:
    """One JSON line per clip (sorted by id), then verb classes, then stats."""
    with open(path, "w", encoding="utf-8") as fh:
        for cid in sorted(manifest.clip_assignment):
            fh.write(json.dumps(
                {"clip_id": cid, "split": manifest.clip_assignment[cid]},
                sort_keys=True, separators=(",", ":")))
            fh.write("\n")
        fh.write(json.dumps({"verb_class": dict(sorted(manifest.verb_class.items()))},
                            sort_keys=True, separators=(",", ":")))
        fh.write("\n")
        fh.write(json.dumps({"stats": manifest.stats}, sort_keys=True, separators=(",", ":")))
        fh.write("\n")


def read_manifest(path: str | Path) -> SplitManifest:
    clip_assignment: dict[str, str] = {}
    verb_class: dict[str, str] = {}
    stats: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "clip_id" in rec:
                clip_assignment[rec["clip_id"]] = rec["split"]
            elif "verb_class" in rec:
                verb_class = rec["verb_class"]
            elif "stats" in rec:
                stats = rec["stats"]
    return SplitManifest(verb_class=verb_class, clip_assignment=clip_assignment, stats=stats)
