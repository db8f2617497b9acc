"""Video-pool filtering and clip extraction from annotated subtitle streams.

Linguistic annotations (lemma, universal PoS, dependency label) arrive with
the records; nothing is parsed here. A subtitle becomes a clip when it
contains exactly one result-verb occurrence, survives the per-video adjacency
rule, and gets its object nouns annotated from dobj/pobj dependents with high
concreteness.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .ioutil import read_jsonl

log = logging.getLogger(__name__)

OBJECT_DEP_LABELS = frozenset({"dobj", "pobj"})
CONCRETENESS_THRESHOLD = 4.0


@dataclass
class Token:
    surface: str
    lemma: str
    upos: str
    dep_label: str

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "lemma": self.lemma,
            "upos": self.upos,
            "dep_label": self.dep_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Token":
        return cls(str(d["surface"]), str(d["lemma"]), str(d["upos"]), str(d["dep_label"]))


@dataclass
class SubtitleRecord:
    video_id: str
    category: str
    start_s: float
    end_s: float
    tokens: list[Token]
    text: str = ""
    task_id: str = ""
    view_count: int = 0

    def __post_init__(self):
        if self.start_s < 0:
            raise ValueError(f"start_s must be >= 0, got {self.start_s}")
        if self.end_s <= self.start_s:
            raise ValueError(f"end_s must exceed start_s ({self.start_s}, {self.end_s})")

    @classmethod
    def from_dict(cls, d: dict) -> "SubtitleRecord":
        return cls(
            video_id=str(d["video_id"]),
            category=str(d["category"]),
            start_s=float(d["start_s"]),
            end_s=float(d["end_s"]),
            tokens=[Token.from_dict(t) for t in d["tokens"]],
            text=str(d.get("text", "")),
            task_id=str(d.get("task_id", "")),
            view_count=int(d.get("view_count", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "category": self.category,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "text": self.text,
            "task_id": self.task_id,
            "view_count": self.view_count,
            "tokens": [t.to_dict() for t in self.tokens],
        }


@dataclass
class ClipRecord:
    video_id: str
    category: str
    start_s: float
    end_s: float
    result_verb: str
    verb_token_index: int
    objects: set[str]
    tokens: list[Token]

    @property
    def clip_id(self) -> str:
        return f"{self.video_id}:{self.start_s:.3f}"

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "category": self.category,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "result_verb": self.result_verb,
            "verb_token_index": self.verb_token_index,
            "objects": sorted(self.objects),
            "tokens": [t.to_dict() for t in self.tokens],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipRecord":
        return cls(
            video_id=str(d["video_id"]),
            category=str(d["category"]),
            start_s=float(d["start_s"]),
            end_s=float(d["end_s"]),
            result_verb=str(d["result_verb"]),
            verb_token_index=int(d["verb_token_index"]),
            objects=set(d["objects"]),
            tokens=[Token.from_dict(t) for t in d["tokens"]],
        )


def _effective_verbs(result_verbs: Iterable[str]) -> set[str]:
    # Phrasal lemmas (underscore-joined) are never matched against subtitles.
    return {v for v in result_verbs if "_" not in v}


def _verb_occurrences(record: SubtitleRecord, verbs: set[str]) -> list[int]:
    return [
        i
        for i, tok in enumerate(record.tokens)
        if tok.upos == "VERB" and tok.lemma in verbs
    ]


def filter_video_pool(
    records: Iterable[SubtitleRecord],
    result_verbs: set[str],
    min_verb_types: int = 15,
    min_clips_per_verb: int = 100,
    top_k_per_task: int = 15,
) -> set[str]:
    """Down-sample the video pool by result-verb density and view count.

    A category is kept when strictly more than ``min_verb_types`` result-verb
    types occur in it with strictly more than ``min_clips_per_verb`` records
    each. Within every wikiHow task id of a kept category, only the
    ``top_k_per_task`` most-viewed videos survive (ties broken by video id).
    """
    verbs = _effective_verbs(result_verbs)
    verb_counts: dict[str, dict[str, int]] = {}
    video_meta: dict[str, tuple[str, str, int]] = {}
    for rec in records:
        if rec.video_id not in video_meta:
            video_meta[rec.video_id] = (rec.category, rec.task_id, rec.view_count)
        per_cat = verb_counts.setdefault(rec.category, {})
        for lemma in {rec.tokens[i].lemma for i in _verb_occurrences(rec, verbs)}:
            per_cat[lemma] = per_cat.get(lemma, 0) + 1

    dense_categories = {
        cat
        for cat, counts in verb_counts.items()
        if sum(1 for n in counts.values() if n > min_clips_per_verb) > min_verb_types
    }

    by_task: dict[tuple[str, str], list[tuple[int, str]]] = {}
    for video_id, (category, task_id, view_count) in video_meta.items():
        if category not in dense_categories:
            continue
        by_task.setdefault((category, task_id), []).append((view_count, video_id))

    kept: set[str] = set()
    for (_cat, _task), videos in by_task.items():
        videos.sort(key=lambda v: (-v[0], v[1]))
        kept.update(video_id for _, video_id in videos[:top_k_per_task])
    return kept


def annotate_objects(record: SubtitleRecord, concreteness: dict[str, float]) -> set[str]:
    """Nouns under dobj/pobj whose concreteness rating exceeds the threshold."""
    objects: set[str] = set()
    for tok in record.tokens:
        if tok.upos != "NOUN" or tok.dep_label not in OBJECT_DEP_LABELS:
            continue
        if concreteness.get(tok.lemma, 0.0) > CONCRETENESS_THRESHOLD:
            objects.add(tok.lemma)
    return objects


def extract_cae_clips(
    records: Iterable[SubtitleRecord],
    result_verbs: set[str],
    concreteness: dict[str, float],
    min_gap_s: float = 5.0,
) -> Iterator[ClipRecord]:
    """Stream clip records out of a per-video time-ordered subtitle stream.

    A record is accepted iff exactly one result-verb token occurs in it. Of
    two accepted clips of the same video whose start times differ by less
    than ``min_gap_s``, the earlier wins (greedy scan). Malformed records are
    logged and skipped without stopping the stream.
    """
    verbs = _effective_verbs(result_verbs)
    last_start: dict[str, float] = {}
    for rec in records:
        try:
            occurrences = _verb_occurrences(rec, verbs)
            if len(occurrences) != 1:
                continue
            prev = last_start.get(rec.video_id)
            if prev is not None and rec.start_s - prev < min_gap_s:
                continue
            verb_index = occurrences[0]
            clip = ClipRecord(
                video_id=rec.video_id,
                category=rec.category,
                start_s=rec.start_s,
                end_s=rec.end_s,
                result_verb=rec.tokens[verb_index].lemma,
                verb_token_index=verb_index,
                objects=annotate_objects(rec, concreteness),
                tokens=list(rec.tokens),
            )
        except (KeyError, TypeError, ValueError, AttributeError, IndexError) as exc:
            log.warning("rejecting malformed record in video %r: %s",
                        getattr(rec, "video_id", "?"), exc)
            continue
        last_start[rec.video_id] = rec.start_s
        yield clip


@dataclass
class CategoryStats:
    n_videos: int
    n_clips: int
    top_verbs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"n_videos": self.n_videos, "n_clips": self.n_clips,
                "top_verbs": list(self.top_verbs)}


def corpus_stats(clips: Iterable[ClipRecord], top_n: int = 5) -> dict[str, CategoryStats]:
    """Per-category video/clip counts plus the top verbs by clip count."""
    videos: dict[str, set[str]] = {}
    verb_counts: dict[str, dict[str, int]] = {}
    clip_counts: dict[str, int] = {}
    for clip in clips:
        videos.setdefault(clip.category, set()).add(clip.video_id)
        clip_counts[clip.category] = clip_counts.get(clip.category, 0) + 1
        per_cat = verb_counts.setdefault(clip.category, {})
        per_cat[clip.result_verb] = per_cat.get(clip.result_verb, 0) + 1

    stats: dict[str, CategoryStats] = {}
    for category in clip_counts:
        ranked = sorted(verb_counts[category].items(), key=lambda kv: (-kv[1], kv[0]))
        stats[category] = CategoryStats(
            n_videos=len(videos[category]),
            n_clips=clip_counts[category],
            top_verbs=[verb for verb, _ in ranked[:top_n]],
        )
    return stats


def read_subtitles(path: str | Path) -> Iterator[SubtitleRecord]:
    for lineno, rec in read_jsonl(path):
        try:
            yield SubtitleRecord.from_dict(rec)
        except (KeyError, TypeError, ValueError) as exc:
            log.warning("skipping malformed subtitle record at line %d: %s", lineno, exc)


def read_clips(path: str | Path) -> list[ClipRecord]:
    return [ClipRecord.from_dict(rec) for _, rec in read_jsonl(path)]


def write_clips(path: str | Path, clips: Iterable[ClipRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for clip in clips:
            fh.write(json.dumps(clip.to_dict(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
