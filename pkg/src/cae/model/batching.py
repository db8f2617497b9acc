"""Tensor batch assembly for training and inference.

Text is padded to the longest sequence in the batch, video to the longest
frame count. Per-example absolute positions (text index, then text length +
frame index) are computed inside the model, so padding never shifts them.
For effect modeling, every post-condition frame's input row is zeroed and a
candidate set is attached.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np
import torch

from ..corpus import ClipRecord
from ..features import SEGMENT_LABELS
from .candidates import CandidateSet, ClipFrames, mem_candidates
from .config import ModelConfig
from .masking import MaskingPlan, mam_mask, mask_for_inference
from .vocab import Vocab

SEGMENT_TO_ID = {label: i for i, label in enumerate(SEGMENT_LABELS)}


@dataclass
class MemTarget:
    example_index: int
    frame_index: int
    candidates: CandidateSet


@dataclass
class Batch:
    token_ids: torch.Tensor      # (B, T) long
    text_mask: torch.Tensor      # (B, T) bool
    frames: torch.Tensor         # (B, V, F) float32; masked rows zeroed
    video_mask: torch.Tensor     # (B, V) bool
    segment_ids: torch.Tensor    # (B, V) long
    mam_example_idx: torch.Tensor  # (N,) long
    mam_positions: torch.Tensor    # (N,) long
    mam_target_ids: torch.Tensor   # (N,) long
    mem_targets: list[MemTarget] = field(default_factory=list)
    plans: list[MaskingPlan] = field(default_factory=list)
    clip_ids: list[str] = field(default_factory=list)
    verbs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.token_ids.shape[1] > 0 and not bool(self.text_mask.any(dim=1).all()):
            raise ValueError("every example needs at least one real text token")

    @property
    def size(self) -> int:
        return self.token_ids.shape[0]


def _clip_token_ids(clip: ClipRecord, vocab: Vocab, max_text_len: int) -> list[int]:
    surfaces = [t.surface.lower() for t in clip.tokens[:max_text_len]]
    return vocab.encode(surfaces)


def _pad_text(rows: list[list[int]], pad_id: int) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(r) for r in rows)
    ids = torch.full((len(rows), width), pad_id, dtype=torch.long)
    mask = torch.zeros((len(rows), width), dtype=torch.bool)
    for i, row in enumerate(rows):
        ids[i, : len(row)] = torch.tensor(row, dtype=torch.long)
        mask[i, : len(row)] = True
    return ids, mask


def _pad_video(
    items: list[ClipFrames],
    feature_dim: int,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    width = max(len(cf) for cf in items)
    frames = torch.zeros((len(items), width, feature_dim), dtype=torch.float32)
    mask = torch.zeros((len(items), width), dtype=torch.bool)
    segments = torch.zeros((len(items), width), dtype=torch.long)
    for i, cf in enumerate(items):
        n = len(cf)
        frames[i, :n] = torch.from_numpy(np.ascontiguousarray(cf.features))
        mask[i, :n] = True
        segments[i, :n] = torch.tensor(
            [SEGMENT_TO_ID[s] for s in cf.segments], dtype=torch.long
        )
    return frames, mask, segments


def _check_lengths(clip: ClipRecord, cf: ClipFrames, cfg: ModelConfig) -> None:
    if clip.verb_token_index >= cfg.max_text_len:
        raise ValueError(
            f"clip {clip.clip_id}: verb position {clip.verb_token_index} "
            f"beyond max_text_len {cfg.max_text_len}"
        )
    if len(cf) > cfg.max_video_len:
        raise ValueError(
            f"clip {clip.clip_id}: {len(cf)} frames exceed max_video_len "
            f"{cfg.max_video_len}"
        )


def build_mam_batch(
    items: list[tuple[ClipRecord, ClipFrames]],
    vocab: Vocab,
    cfg: ModelConfig,
    rng: random.Random | None = None,
    record_offset: int = 0,
    training: bool = True,
) -> Batch:
    """Action-modeling batch; verb (and strategy-dependent extras) masked.

    With training=False only the verb is masked, always with [MASK].
    """
    token_rows: list[list[int]] = []
    plans: list[MaskingPlan] = []
    for i, (clip, cf) in enumerate(items):
        _check_lengths(clip, cf, cfg)
        ids = _clip_token_ids(clip, vocab, cfg.max_text_len)
        if training:
            if rng is None:
                raise ValueError("training batches need an rng")
            masked, plan = mam_mask(
                ids,
                clip.verb_token_index,
                cfg.masking_strategy,
                rng,
                vocab,
                record_index=record_offset + i,
                mask_prob=cfg.mask_prob,
                replace_dist=cfg.verb_replace_dist,
            )
        else:
            masked, plan = mask_for_inference(ids, clip.verb_token_index, vocab)
        token_rows.append(masked)
        plans.append(plan)

    token_ids, text_mask = _pad_text(token_rows, vocab.pad_id)
    frames, video_mask, segment_ids = _pad_video([cf for _, cf in items], cfg.feature_dim)

    example_idx, positions, target_ids = [], [], []
    for i, plan in enumerate(plans):
        for target in plan.targets:
            example_idx.append(i)
            positions.append(target.position)
            target_ids.append(target.original_id)

    return Batch(
        token_ids=token_ids,
        text_mask=text_mask,
        frames=frames,
        video_mask=video_mask,
        segment_ids=segment_ids,
        mam_example_idx=torch.tensor(example_idx, dtype=torch.long),
        mam_positions=torch.tensor(positions, dtype=torch.long),
        mam_target_ids=torch.tensor(target_ids, dtype=torch.long),
        plans=plans,
        clip_ids=[clip.clip_id for clip, _ in items],
        verbs=[clip.result_verb for clip, _ in items],
    )


def build_mem_batch(
    items: list[tuple[ClipRecord, ClipFrames]],
    pools: dict[str, list[ClipFrames]],
    vocab: Vocab,
    cfg: ModelConfig,
    rng: random.Random,
) -> Batch:
    """Effect-modeling batch: post-condition rows zeroed, candidates attached.

    ``pools`` maps clip id to the candidate source clips for that target
    (the trainer passes same-video clips, the whole shard, or object-sharing
    clips depending on the strategy).
    """
    token_rows: list[list[int]] = []
    for clip, cf in items:
        _check_lengths(clip, cf, cfg)
        token_rows.append(_clip_token_ids(clip, vocab, cfg.max_text_len))
    token_ids, text_mask = _pad_text(token_rows, vocab.pad_id)
    frames, video_mask, segment_ids = _pad_video([cf for _, cf in items], cfg.feature_dim)

    mem_targets: list[MemTarget] = []
    for i, (clip, cf) in enumerate(items):
        sets = mem_candidates(
            cf, pools.get(clip.clip_id, []), cfg.neg_sampling, rng, c_max=cfg.candidate_cap
        )
        for frame_idx, cand in zip(cf.aft_indices(), sets):
            frames[i, frame_idx] = 0.0
            mem_targets.append(MemTarget(i, frame_idx, cand))

    return Batch(
        token_ids=token_ids,
        text_mask=text_mask,
        frames=frames,
        video_mask=video_mask,
        segment_ids=segment_ids,
        mam_example_idx=torch.zeros(0, dtype=torch.long),
        mam_positions=torch.zeros(0, dtype=torch.long),
        mam_target_ids=torch.zeros(0, dtype=torch.long),
        mem_targets=mem_targets,
        clip_ids=[clip.clip_id for clip, _ in items],
        verbs=[clip.result_verb for clip, _ in items],
    )


def build_joint_batch(
    items: list[tuple[ClipRecord, ClipFrames]],
    pools: dict[str, list[ClipFrames]],
    vocab: Vocab,
    cfg: ModelConfig,
    rng: random.Random,
) -> Batch:
    """Batch carrying both action and effect targets (gradient checking)."""
    batch = build_mem_batch(items, pools, vocab, cfg, rng)
    example_idx, positions, target_ids, plans = [], [], [], []
    for i, (clip, _cf) in enumerate(items):
        ids = batch.token_ids[i].tolist()
        masked, plan = mask_for_inference(ids, clip.verb_token_index, vocab)
        batch.token_ids[i] = torch.tensor(masked, dtype=torch.long)
        plans.append(plan)
        for target in plan.targets:
            example_idx.append(i)
            positions.append(target.position)
            target_ids.append(target.original_id)
    batch.mam_example_idx = torch.tensor(example_idx, dtype=torch.long)
    batch.mam_positions = torch.tensor(positions, dtype=torch.long)
    batch.mam_target_ids = torch.tensor(target_ids, dtype=torch.long)
    batch.plans = plans
    return batch
