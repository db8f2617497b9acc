"""Masking plans for the action-reconstruction task.

Three training strategies are supported:

* verb_only          only the result verb is targeted,
* verb_random_joint  the verb plus every other token independently at the
                     configured probability,
* verb_random_alter  even-indexed records target the verb only, odd-indexed
                     ones target random tokens only.

Every targeted position is replaced by [MASK] / a random regular token / the
original token under the configured 80/15/5 distribution. Inference always
replaces exactly the verb with [MASK].
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .vocab import Vocab

REPLACE_MASK = "mask"
REPLACE_RANDOM = "random"
REPLACE_KEEP = "keep"


@dataclass
class MaskTarget:
    position: int
    original_id: int
    kind: str
    replacement_id: int


@dataclass
class MaskingPlan:
    strategy: str
    targets: list[MaskTarget] = field(default_factory=list)

    def apply(self, token_ids: Sequence[int]) -> list[int]:
        out = list(token_ids)
        for target in self.targets:
            out[target.position] = target.replacement_id
        return out

    @property
    def positions(self) -> list[int]:
        return [t.position for t in self.targets]

    @property
    def original_ids(self) -> list[int]:
        return [t.original_id for t in self.targets]


def _draw_replacement(
    position: int,
    original_id: int,
    rng: random.Random,
    vocab: Vocab,
    replace_dist: tuple[float, float, float],
) -> MaskTarget:
    p_mask, p_random, _p_keep = replace_dist
    roll = rng.random()
    if roll < p_mask:
        return MaskTarget(position, original_id, REPLACE_MASK, vocab.mask_id)
    if roll < p_mask + p_random:
        return MaskTarget(position, original_id, REPLACE_RANDOM, vocab.random_regular_id(rng))
    return MaskTarget(position, original_id, REPLACE_KEEP, original_id)


def mam_mask(
    token_ids: Sequence[int],
    verb_index: int,
    strategy: str,
    rng: random.Random,
    vocab: Vocab,
    record_index: int = 0,
    mask_prob: float = 0.15,
    replace_dist: tuple[float, float, float] = (0.80, 0.15, 0.05),
) -> tuple[list[int], MaskingPlan]:
    """Build and apply a masking plan; returns (masked ids, plan)."""
    if not (0 <= verb_index < len(token_ids)):
        raise ValueError(f"verb_index {verb_index} outside sequence of {len(token_ids)}")

    positions: list[int] = []
    if strategy == "verb_only":
        positions = [verb_index]
    elif strategy == "verb_random_joint":
        for i in range(len(token_ids)):
            if i == verb_index:
                positions.append(i)
            elif rng.random() < mask_prob:
                positions.append(i)
    elif strategy == "verb_random_alter":
        if record_index % 2 == 0:
            positions = [verb_index]
        else:
            positions = [
                i for i in range(len(token_ids))
                if i != verb_index and rng.random() < mask_prob
            ]
            if not positions:
                # degenerate draw; force one non-verb target so the record
                # still contributes a loss term
                pool = [i for i in range(len(token_ids)) if i != verb_index]
                positions = [rng.choice(pool)] if pool else [verb_index]
    else:
        raise ValueError(f"unknown masking strategy {strategy!r}")

    plan = MaskingPlan(strategy=strategy)
    for position in positions:
        plan.targets.append(
            _draw_replacement(position, token_ids[position], rng, vocab, replace_dist)
        )
    return plan.apply(token_ids), plan


def mask_for_inference(
    token_ids: Sequence[int],
    verb_index: int,
    vocab: Vocab,
) -> tuple[list[int], MaskingPlan]:
    """Inference-time plan: exactly the verb position, always [MASK]."""
    if not (0 <= verb_index < len(token_ids)):
        raise ValueError(f"verb_index {verb_index} outside sequence of {len(token_ids)}")
    plan = MaskingPlan(
        strategy="inference",
        targets=[MaskTarget(verb_index, token_ids[verb_index], REPLACE_MASK, vocab.mask_id)],
    )
    return plan.apply(token_ids), plan
