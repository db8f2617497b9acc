"""Both training losses and their inference-time argmax predictions."""

from __future__ import annotations

import torch

from .batching import Batch
from .network import CaeModel, ModelOutput


def nce_probability(
    query: torch.Tensor,
    candidate_features: torch.Tensor,
    tau: float,
) -> torch.Tensor:
    """Softmax over temperature-scaled dot products, shape (k,).

    ``query`` is the projected contextualized embedding, ``candidate_features``
    the (k, feature_dim) candidate matrix. Log-sum-exp stabilization happens
    inside torch.softmax.
    """
    if tau <= 0:
        raise ValueError(f"temperature must be positive: {tau}")
    scores = candidate_features @ query / tau
    return torch.softmax(scores, dim=-1)


def _argmax_lowest_index(scores: torch.Tensor) -> int:
    """Index of the maximum; exact ties resolve to the lowest index."""
    max_val = scores.max()
    return int((scores == max_val).nonzero()[0].item())


def mam_loss(output: ModelOutput, batch: Batch, model: CaeModel) -> torch.Tensor:
    """Mean cross-entropy of the original ids at the targeted text positions."""
    if batch.mam_positions.numel() == 0:
        raise ValueError("mam_loss needs at least one targeted position")
    logits = model.mam_logits(output.text_local, batch.mam_example_idx, batch.mam_positions)
    log_probs = torch.log_softmax(logits, dim=-1)
    picked = log_probs[torch.arange(logits.shape[0]), batch.mam_target_ids]
    return -picked.mean()


def mem_loss(output: ModelOutput, batch: Batch, model: CaeModel, tau: float) -> torch.Tensor:
    """Mean NCE-softmax loss of the positive over each masked frame's candidates."""
    if not batch.mem_targets:
        raise ValueError("mem_loss needs at least one masked post-condition frame")
    terms = []
    for target in batch.mem_targets:
        query = model.mem_query(output.video_final, target.example_index, target.frame_index)
        cand = torch.from_numpy(target.candidates.features).to(query.dtype)
        scores = cand @ query / tau
        log_probs = torch.log_softmax(scores, dim=-1)
        terms.append(-log_probs[target.candidates.positive_index])
    return torch.stack(terms).mean()


def mam_predict(output: ModelOutput, batch: Batch, model: CaeModel) -> list[int]:
    """Predicted token id per masked verb (tie -> lowest id).

    Assumes inference masking, i.e. exactly one target per example; callers
    decode the ids with their vocabulary.
    """
    if batch.mam_positions.numel() == 0:
        raise ValueError("no masked position to predict")
    logits = model.mam_logits(output.text_local, batch.mam_example_idx, batch.mam_positions)
    return [_argmax_lowest_index(row.detach()) for row in logits]


def mem_predict(output: ModelOutput, batch: Batch, model: CaeModel) -> list[int]:
    """Chosen candidate index per masked frame (raw dot products, tie -> lowest)."""
    if not batch.mem_targets:
        raise ValueError("no masked frames to predict")
    choices = []
    for target in batch.mem_targets:
        if len(target.candidates) == 0:
            raise ValueError("empty candidate set")
        query = model.mem_query(output.video_final, target.example_index, target.frame_index)
        cand = torch.from_numpy(target.candidates.features).to(query.dtype)
        scores = cand @ query
        choices.append(_argmax_lowest_index(scores.detach()))
    return choices
