"""Finite-difference verification of both losses' parameter gradients."""

from __future__ import annotations

import copy

import torch

from .batching import Batch
from .losses import mam_loss, mem_loss
from .network import CaeModel, ModelState


def _forward_losses(model: CaeModel, batch: Batch, tau: float) -> tuple[torch.Tensor, torch.Tensor]:
    output = model(
        batch.token_ids, batch.text_mask, batch.frames, batch.video_mask, batch.segment_ids
    )
    return mam_loss(output, batch, model), mem_loss(output, batch, model, tau)


def grad_check(state: ModelState, batch: Batch, epsilon: float = 1e-5) -> float:
    """Max relative error of analytic vs central-difference gradients.

    The model is copied to float64 before checking; the batch must carry both
    action targets and effect targets. Every parameter element is perturbed,
    so this is only meant for tiny configurations. Relative error uses an
    absolute floor of 1e-3 in the denominator, the usual guard against
    meaningless ratios of near-zero gradients.
    """
    model = copy.deepcopy(state.model).double()
    batch = Batch(
        token_ids=batch.token_ids,
        text_mask=batch.text_mask,
        frames=batch.frames.double(),
        video_mask=batch.video_mask,
        segment_ids=batch.segment_ids,
        mam_example_idx=batch.mam_example_idx,
        mam_positions=batch.mam_positions,
        mam_target_ids=batch.mam_target_ids,
        mem_targets=batch.mem_targets,
        plans=batch.plans,
        clip_ids=batch.clip_ids,
        verbs=batch.verbs,
    )
    tau = state.config.nce_temperature
    params = sorted(model.named_parameters(), key=lambda kv: kv[0])

    analytic: dict[str, list[torch.Tensor]] = {}
    for loss_index in (0, 1):
        model.zero_grad(set_to_none=True)
        loss = _forward_losses(model, batch, tau)[loss_index]
        loss.backward()
        for name, p in params:
            grad = torch.zeros_like(p) if p.grad is None else p.grad.detach().clone()
            pair = analytic.setdefault(name, [torch.zeros_like(p)] * 2)
            pair[loss_index] = grad
    model.zero_grad(set_to_none=True)

    max_rel_err = 0.0
    with torch.no_grad():
        for name, p in params:
            flat = p.view(-1)
            grads_mam = analytic[name][0].view(-1)
            grads_mem = analytic[name][1].view(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + epsilon
                up_mam, up_mem = (x.item() for x in _forward_losses(model, batch, tau))
                flat[i] = original - epsilon
                dn_mam, dn_mem = (x.item() for x in _forward_losses(model, batch, tau))
                flat[i] = original
                for a, up, dn in (
                    (grads_mam[i].item(), up_mam, dn_mam),
                    (grads_mem[i].item(), up_mem, dn_mem),
                ):
                    numeric = (up - dn) / (2.0 * epsilon)
                    rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-3)
                    max_rel_err = max(max_rel_err, rel)
    return max_rel_err
