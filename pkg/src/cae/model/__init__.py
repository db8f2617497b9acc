"""Hierarchical cross-modal encoder with masked action/effect training."""

from .config import ModelConfig
from .vocab import Vocab, tokenize_text, PAD_TOKEN, UNK_TOKEN, MASK_TOKEN
from .network import CaeModel, ModelState, ModelOutput, new_state
from .masking import MaskTarget, MaskingPlan, mam_mask, mask_for_inference
from .candidates import ClipFrames, CandidateSet, FrameRef, clip_frames, mem_candidates
from .batching import Batch, MemTarget, build_mam_batch, build_mem_batch, build_joint_batch
from .losses import (
    nce_probability,
    mam_loss,
    mem_loss,
    mam_predict,
    mem_predict,
)
from .optim import AdamW, warmup_lr
from .checkpoint import save_checkpoint, load_checkpoint
from .scorer import MamCandidateScorer
from .gradcheck import grad_check
from .training import Trainer, TrainingDiverged, train_step, LossRecord

__all__ = [
    "ModelConfig", "Vocab", "tokenize_text", "PAD_TOKEN", "UNK_TOKEN", "MASK_TOKEN",
    "CaeModel", "ModelState", "ModelOutput", "new_state",
    "MaskTarget", "MaskingPlan", "mam_mask", "mask_for_inference",
    "ClipFrames", "CandidateSet", "FrameRef", "clip_frames", "mem_candidates",
    "Batch", "MemTarget", "build_mam_batch", "build_mem_batch", "build_joint_batch",
    "nce_probability", "mam_loss", "mem_loss", "mam_predict", "mem_predict",
    "AdamW", "warmup_lr", "save_checkpoint", "load_checkpoint", "grad_check",
    "MamCandidateScorer",
    "Trainer", "TrainingDiverged", "train_step", "LossRecord",
]
