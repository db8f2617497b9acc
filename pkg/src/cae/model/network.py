"""Hierarchical encoder: input embedder, cross-modal and temporal transformers.

Layout follows the hierarchical video-language design: token/position/segment
embeddings with per-modality layer norm, a cross-modal transformer over the
concatenated text+video sequence, and a temporal transformer over the video
positions whose output is added back residually. Blocks are pre-norm, so a
block with zeroed output projections is an exact identity.

Modality ablation is realized purely through the attention mask: with any
ablation, text and video positions cannot attend to each other, which makes
text outputs bit-exact functions of text inputs alone (and symmetrically for
video).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn

from .config import ModelConfig
from .vocab import Vocab


class MultiHeadSelfAttention(nn.Module):
    def __init__(self, hidden_dim: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = hidden_dim // n_heads
        self.q_proj = nn.Linear(hidden_dim, hidden_dim)
        self.k_proj = nn.Linear(hidden_dim, hidden_dim)
        self.v_proj = nn.Linear(hidden_dim, hidden_dim)
        self.out_proj = nn.Linear(hidden_dim, hidden_dim)

    def forward(self, x: torch.Tensor, allowed: torch.Tensor) -> torch.Tensor:
        # x: (B, L, H); allowed: (B, L, L) boolean, True where query may attend key.
        b, length, hidden = x.shape
        def split(t):
            return t.view(b, length, self.n_heads, self.head_dim).transpose(1, 2)
        q, k, v = split(self.q_proj(x)), split(self.k_proj(x)), split(self.v_proj(x))
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        # masked_fill (not an additive bias) so disallowed keys contribute an
        # exact zero weight no matter how extreme their activations are.
        scores = scores.masked_fill(~allowed.unsqueeze(1), float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        ctx = (weights @ v).transpose(1, 2).reshape(b, length, hidden)
        return self.out_proj(ctx)


class TransformerBlock(nn.Module):
    """Pre-norm residual block: x + attn(LN(x)), then x + mlp(LN(x))."""

    def __init__(self, hidden_dim: int, n_heads: int):
        super().__init__()
        self.ln_attn = nn.LayerNorm(hidden_dim)
        self.attn = MultiHeadSelfAttention(hidden_dim, n_heads)
        self.ln_mlp = nn.LayerNorm(hidden_dim)
        self.fc_in = nn.Linear(hidden_dim, 4 * hidden_dim)
        self.fc_out = nn.Linear(4 * hidden_dim, hidden_dim)

    def forward(self, x: torch.Tensor, allowed: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln_attn(x), allowed)
        x = x + self.fc_out(torch.nn.functional.gelu(self.fc_in(self.ln_mlp(x))))
        return x


class CrossModalEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.blocks = nn.ModuleList(
            TransformerBlock(cfg.hidden_dim, cfg.n_heads) for _ in range(cfg.n_cross_layers)
        )

    def forward(self, x: torch.Tensor, allowed: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            x = block(x, allowed)
        return x


class TemporalEncoder(nn.Module):
    """Video-only transformer with a final layer norm; adds no position info
    of its own, so it stays permutation-equivariant when the embedder's
    position table is zeroed."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.blocks = nn.ModuleList(
            TransformerBlock(cfg.hidden_dim, cfg.n_heads) for _ in range(cfg.n_temporal_layers)
        )
        self.ln_final = nn.LayerNorm(cfg.hidden_dim)

    def forward(self, x: torch.Tensor, allowed: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            x = block(x, allowed)
        return self.ln_final(x)


class InputEmbedder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.token_emb = nn.Embedding(cfg.vocab_size, cfg.hidden_dim)
        self.pos_emb = nn.Embedding(cfg.max_text_len + cfg.max_video_len, cfg.hidden_dim)
        self.text_segment = nn.Parameter(torch.zeros(cfg.hidden_dim))
        self.video_segment_emb = nn.Embedding(3, cfg.hidden_dim)  # BEF / ACT / AFT
        self.feature_proj = nn.Linear(cfg.feature_dim, cfg.hidden_dim)
        self.text_ln = nn.LayerNorm(cfg.hidden_dim)
        self.video_ln = nn.LayerNorm(cfg.hidden_dim)

    def embed_text(self, token_ids: torch.Tensor, positions: torch.Tensor) -> torch.Tensor:
        summed = self.token_emb(token_ids) + self.pos_emb(positions) + self.text_segment
        return self.text_ln(summed)

    def embed_video(
        self,
        frames: torch.Tensor,
        positions: torch.Tensor,
        segment_ids: torch.Tensor,
    ) -> torch.Tensor:
        summed = (
            self.feature_proj(frames)
            + self.pos_emb(positions)
            + self.video_segment_emb(segment_ids)
        )
        return self.video_ln(summed)


@dataclass
class ModelOutput:
    text_local: torch.Tensor    # (B, T, H) cross-modal text embeddings
    video_local: torch.Tensor   # (B, V, H) cross-modal video embeddings
    video_final: torch.Tensor   # (B, V, H) local + temporal residual


def _abort_on_nan(x: torch.Tensor, where: str) -> None:
    if torch.isnan(x).any():
        n_bad = int(torch.isnan(x).sum())
        raise RuntimeError(
            f"NaN activations after the {where} ({n_bad}/{x.numel()} elements); "
            "check inputs, learning rate, and attention masks"
        )


def build_attention_mask(
    text_mask: torch.Tensor,
    video_mask: torch.Tensor,
    ablation: str,
) -> torch.Tensor:
    """(B, L, L) boolean mask over the concatenated sequence.

    Padding positions are never valid keys. Under modality ablation the
    text<->video quadrants are blocked in both directions.
    """
    keys = torch.cat([text_mask, video_mask], dim=1)
    b, length = keys.shape
    allowed = keys.unsqueeze(1).expand(b, length, length).clone()
    if ablation != "none":
        t = text_mask.shape[1]
        allowed[:, :t, t:] = False
        allowed[:, t:, :t] = False
    return allowed


class CaeModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embedder = InputEmbedder(cfg)
        self.cross_modal = CrossModalEncoder(cfg)
        self.temporal = TemporalEncoder(cfg)
        self.mam_head = nn.Linear(cfg.hidden_dim, cfg.vocab_size)
        self.mem_head = nn.Linear(cfg.hidden_dim, cfg.feature_dim)
        self._init_parameters(cfg.model_seed)

    def _init_parameters(self, seed: int) -> None:
        gen = torch.Generator().manual_seed(seed)
        for name, param in sorted(self.named_parameters(), key=lambda kv: kv[0]):
            owner = name.split(".")[-2] if "." in name else ""
            with torch.no_grad():
                if name.endswith("bias"):
                    param.zero_()
                elif "ln" in owner:
                    param.fill_(1.0)
                else:
                    param.normal_(0.0, 0.02, generator=gen)

    def forward(
        self,
        token_ids: torch.Tensor,
        text_mask: torch.Tensor,
        frames: torch.Tensor,
        video_mask: torch.Tensor,
        segment_ids: torch.Tensor,
    ) -> ModelOutput:
        b, t = token_ids.shape
        v = frames.shape[1]
        device = token_ids.device

        text_positions = torch.arange(t, device=device).unsqueeze(0).expand(b, t)
        text_x = self.embedder.embed_text(token_ids, text_positions)

        if v > 0:
            text_len = text_mask.sum(dim=1, keepdim=True)
            video_positions = text_len + torch.arange(v, device=device).unsqueeze(0)
            video_x = self.embedder.embed_video(frames, video_positions, segment_ids)
            x = torch.cat([text_x, video_x], dim=1)
        else:
            x = text_x

        allowed = build_attention_mask(text_mask, video_mask, self.cfg.ablation)
        x = self.cross_modal(x, allowed)
        _abort_on_nan(x, "cross-modal encoder")
        text_local, video_local = x[:, :t], x[:, t:]

        if v > 0:
            video_allowed = video_mask.unsqueeze(1).expand(b, v, v)
            global_video = self.temporal(video_local, video_allowed)
            _abort_on_nan(global_video, "temporal encoder")
            video_final = video_local + global_video
        else:
            video_final = video_local
        return ModelOutput(text_local=text_local, video_local=video_local,
                           video_final=video_final)

    def mam_logits(self, text_local: torch.Tensor, example_idx: torch.Tensor,
                   positions: torch.Tensor) -> torch.Tensor:
        """Vocabulary logits at the targeted text positions, shape (N, vocab)."""
        gathered = text_local[example_idx, positions]
        return self.mam_head(gathered)

    def mem_query(self, video_final: torch.Tensor, example_idx: int,
                  frame_idx: int) -> torch.Tensor:
        """Project one contextualized video embedding into feature space."""
        return self.mem_head(video_final[example_idx, frame_idx])


@dataclass
class ModelState:
    """Configuration, parameters, and step counter of one model."""

    config: ModelConfig
    model: CaeModel
    step: int = 0
    vocab: Optional[Vocab] = None


def new_state(cfg: ModelConfig, vocab: Optional[Vocab] = None) -> ModelState:
    """Fresh model state; parameter init is driven by cfg.model_seed only."""
    return ModelState(config=cfg, model=CaeModel(cfg), step=0, vocab=vocab)
