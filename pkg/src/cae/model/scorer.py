"""Text-only candidate scorer over the trained action-reconstruction head."""

from __future__ import annotations

import logging

import torch

from .network import ModelState
from .vocab import MASK_TOKEN, Vocab, tokenize_text

log = logging.getLogger(__name__)


class MamCandidateScorer:
    """Scores cloze candidates with the MAM head, text input only.

    The template's mask slot is replaced by the [MASK] token; each candidate's
    logit is read off the vocabulary distribution at that position. Candidates
    outside the vocabulary score -inf (logged), so they are never chosen.
    """

    def __init__(self, state: ModelState, vocab: Vocab | None = None):
        self.state = state
        self.vocab = vocab or state.vocab
        if self.vocab is None:
            raise ValueError("scorer needs a vocabulary")

    def _encode_template(self, template: str) -> tuple[list[int], int]:
        before, sep, after = template.partition(MASK_TOKEN)
        if not sep:
            raise ValueError(f"template has no mask slot: {template!r}")
        ids = self.vocab.encode(tokenize_text(before))
        mask_position = len(ids)
        ids = ids + [self.vocab.mask_id] + self.vocab.encode(tokenize_text(after))
        return ids, mask_position

    def __call__(self, template: str, candidates: list[str]) -> list[float]:
        ids, mask_position = self._encode_template(template)
        cfg = self.state.config
        ids = ids[: cfg.max_text_len]
        if mask_position >= len(ids):
            raise ValueError("mask slot was truncated away by max_text_len")
        model = self.state.model
        model.eval()
        with torch.no_grad():
            token_ids = torch.tensor([ids], dtype=torch.long)
            text_mask = torch.ones_like(token_ids, dtype=torch.bool)
            frames = torch.zeros(1, 0, cfg.feature_dim)
            video_mask = torch.zeros(1, 0, dtype=torch.bool)
            segment_ids = torch.zeros(1, 0, dtype=torch.long)
            out = model(token_ids, text_mask, frames, video_mask, segment_ids)
            logits = model.mam_head(out.text_local[0, mask_position])
        scores: list[float] = []
        for candidate in candidates:
            tokens = tokenize_text(candidate)
            token = tokens[0] if tokens else ""
            if token in self.vocab:
                scores.append(float(logits[self.vocab.stoi[token]]))
            else:
                log.warning("candidate %r not in vocabulary; scoring -inf", candidate)
                scores.append(float("-inf"))
        return scores
