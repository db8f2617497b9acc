import math
import random

import numpy as np
import pytest
import torch

from cae.model import (
    build_mam_batch,
    build_mem_batch,
    mam_loss,
    mam_predict,
    mem_loss,
    mem_predict,
    nce_probability,
    new_state,
)
from cae.model.batching import MemTarget
from cae.model.candidates import CandidateSet, FrameRef
from cae.model.training import build_pools
from conftest import model_setup


def forward(state, batch):
    return state.model(
        batch.token_ids, batch.text_mask, batch.frames, batch.video_mask, batch.segment_ids
    )


class TestNceProbability:
    def test_equal_scores_uniform(self):
        query = torch.tensor([1.0, 0.0])
        candidates = torch.tensor([[1.0, 0.0]] * 4)
        probs = nce_probability(query, candidates, tau=1.0)
        assert torch.allclose(probs, torch.full((4,), 0.25))

    def test_hand_evaluated_tau_one(self):
        # scores (2, 0, 0): p(positive) = e^2 / (e^2 + 2) = 0.786986...
        query = torch.tensor([2.0, 0.0, 0.0])
        candidates = torch.eye(3)
        probs = nce_probability(query, candidates, tau=1.0)
        expected = math.exp(2.0) / (math.exp(2.0) + 2.0)
        assert abs(probs[0].item() - expected) < 1e-7
        assert abs(probs[0].item() - 0.7870) < 1e-4

    def test_hand_evaluated_tau_half_is_sharper(self):
        query = torch.tensor([2.0, 0.0, 0.0])
        candidates = torch.eye(3)
        probs = nce_probability(query, candidates, tau=0.5)
        expected = math.exp(4.0) / (math.exp(4.0) + 2.0)
        assert abs(probs[0].item() - expected) < 1e-7
        assert abs(probs[0].item() - 0.9647) < 1e-4
        assert probs[0] > nce_probability(query, candidates, tau=1.0)[0]

    @pytest.mark.parametrize("tau", [0.05, 0.5, 1.0, 10.0])
    def test_normalization_across_temperatures(self, tau):
        gen = torch.Generator().manual_seed(0)
        query = torch.randn(16, generator=gen) * 50.0
        candidates = torch.randn(12, 16, generator=gen)
        probs = nce_probability(query, candidates, tau=tau)
        assert abs(probs.sum().item() - 1.0) < 1e-6
        assert (probs >= 0).all()

    def test_overflow_guarded(self):
        query = torch.tensor([1000.0, 0.0])
        candidates = torch.tensor([[1.0, 0.0], [0.99, 0.0], [-1.0, 0.0]])
        probs = nce_probability(query, candidates, tau=0.05)
        assert torch.isfinite(probs).all()
        assert abs(probs.sum().item() - 1.0) < 1e-6

    def test_bad_temperature(self):
        with pytest.raises(ValueError):
            nce_probability(torch.ones(2), torch.ones(3, 2), tau=0.0)


class TestMamLoss:
    def _uniform_head_state(self, vocab_size_target=10):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        with torch.no_grad():
            state.model.mam_head.weight.zero_()
            state.model.mam_head.bias.zero_()
        return cfg, vocab, items, state

    def test_uniform_logits_log_vocab(self):
        cfg, vocab, items, state = self._uniform_head_state()
        batch = build_mam_batch(items[:2], vocab, cfg, training=False)
        loss = mam_loss(forward(state, batch), batch, state.model)
        assert loss.item() == pytest.approx(math.log(cfg.vocab_size), abs=1e-6)

    def test_saturated_correct_logit(self):
        cfg, vocab, items, state = self._uniform_head_state()
        batch = build_mam_batch(items[:1], vocab, cfg, training=False)
        target_id = int(batch.mam_target_ids[0])
        with torch.no_grad():
            state.model.mam_head.bias[target_id] = 20.0
        loss = mam_loss(forward(state, batch), batch, state.model)
        assert loss.item() < 1e-6

    def test_two_positions_mean_of_hand_cross_entropies(self):
        cfg, vocab, items, state = self._uniform_head_state()
        bias = torch.arange(cfg.vocab_size, dtype=torch.float32) * 0.3
        with torch.no_grad():
            state.model.mam_head.bias.copy_(bias)
        batch = build_mam_batch(items[:2], vocab, cfg, training=False)
        assert batch.mam_target_ids.numel() == 2
        logits = bias.numpy()
        log_z = np.log(np.exp(logits - logits.max()).sum()) + logits.max()
        per_target = [-(logits[t] - log_z) for t in batch.mam_target_ids.tolist()]
        expected = float(np.mean(per_target))
        loss = mam_loss(forward(state, batch), batch, state.model)
        assert loss.item() == pytest.approx(expected, abs=1e-6)

    def test_empty_plan_rejected(self):
        cfg, vocab, items, state = self._uniform_head_state()
        batch = build_mam_batch(items[:1], vocab, cfg, training=False)
        batch.mam_positions = torch.zeros(0, dtype=torch.long)
        with pytest.raises(ValueError):
            mam_loss(forward(state, batch), batch, state.model)


class TestMamPredict:
    def test_one_hot_head_predicts_that_token(self):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        whip_id = vocab.stoi["whip"]
        with torch.no_grad():
            state.model.mam_head.weight.zero_()
            state.model.mam_head.bias.zero_()
            state.model.mam_head.bias[whip_id] = 5.0
        batch = build_mam_batch(items[:3], vocab, cfg, training=False)
        predicted = mam_predict(forward(state, batch), batch, state.model)
        assert all(vocab.itos[i] == "whip" for i in predicted)

    def test_exact_tie_takes_lowest_id(self):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        with torch.no_grad():
            state.model.mam_head.weight.zero_()
            state.model.mam_head.bias.zero_()
        batch = build_mam_batch(items[:1], vocab, cfg, training=False)
        predicted = mam_predict(forward(state, batch), batch, state.model)
        assert predicted == [0]

    def test_constant_shift_invariance(self):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        batch = build_mam_batch(items[:2], vocab, cfg, training=False)
        before = mam_predict(forward(state, batch), batch, state.model)
        with torch.no_grad():
            state.model.mam_head.bias += 123.0
        after = mam_predict(forward(state, batch), batch, state.model)
        assert before == after

    def test_no_masked_position_rejected(self):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        batch = build_mam_batch(items[:1], vocab, cfg, training=False)
        batch.mam_positions = torch.zeros(0, dtype=torch.long)
        with pytest.raises(ValueError):
            mam_predict(forward(state, batch), batch, state.model)


class TestMemLossAndPredict:
    def _batch(self, cfg, vocab, items):
        pools = build_pools(items, cfg.neg_sampling)
        return build_mem_batch(items, pools, vocab, cfg, rng=random.Random(0))

    def test_loss_matches_independent_recomputation(self):
        cfg, vocab, items = model_setup(n_videos=2, clips_per_video=3)
        state = new_state(cfg, vocab)
        batch = self._batch(cfg, vocab, items)
        out = forward(state, batch)
        loss = mem_loss(out, batch, state.model, tau=cfg.nce_temperature)
        terms = []
        for target in batch.mem_targets:
            query = state.model.mem_head(
                out.video_final[target.example_index, target.frame_index]
            )
            probs = nce_probability(
                query.detach(), torch.from_numpy(target.candidates.features),
                cfg.nce_temperature,
            )
            terms.append(-math.log(probs[target.candidates.positive_index].item()))
        assert loss.item() == pytest.approx(float(np.mean(terms)), rel=1e-5)

    def test_masked_rows_are_zeroed_in_input(self):
        cfg, vocab, items = model_setup()
        batch = self._batch(cfg, vocab, items)
        for target in batch.mem_targets:
            row = batch.frames[target.example_index, target.frame_index]
            assert torch.equal(row, torch.zeros_like(row))

    def test_positive_strictly_largest_is_chosen(self):
        query = torch.tensor([1.0, 0.0, 0.0, 0.0])
        features = np.eye(4, dtype=np.float32) * 0.5
        features[2] = [2.0, 0, 0, 0]
        cand = CandidateSet(
            features=features,
            positive_index=2,
            refs=[FrameRef("v", float(i), "ACT", "c") for i in range(4)],
        )
        scores = torch.from_numpy(cand.features) @ query
        assert int(scores.argmax()) == 2

    def test_predict_tie_takes_lowest_candidate_index(self):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        batch = self._batch(cfg, vocab, items[:1])
        for target in batch.mem_targets:
            target.candidates.features[:] = 0.0  # every score exactly zero
        choices = mem_predict(forward(state, batch), batch, state.model)
        assert all(c == 0 for c in choices)

    def test_predict_constant_shift_invariance(self):
        cfg, vocab, items = model_setup(n_videos=2, clips_per_video=2)
        state = new_state(cfg, vocab)
        batch = self._batch(cfg, vocab, items)
        out = forward(state, batch)
        before = mem_predict(out, batch, state.model)
        # shift every candidate's score by a constant: add c*q/||q||^2 per target
        for target in batch.mem_targets:
            query = state.model.mem_head(
                out.video_final[target.example_index, target.frame_index]
            ).detach().numpy()
            delta = 7.0 * query / float(query @ query)
            target.candidates.features += delta[None, :].astype(np.float32)
        after = mem_predict(out, batch, state.model)
        assert before == after

    def test_empty_candidates_rejected(self):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        batch = self._batch(cfg, vocab, items[:1])
        batch.mem_targets[0] = MemTarget(
            0, batch.mem_targets[0].frame_index,
            CandidateSet(features=np.zeros((0, cfg.feature_dim), np.float32),
                         positive_index=0, refs=[]),
        )
        with pytest.raises(ValueError):
            mem_predict(forward(state, batch), batch, state.model)

    def test_empty_targets_rejected(self):
        cfg, vocab, items = model_setup()
        state = new_state(cfg, vocab)
        batch = self._batch(cfg, vocab, items[:1])
        batch.mem_targets = []
        with pytest.raises(ValueError):
            mem_loss(forward(state, batch), batch, state.model, tau=1.0)


class TestExactUniformLossValue:
    def test_vocab_of_ten_gives_ln_ten(self):
        # 3 reserved + 7 regular tokens = vocabulary of exactly 10
        from cae.model import ModelConfig, Vocab, new_state, build_mam_batch
        from conftest import make_clip
        from cae.features import SyntheticFeatureProvider
        from cae.model import clip_frames

        vocab = Vocab(["[PAD]", "[UNK]", "[MASK]",
                       "now", "chop", "the", "carrot", "whip", "cream", "mix"])
        assert len(vocab) == 10
        clip = make_clip("v1", 10.0, "chop", "carrot")
        provider = SyntheticFeatureProvider(dim=8)
        cfg = ModelConfig(vocab_size=10, hidden_dim=8, n_heads=2,
                          n_cross_layers=1, n_temporal_layers=1, feature_dim=8)
        state = new_state(cfg, vocab)
        with torch.no_grad():
            state.model.mam_head.weight.zero_()
            state.model.mam_head.bias.zero_()
        batch = build_mam_batch([(clip, clip_frames(clip, provider))], vocab, cfg,
                                training=False)
        loss = mam_loss(forward(state, batch), batch, state.model)
        assert loss.item() == pytest.approx(2.302585, abs=1e-6)
