import math
import random

import pytest
import torch

from cae.model import (
    AdamW,
    Trainer,
    TrainingDiverged,
    build_joint_batch,
    build_mam_batch,
    grad_check,
    new_state,
    train_step,
)
from cae.model.training import build_pools, task_for_step
from conftest import model_setup


def make_trainer(task_mode="MAM", seed=0, grad_accum=1, **kwargs):
    cfg, vocab, items = model_setup(
        n_videos=2, clips_per_video=3,
        task_mode=task_mode,
        lr=1e-3, warmup_steps=5, grad_accum=grad_accum,
        **kwargs,
    )
    state = new_state(cfg, vocab)
    return Trainer(state, items, vocab, seed=seed, batch_size=3), cfg, vocab, items


class TestTaskSchedule:
    def test_single_task_modes(self):
        assert [task_for_step("MAM", s) for s in range(3)] == ["mam"] * 3
        assert [task_for_step("MEM", s) for s in range(3)] == ["mem"] * 3

    def test_multi_alternates_strictly(self):
        tasks = [task_for_step("MULTI", s) for s in range(10)]
        assert tasks == ["mam", "mem"] * 5


class TestTrainStep:
    def test_loss_recorded_and_step_advances(self):
        trainer, cfg, vocab, items = make_trainer()
        history = trainer.run(3)
        assert [r.step for r in history] == [0, 1, 2]
        assert all(math.isfinite(r.loss) for r in history)
        assert trainer.state.step == 3

    def test_lr_follows_warmup(self):
        trainer, *_ = make_trainer()
        history = trainer.run(6)
        expected = [1e-3 * min(1.0, s / 5) for s in range(6)]
        assert [r.lr for r in history] == pytest.approx(expected)

    def test_multi_history_alternates(self):
        trainer, *_ = make_trainer(task_mode="MULTI")
        history = trainer.run(6)
        assert [r.task for r in history] == ["mam", "mem"] * 3

    def test_nan_loss_aborts_with_checkpoint_reference(self):
        trainer, cfg, vocab, items = make_trainer()
        trainer.last_checkpoint = "runs/last.ckpt"
        with torch.no_grad():
            trainer.state.model.mam_head.bias.fill_(float("nan"))
        with pytest.raises(TrainingDiverged) as exc:
            trainer.run(1)
        assert exc.value.last_checkpoint == "runs/last.ckpt"

    def test_accumulation_of_identical_micro_batches_matches_single(self):
        cfg, vocab, items = model_setup(lr=1e-3, warmup_steps=0, grad_accum=1)
        batch = build_mam_batch(items, vocab, cfg, training=False)

        def grads_after(micro_batches):
            state = new_state(cfg, vocab)
            opt = AdamW([p for _, p in sorted(state.model.named_parameters())],
                        lr=cfg.lr, weight_decay=0.0, warmup_steps=0)
            train_step(state, opt, micro_batches, "mam")
            return {n: p.detach().clone() for n, p in state.model.named_parameters()}

        single = grads_after([batch])
        double = grads_after([batch, batch])
        for name in single:
            torch.testing.assert_close(single[name], double[name], rtol=0, atol=1e-7)

    def test_empty_micro_batches_rejected(self):
        trainer, *_ = make_trainer()
        with pytest.raises(ValueError):
            train_step(trainer.state, trainer.optimizer, [], "mam")


class TestDeterminism:
    @pytest.mark.parametrize("task_mode", ["MAM", "MEM", "MULTI"])
    def test_loss_curve_bit_identical_across_runs(self, task_mode):
        torch.set_num_threads(1)
        curves = []
        for _run in range(2):
            trainer, *_ = make_trainer(task_mode=task_mode, seed=7)
            history = trainer.run(8)
            curves.append([(r.task, r.loss, r.lr) for r in history])
        assert curves[0] == curves[1]

    def test_different_seed_changes_batch_order(self):
        a, *_ = make_trainer(task_mode="MAM", seed=1)
        b, *_ = make_trainer(task_mode="MAM", seed=2)
        la = [r.loss for r in a.run(5)]
        lb = [r.loss for r in b.run(5)]
        assert la != lb


class TestEvaluate:
    def test_mam_accuracy_bounds(self):
        trainer, *_ = make_trainer(task_mode="MAM")
        metrics = trainer.evaluate()
        assert 0.0 <= metrics["mam_accuracy"] <= 100.0
        assert metrics["selection_metric"] == metrics["mam_accuracy"]

    def test_multi_selection_metric_is_mean(self):
        trainer, *_ = make_trainer(task_mode="MULTI")
        metrics = trainer.evaluate()
        expected = (metrics["mam_accuracy"] + metrics["mem_accuracy"]) / 2
        assert metrics["selection_metric"] == pytest.approx(expected)

    def test_checkpoint_written_when_out_dir_given(self, tmp_path):
        cfg, vocab, items = model_setup(lr=1e-3, warmup_steps=0, grad_accum=1)
        state = new_state(cfg, vocab)
        trainer = Trainer(state, items, vocab, seed=0, batch_size=2, out_dir=tmp_path)
        trainer.run(2, eval_every=1)
        assert (tmp_path / "last.ckpt").exists()
        assert (tmp_path / "best.ckpt").exists()


class TestGradCheckSmoke:
    def test_small_model_grads_match_finite_differences(self):
        cfg, vocab, items = model_setup(
            n_videos=1, clips_per_video=2,
            feature_dim=4, hidden_dim=4, n_heads=1, layers=1,
            max_text_len=8, max_video_len=10,
        )
        state = new_state(cfg, vocab)
        pools = build_pools(items, cfg.neg_sampling)
        batch = build_joint_batch(items[:1], pools, vocab, cfg, rng=random.Random(0))
        err = grad_check(state, batch, epsilon=1e-5)
        assert err < 1e-4


class TestDivergenceCheckpointReference:
    def test_abort_references_last_written_checkpoint(self, tmp_path):
        cfg, vocab, items = model_setup(lr=1e-3, warmup_steps=0, grad_accum=1)
        state = new_state(cfg, vocab)
        trainer = Trainer(state, items, vocab, seed=0, batch_size=2,
                          out_dir=tmp_path)
        trainer.run(2, eval_every=1)
        assert trainer.last_checkpoint == str(tmp_path / "last.ckpt")
        with torch.no_grad():
            trainer.state.model.mam_head.bias.fill_(float("nan"))
        with pytest.raises(TrainingDiverged) as exc:
            trainer.run(1)
        assert exc.value.last_checkpoint == str(tmp_path / "last.ckpt")


class TestMultiWithAccumulation:
    def test_alternation_survives_gradient_accumulation(self):
        trainer, *_ = make_trainer(task_mode="MULTI", grad_accum=2)
        history = trainer.run(6)
        assert [r.task for r in history] == ["mam", "mem"] * 3
        assert all(math.isfinite(r.loss) for r in history)
