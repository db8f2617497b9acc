"""Training loop: single-task or strictly alternating multi-task updates.

Every optimizer step consumes grad_accum micro-batches of one task. In MULTI
mode even steps run the action task and odd steps the effect task, each
drawing from its own half of the train set. Checkpoint selection tracks task
validation accuracy (their unweighted mean in MULTI mode).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import torch

from ..corpus import ClipRecord
from ..ioutil import stable_seed
from .batching import Batch, build_mam_batch, build_mem_batch
from .candidates import ClipFrames
from .checkpoint import save_checkpoint
from .losses import mam_loss, mem_loss, mam_predict, mem_predict
from .network import ModelState
from .optim import AdamW
from .vocab import Vocab

Item = tuple[ClipRecord, ClipFrames]


@dataclass
class LossRecord:
    step: int
    task: str
    loss: float
    lr: float


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, last_checkpoint: Optional[str] = None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint


def task_for_step(task_mode: str, step: int) -> str:
    if task_mode == "MAM":
        return "mam"
    if task_mode == "MEM":
        return "mem"
    return "mam" if step % 2 == 0 else "mem"


def _run_batch(state: ModelState, batch: Batch, task: str) -> torch.Tensor:
    output = state.model(
        batch.token_ids, batch.text_mask, batch.frames, batch.video_mask, batch.segment_ids
    )
    if task == "mam":
        return mam_loss(output, batch, state.model)
    return mem_loss(output, batch, state.model, state.config.nce_temperature)


def train_step(
    state: ModelState,
    optimizer: AdamW,
    micro_batches: list[Batch],
    task: str,
    last_checkpoint: Optional[str] = None,
) -> LossRecord:
    """One optimizer step over the given micro-batches of one task."""
    if not micro_batches:
        raise ValueError("train_step needs at least one micro-batch")
    optimizer.zero_grad()
    total = 0.0
    for batch in micro_batches:
        loss = _run_batch(state, batch, task)
        (loss / len(micro_batches)).backward()
        total += float(loss.item())
    mean_loss = total / len(micro_batches)
    if not math.isfinite(mean_loss):
        raise TrainingDiverged(
            f"non-finite {task} loss at step {state.step}", last_checkpoint=last_checkpoint
        )
    step_index = state.step
    lr = optimizer.step()
    state.step += 1
    return LossRecord(step=step_index, task=task, loss=mean_loss, lr=lr)


def build_pools(items: list[Item], strategy: str) -> dict[str, list[ClipFrames]]:
    """Candidate source clips per target clip id, per sampling strategy."""
    frames = [cf for _, cf in items]
    if strategy == "randomized":
        return {cf.clip_id: frames for cf in frames}
    if strategy == "video_based":
        by_video: dict[str, list[ClipFrames]] = {}
        for cf in frames:
            by_video.setdefault(cf.video_id, []).append(cf)
        return {cf.clip_id: by_video[cf.video_id] for cf in frames}
    if strategy == "object_based":
        by_object: dict[str, list[ClipFrames]] = {}
        for cf in frames:
            for obj in cf.objects:
                by_object.setdefault(obj, []).append(cf)
        pools: dict[str, list[ClipFrames]] = {}
        for cf in frames:
            merged: dict[str, ClipFrames] = {}
            for obj in cf.objects:
                for other in by_object.get(obj, []):
                    merged[other.clip_id] = other
            pools[cf.clip_id] = sorted(merged.values(), key=lambda c: c.clip_id)
        return pools
    raise ValueError(f"unknown negative-sampling strategy {strategy!r}")


class _TaskFeed:
    """Deterministic epoch-shuffled batch feed for one task."""

    def __init__(self, items: list[Item], batch_size: int, seed: int):
        if not items:
            raise ValueError("task feed needs at least one item")
        self.items = sorted(items, key=lambda it: it[0].clip_id)
        self.batch_size = batch_size
        self.seed = seed
        self.epoch = 0
        self.cursor = 0
        self.records_served = 0
        self._order = self._shuffled()

    def _shuffled(self) -> list[Item]:
        order = list(self.items)
        random.Random(stable_seed(self.seed, "epoch", self.epoch)).shuffle(order)
        return order

    def next_items(self) -> tuple[list[Item], int]:
        taken: list[Item] = []
        while len(taken) < min(self.batch_size, len(self.items)):
            if self.cursor >= len(self._order):
                self.epoch += 1
                self.cursor = 0
                self._order = self._shuffled()
            taken.append(self._order[self.cursor])
            self.cursor += 1
        offset = self.records_served
        self.records_served += len(taken)
        return taken, offset


class Trainer:
    def __init__(
        self,
        state: ModelState,
        train_items: list[Item],
        vocab: Vocab,
        seed: int = 0,
        batch_size: int = 8,
        val_items: Optional[list[Item]] = None,
        out_dir: Optional[str | Path] = None,
    ):
        self.state = state
        self.cfg = state.config
        self.vocab = vocab
        self.seed = seed
        self.batch_size = batch_size
        self.val_items = val_items or []
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.last_checkpoint: Optional[str] = None
        self.best_metric = -1.0
        self.history: list[LossRecord] = []

        if self.cfg.task_mode == "MULTI":
            order = sorted(train_items, key=lambda it: it[0].clip_id)
            random.Random(stable_seed(seed, "halves")).shuffle(order)
            self.mam_items = order[0::2]
            self.mem_items = order[1::2]
        else:
            self.mam_items = list(train_items)
            self.mem_items = list(train_items)

        self._feeds: dict[str, _TaskFeed] = {}
        if self.cfg.task_mode in ("MAM", "MULTI"):
            self._feeds["mam"] = _TaskFeed(self.mam_items, batch_size, stable_seed(seed, "mam"))
        if self.cfg.task_mode in ("MEM", "MULTI"):
            self._feeds["mem"] = _TaskFeed(self.mem_items, batch_size, stable_seed(seed, "mem"))
        self._pools = {
            "mam": None,
            "mem": build_pools(self.mem_items, self.cfg.neg_sampling)
            if "mem" in self._feeds else None,
        }
        self._batch_rng = random.Random(stable_seed(seed, "batches"))
        self.optimizer = AdamW(
            [p for _, p in sorted(state.model.named_parameters(), key=lambda kv: kv[0])],
            lr=self.cfg.lr,
            weight_decay=self.cfg.weight_decay,
            warmup_steps=self.cfg.warmup_steps,
        )

    def _next_batch(self, task: str) -> Batch:
        items, offset = self._feeds[task].next_items()
        if task == "mam":
            return build_mam_batch(
                items, self.vocab, self.cfg, rng=self._batch_rng,
                record_offset=offset, training=True,
            )
        return build_mem_batch(items, self._pools["mem"], self.vocab, self.cfg,
                               rng=self._batch_rng)

    def run(
        self,
        n_steps: int,
        eval_every: int = 0,
        stop_when: Optional[Callable[[dict], bool]] = None,
    ) -> list[LossRecord]:
        """Run n_steps optimizer steps; optionally evaluate and checkpoint.

        ``stop_when`` receives each evaluation result and may end training
        early (used by overfitting harnesses).
        """
        for _ in range(n_steps):
            task = task_for_step(self.cfg.task_mode, self.state.step)
            micro = [self._next_batch(task) for _ in range(self.cfg.grad_accum)]
            record = train_step(self.state, self.optimizer, micro, task,
                                last_checkpoint=self.last_checkpoint)
            self.history.append(record)
            if eval_every and (self.state.step % eval_every == 0):
                metrics = self.evaluate()
                self._maybe_checkpoint(metrics)
                if stop_when is not None and stop_when(metrics):
                    break
        return self.history

    def _maybe_checkpoint(self, metrics: dict) -> None:
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        last = self.out_dir / "last.ckpt"
        save_checkpoint(self.state, last)
        self.last_checkpoint = str(last)
        metric = metrics["selection_metric"]
        if metric > self.best_metric:
            self.best_metric = metric
            save_checkpoint(self.state, self.out_dir / "best.ckpt")

    def evaluate(self, items: Optional[list[Item]] = None) -> dict:
        """Task accuracies on the given items (default: validation items).

        In MULTI mode with no explicit items, each task is scored on its own
        train half when no validation set was provided.
        """
        results: dict = {}
        if items is not None:
            mam_eval: list[Item] = items
            mem_eval: list[Item] = items
        elif self.val_items:
            mam_eval = mem_eval = self.val_items
        else:
            mam_eval, mem_eval = self.mam_items, self.mem_items

        metrics = []
        if self.cfg.task_mode in ("MAM", "MULTI"):
            preds = predict_verb_tokens(self.state, mam_eval, self.vocab)
            correct = sum(1 for ref, pred in preds if ref == pred)
            results["mam_accuracy"] = 100.0 * correct / max(len(preds), 1)
            metrics.append(results["mam_accuracy"])
        if self.cfg.task_mode in ("MEM", "MULTI"):
            vectors = mem_instance_correctness(
                self.state, mem_eval, self.vocab, seed=stable_seed(self.seed, "eval")
            )
            all_ok = sum(1 for vec in vectors if all(vec))
            results["mem_accuracy"] = 100.0 * all_ok / max(len(vectors), 1)
            metrics.append(results["mem_accuracy"])
        results["selection_metric"] = sum(metrics) / len(metrics)
        return results


def predict_verb_tokens(
    state: ModelState,
    items: list[Item],
    vocab: Vocab,
    batch_size: int = 16,
) -> list[tuple[str, str]]:
    """(reference verb surface, predicted token) per clip, verb-only masking."""
    state.model.eval()
    out: list[tuple[str, str]] = []
    with torch.no_grad():
        for i in range(0, len(items), batch_size):
            chunk = items[i : i + batch_size]
            batch = build_mam_batch(chunk, vocab, state.config, training=False)
            output = state.model(
                batch.token_ids, batch.text_mask, batch.frames,
                batch.video_mask, batch.segment_ids,
            )
            predicted = mam_predict(output, batch, state.model)
            for (clip, _cf), token_id in zip(chunk, predicted):
                reference = clip.tokens[clip.verb_token_index].surface.lower()
                out.append((reference, vocab.itos[token_id]))
    state.model.train()
    return out


def mem_instance_correctness(
    state: ModelState,
    items: list[Item],
    vocab: Vocab,
    seed: int = 0,
    pools: Optional[dict[str, list[ClipFrames]]] = None,
    batch_size: int = 16,
) -> list[list[bool]]:
    """Per-clip vectors of per-frame correctness for the effect task."""
    if pools is None:
        pools = build_pools(items, state.config.neg_sampling)
    rng = random.Random(seed)
    state.model.eval()
    vectors: list[list[bool]] = []
    with torch.no_grad():
        for i in range(0, len(items), batch_size):
            chunk = items[i : i + batch_size]
            batch = build_mem_batch(chunk, pools, vocab, state.config, rng=rng)
            output = state.model(
                batch.token_ids, batch.text_mask, batch.frames,
                batch.video_mask, batch.segment_ids,
            )
            choices = mem_predict(output, batch, state.model)
            per_example: dict[int, list[bool]] = {k: [] for k in range(len(chunk))}
            for target, choice in zip(batch.mem_targets, choices):
                per_example[target.example_index].append(
                    choice == target.candidates.positive_index
                )
            vectors.extend(per_example[k] for k in range(len(chunk)))
    state.model.train()
    return vectors
