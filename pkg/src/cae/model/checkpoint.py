"""Versioned binary checkpoints: named f32 tensors with shape headers.

Layout (all little-endian): magic "CAEM", u32 version, u64 step, u32 tensor
count, then per tensor (sorted by name) u32 name length + UTF-8 name, u32
ndim, ndim * u64 dims, and finally every tensor's f32 payload in the same
order. The training configuration (plus the vocabulary, when present) is
echoed to a deterministic JSON sidecar at <path>.json.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .config import ModelConfig
from .network import CaeModel, ModelState
from .vocab import Vocab

CKPT_MAGIC = b"CAEM"
CKPT_VERSION = 1


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def save_checkpoint(state: ModelState, path: str | Path) -> None:
    named = sorted(state.model.named_parameters(), key=lambda kv: kv[0])
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<I", CKPT_VERSION))
        fh.write(struct.pack("<Q", state.step))
        fh.write(struct.pack("<I", len(named)))
        for name, param in named:
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            shape = tuple(param.shape)
            fh.write(struct.pack("<I", len(shape)))
            for dim in shape:
                fh.write(struct.pack("<Q", dim))
        for _name, param in named:
            arr = param.detach().cpu().numpy().astype("<f4")
            fh.write(arr.tobytes())

    sidecar = {"config": state.config.to_dict(), "step": state.step}
    if state.vocab is not None:
        sidecar["vocab"] = state.vocab.itos
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> ModelState:
    with open(sidecar_path(path), "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    cfg = ModelConfig.from_dict(sidecar["config"])
    vocab = Vocab(sidecar["vocab"]) if "vocab" in sidecar else None

    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file (magic {magic!r})")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (step,) = struct.unpack("<Q", fh.read(8))
        (n_tensors,) = struct.unpack("<I", fh.read(4))
        headers: list[tuple[str, tuple[int, ...]]] = []
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = tuple(struct.unpack("<Q", fh.read(8))[0] for _ in range(ndim))
            headers.append((name, shape))
        tensors: dict[str, torch.Tensor] = {}
        for name, shape in headers:
            count = int(np.prod(shape)) if shape else 1
            payload = fh.read(count * 4)
            arr = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
            tensors[name] = torch.from_numpy(arr)

    model = CaeModel(cfg)
    expected = dict(model.named_parameters())
    if set(expected) != set(tensors):
        missing = sorted(set(expected) ^ set(tensors))
        raise ValueError(f"checkpoint tensors do not match the architecture: {missing}")
    with torch.no_grad():
        for name, param in expected.items():
            if tuple(param.shape) != tuple(tensors[name].shape):
                raise ValueError(
                    f"shape mismatch for {name}: checkpoint {tuple(tensors[name].shape)}, "
                    f"model {tuple(param.shape)}"
                )
            param.copy_(tensors[name])
    return ModelState(config=cfg, model=model, step=step, vocab=vocab)
