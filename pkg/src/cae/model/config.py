"""Model and training configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass

MASKING_STRATEGIES = ("verb_only", "verb_random_joint", "verb_random_alter")
NEG_SAMPLING_STRATEGIES = ("randomized", "video_based", "object_based")
TASK_MODES = ("MAM", "MEM", "MULTI")
ABLATIONS = ("none", "text_only", "video_only")


@dataclass
class ModelConfig:
    vocab_size: int
    hidden_dim: int = 64
    n_cross_layers: int = 2
    n_temporal_layers: int = 2
    n_heads: int = 4
    max_text_len: int = 32
    max_video_len: int = 24
    feature_dim: int = 64
    nce_temperature: float = 1.0
    mask_prob: float = 0.15
    verb_replace_dist: tuple[float, float, float] = (0.80, 0.15, 0.05)
    masking_strategy: str = "verb_random_joint"
    neg_sampling: str = "video_based"
    candidate_cap: int = 64
    lr: float = 3e-5
    weight_decay: float = 0.01
    warmup_steps: int = 10000
    total_steps: int = 100000
    grad_accum: int = 2
    task_mode: str = "MAM"
    ablation: str = "none"
    model_seed: int = 0

    def __post_init__(self):
        self.verb_replace_dist = tuple(self.verb_replace_dist)
        if abs(sum(self.verb_replace_dist) - 1.0) > 1e-9:
            raise ValueError(f"verb_replace_dist must sum to 1: {self.verb_replace_dist}")
        if not (0.0 <= self.mask_prob <= 1.0):
            raise ValueError(f"mask_prob must lie in [0, 1]: {self.mask_prob}")
        if self.nce_temperature <= 0:
            raise ValueError(f"nce_temperature must be positive: {self.nce_temperature}")
        for name in ("vocab_size", "hidden_dim", "n_cross_layers", "n_temporal_layers",
                     "n_heads", "max_text_len", "max_video_len", "feature_dim",
                     "candidate_cap", "grad_accum"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.hidden_dim % self.n_heads != 0:
            raise ValueError("hidden_dim must be divisible by n_heads")
        if self.masking_strategy not in MASKING_STRATEGIES:
            raise ValueError(f"unknown masking_strategy {self.masking_strategy!r}")
        if self.neg_sampling not in NEG_SAMPLING_STRATEGIES:
            raise ValueError(f"unknown neg_sampling {self.neg_sampling!r}")
        if self.task_mode not in TASK_MODES:
            raise ValueError(f"unknown task_mode {self.task_mode!r}")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verb_replace_dist"] = list(self.verb_replace_dist)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)
