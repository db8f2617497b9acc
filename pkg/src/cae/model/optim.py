"""Adam with decoupled weight decay and linear warmup.

Hand-rolled rather than taken from torch.optim so the update rule under test
is exactly the one documented here:

    lr_t   = base_lr * min(1, t / warmup)          (t = 0, 1, ...)
    p     -= lr_t * weight_decay * p               (decoupled decay)
    m      = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
    p     -= lr_t * (m / (1-b1^(t+1))) / (sqrt(v / (1-b2^(t+1))) + eps)
"""

from __future__ import annotations

import torch


def warmup_lr(base_lr: float, step: int, warmup_steps: int) -> float:
    """Linear ramp from zero across warmup_steps, constant afterwards."""
    if warmup_steps <= 0:
        return base_lr
    return base_lr * min(1.0, step / warmup_steps)


class AdamW:
    def __init__(
        self,
        params: list[torch.Tensor],
        lr: float = 3e-5,
        weight_decay: float = 0.01,
        warmup_steps: int = 0,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.base_lr = lr
        self.weight_decay = weight_decay
        self.warmup_steps = warmup_steps
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [torch.zeros_like(p) for p in self.params]
        self.v = [torch.zeros_like(p) for p in self.params]

    @property
    def current_lr(self) -> float:
        return warmup_lr(self.base_lr, self.t, self.warmup_steps)

    @torch.no_grad()
    def step(self) -> float:
        """Apply one update from the accumulated .grad fields; returns the lr used."""
        lr = self.current_lr
        bias1 = 1.0 - self.beta1 ** (self.t + 1)
        bias2 = 1.0 - self.beta2 ** (self.t + 1)
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            p.mul_(1.0 - lr * self.weight_decay)
            m.mul_(self.beta1).add_(g, alpha=1.0 - self.beta1)
            v.mul_(self.beta2).addcmul_(g, g, value=1.0 - self.beta2)
            update = (m / bias1) / ((v / bias2).sqrt() + self.eps)
            p.add_(update, alpha=-lr)
        self.t += 1
        return lr

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
