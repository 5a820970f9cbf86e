"""Iterated sign-gradient attack with L-infinity projection.

Epsilon is expressed in the same units as the model input tensor; attacked
tensors stay inside both the epsilon ball around the original and the valid
pixel box (channelwise bounds of the normalized input space).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F


class AttackError(Exception):
    pass


@dataclass
class PGDConfig:
    epsilon: float
    steps: int = 10
    step_size: float | None = None  # defaults to epsilon / 4
    random_start: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise AttackError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.steps < 1:
            raise AttackError("steps must be >= 1")
        if self.step_size is not None and self.step_size <= 0:
            raise AttackError("step_size must be > 0")

    @property
    def effective_step(self) -> float:
        return self.step_size if self.step_size is not None else self.epsilon / 4


def pgd_attack(
    model: torch.nn.Module,
    image: torch.Tensor,
    true_label: int | torch.Tensor,
    cfg: PGDConfig,
    clip_min: torch.Tensor | float = 0.0,
    clip_max: torch.Tensor | float = 1.0,
    generator: torch.Generator | None = None,
    on_step=None,
) -> torch.Tensor:
    """Maximize the classification loss within the epsilon ball.

    Accepts a single CHW image or an NCHW batch; labels likewise scalar or
    1-D. The model is left in its prior training/eval mode and its weights
    receive no gradients.
    """
    single = image.ndim == 3
    x = image.unsqueeze(0) if single else image
    if isinstance(true_label, int):
        labels = torch.tensor([true_label] * x.shape[0])
    else:
        labels = true_label.reshape(-1)

    was_training = model.training
    model.eval()
    requires = [p.requires_grad for p in model.parameters()]
    for p in model.parameters():
        p.requires_grad_(False)
    try:
        adv = x.clone()
        if cfg.random_start and cfg.epsilon > 0:
            noise = torch.empty_like(adv)
            if generator is not None:
                noise.uniform_(-cfg.epsilon, cfg.epsilon, generator=generator)
            else:
                noise.uniform_(-cfg.epsilon, cfg.epsilon)
            adv = adv + noise
            adv = torch.clamp(adv, min=clip_min, max=clip_max)
        for _ in range(cfg.steps):
            adv = adv.detach().requires_grad_(True)
            loss = F.cross_entropy(model(adv), labels)
            (grad,) = torch.autograd.grad(loss, adv)
            adv = adv.detach() + cfg.effective_step * grad.sign()
            delta = torch.clamp(adv - x, min=-cfg.epsilon, max=cfg.epsilon)
            adv = torch.clamp(x + delta, min=clip_min, max=clip_max)
            if on_step is not None:  # debug hook: inspect each projected iterate
                on_step(adv.detach(), x)
    finally:
        model.train(was_training)
        for p, r in zip(model.parameters(), requires):
            p.requires_grad_(r)
    return adv[0] if single else adv
