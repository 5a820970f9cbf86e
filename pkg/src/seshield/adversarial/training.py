"""Adversarial training: seeded injection of attacked samples into batches.

Reuses the round-based trainer verbatim; the only difference is a batch hook
that replaces a random subset of each client minibatch (up to half) with
attacked versions generated against the client's current weights, drawing
the noise budget from a configured pool. Stored datasets are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import torch

from ..dataset.corpus import LabeledImage
from ..fedtrain.trainer import FedConfig, TrainResult, train
from ..model.backbones import AdaptedModel
from ..model.preprocess import PreprocessPolicy, normalized_bounds
from .pgd import AttackError, PGDConfig, pgd_attack

DEFAULT_EPSILON_POOL = (0.3, 0.5, 1.0)


@dataclass
class AdvTrainPolicy:
    epsilon_pool: tuple[float, ...] = DEFAULT_EPSILON_POOL
    pgd_steps: int = 10
    max_injected_fraction: float = 0.5  # cap keeps a clean-data majority
    lineage: list[dict] = field(default_factory=list)

    def validate(self, batch_size: int) -> None:
        if any(e <= 0 for e in self.epsilon_pool):
            raise AttackError("epsilon pool values must be positive")
        if not 0 < self.max_injected_fraction <= 1:
            raise AttackError("max_injected_fraction must be in (0, 1]")
        if int(batch_size * self.max_injected_fraction) > batch_size:
            raise AttackError("injection count cannot exceed the batch size")


def adversarial_train(
    model: AdaptedModel,
    train_set: list[LabeledImage],
    val_set: list[LabeledImage],
    fed_cfg: FedConfig,
    policy: AdvTrainPolicy,
    preprocess_policy: PreprocessPolicy | None = None,
    out_dir: str | Path | None = None,
) -> TrainResult:
    """Round-based training with per-batch adversarial sample injection.

    An empty epsilon pool degenerates to plain training with the same seeded
    batch order.
    """
    preprocess_policy = preprocess_policy or PreprocessPolicy.for_family(model.family)
    if not policy.epsilon_pool:
        return train(model, train_set, val_set, fed_cfg,
                     policy=preprocess_policy, out_dir=out_dir)
    policy.validate(fed_cfg.batch_size)
    lo, hi = normalized_bounds(preprocess_policy)

    def inject(client_model, inputs, labels, rng: torch.Generator):
        max_count = int(inputs.shape[0] * policy.max_injected_fraction)
        count = int(torch.randint(0, max_count + 1, (1,), generator=rng))
        if count == 0:
            return inputs, labels, {"injected": 0}
        picks = torch.randperm(inputs.shape[0], generator=rng)[:count]
        pool_idx = torch.randint(0, len(policy.epsilon_pool), (count,), generator=rng)
        out = inputs.clone()
        for i, p in enumerate(picks.tolist()):
            epsilon = policy.epsilon_pool[int(pool_idx[i])]
            cfg = PGDConfig(epsilon=epsilon, steps=policy.pgd_steps)
            out[p] = pgd_attack(
                client_model, inputs[p], int(labels[p]), cfg,
                clip_min=lo, clip_max=hi, generator=rng,
            )
        policy.lineage.append({"injected": count, "epsilons": [
            policy.epsilon_pool[int(i)] for i in pool_idx
        ]})
        return out, labels, {"injected": count}

    return train(model, train_set, val_set, fed_cfg,
                 policy=preprocess_policy, out_dir=out_dir, batch_hook=inject)
