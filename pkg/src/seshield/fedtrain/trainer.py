"""The round-based training loop: sequential clients, server-side averaging.

One client trains at a time on its own partition, so peak resident training
data stays at a single minibatch of decoded images plus one model and the
per-round snapshot list. The server owns the weights between rounds; clients
start every round from the server state and contribute a 1/CC-scaled copy.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import torch
import torch.nn.functional as F

from ..dataset.corpus import SE, LabeledImage
from ..evaluation.metrics import ScoredExample, dr_at_fp, roc_auc
from ..model.backbones import AdaptedModel
from ..model.batching import SizeBucketedBatcher, make_batches
from ..model.checkpoint import save_checkpoint
from ..model.preprocess import PreprocessPolicy, preprocess

BatchHook = Callable  # (model, inputs, labels, rng) -> (inputs, labels, dict)


class TrainingDiagnosticError(Exception):
    def __init__(self, round_index: int, client_index: int, batch_id: str, message: str):
        self.round_index = round_index
        self.client_index = client_index
        self.batch_id = batch_id
        super().__init__(
            f"round {round_index}, client {client_index}, batch {batch_id}: {message}"
        )


@dataclass
class FedConfig:
    global_epochs: int = 50
    client_epochs: int = 5
    client_count: int = 5
    batch_size: int = 32
    checkpoint_every: int = 5
    seed: int = 0
    learning_rate: float = 1e-5
    resample_each_round: bool = True  # re-draw partitions every global epoch

    def validate(self, strict: bool = True) -> None:
        floor = 1 if strict else 0
        if self.global_epochs < floor:
            raise ValueError(f"global_epochs must be >= {floor}")
        if self.client_epochs < floor:
            raise ValueError(f"client_epochs must be >= {floor}")
        if self.client_count < 1 or self.batch_size < 1:
            raise ValueError("client_count and batch_size must be >= 1")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if strict and self.global_epochs % self.checkpoint_every != 0:
            raise ValueError(
                f"checkpoint_every={self.checkpoint_every} does not divide "
                f"global_epochs={self.global_epochs}"
            )


@dataclass
class LoaderStats:
    """Instrumentation for the memory contract: images decoded per batch."""

    batches_loaded: int = 0
    max_concurrent_images: int = 0


@dataclass
class TrainResult:
    model: AdaptedModel
    history: list[dict] = field(default_factory=list)
    best_round: int | None = None
    best_metrics: dict | None = None
    best_state: dict | None = None
    checkpoints: list[Path] = field(default_factory=list)


def load_batch(
    batch: list[LabeledImage], policy: PreprocessPolicy, stats: LoaderStats | None = None
) -> tuple[torch.Tensor, torch.Tensor]:
    """Decode and stack one size-homogeneous minibatch."""
    tensors = [preprocess(im, policy) for im in batch]
    labels = torch.tensor([1 if im.class_name == SE else 0 for im in batch])
    if stats is not None:
        stats.batches_loaded += 1
        stats.max_concurrent_images = max(stats.max_concurrent_images, len(tensors))
    return torch.stack(tensors), labels


def _client_pass(
    model: AdaptedModel,
    examples: list[LabeledImage],
    cfg: FedConfig,
    policy: PreprocessPolicy,
    round_index: int,
    client_index: int,
    batch_hook: BatchHook | None,
    stats: LoaderStats | None,
) -> float:
    optimizer = torch.optim.Adam(
        [p for p in model.parameters() if p.requires_grad], lr=cfg.learning_rate
    )
    batcher = SizeBucketedBatcher(batch_size=cfg.batch_size, policy=policy)
    model.train()
    last_loss = 0.0
    for epoch in range(cfg.client_epochs):
        epoch_seed = derive_seed(cfg.seed, round_index, client_index, epoch)
        for b, batch in enumerate(make_batches(examples, batcher, seed=epoch_seed)):
            inputs, labels = load_batch(batch, policy, stats)
            if batch_hook is not None:
                hook_rng = torch.Generator().manual_seed(
                    derive_seed(cfg.seed, round_index, client_index, epoch, b)
                )
                inputs, labels, _ = batch_hook(model, inputs, labels, hook_rng)
            optimizer.zero_grad()
            loss = F.cross_entropy(model(inputs), labels)
            if not torch.isfinite(loss):
                raise TrainingDiagnosticError(
                    round_index, client_index, f"epoch{epoch}/batch{b}",
                    f"non-finite loss {loss.item()}",
                )
            loss.backward()
            optimizer.step()
            last_loss = float(loss.detach())
    return last_loss


def derive_seed(*parts: int) -> int:
    """Stable combination of loop indices into one RNG seed."""
    value = 0
    for p in parts:
        value = (value * 1_000_003 + int(p) + 1) % (2**63)
    return value


def evaluate_scores(
    model: AdaptedModel, examples: list[LabeledImage], policy: PreprocessPolicy,
    batch_size: int = 32,
) -> list[ScoredExample]:
    """Score a labeled set with the current model (inference mode)."""
    batcher = SizeBucketedBatcher(batch_size=batch_size, policy=policy)
    scored: list[ScoredExample] = []
    model.eval()
    with torch.no_grad():
        for batch in make_batches(examples, batcher, seed=0):
            inputs, _ = load_batch(batch, policy)
            probs = model.predict_proba(inputs)
            for im, p in zip(batch, probs):
                scored.append(ScoredExample(id=im.id, true_label=im.class_name,
                                            score_se=float(p[1])))
    return scored


def _validation_metrics(
    model: AdaptedModel, val_set: list[LabeledImage], policy: PreprocessPolicy,
) -> dict:
    scored = evaluate_scores(model, val_set, policy)
    labels = {s.true_label for s in scored}
    metrics: dict = {"n": len(scored)}
    correct = sum(
        1 for s in scored if (s.score_se >= 0.5) == (s.true_label == SE)
    )
    metrics["accuracy"] = correct / len(scored) if scored else 0.0
    if len(labels) == 2:
        metrics["dr_at_1pct_fp"] = dr_at_fp(scored, 0.01)
        metrics["auc"] = roc_auc(scored)[1]
    return metrics


def train(
    model: AdaptedModel,
    train_set: list[LabeledImage],
    val_set: list[LabeledImage],
    cfg: FedConfig,
    policy: PreprocessPolicy | None = None,
    out_dir: str | Path | None = None,
    batch_hook: BatchHook | None = None,
    loader_stats: LoaderStats | None = None,
) -> TrainResult:
    """Run the full round loop and install the best-validation weights.

    Per round: each client copies the server weights, trains for
    ``client_epochs`` on its size-bucketed minibatches, and contributes a
    1/CC-scaled snapshot; the server installs the elementwise sum, evaluates
    on validation data, and checkpoints every ``checkpoint_every`` rounds.
    The checkpoint with the best detection rate at 1% FP (ties broken by
    AUC) is reported and restored into the returned model.
    """
    from .partition import partition as make_partition
    from .snapshots import WeightSnapshot, average_weights, scale_weights

    cfg.validate(strict=False)
    policy = policy or PreprocessPolicy.for_family(model.family)
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    result = TrainResult(model=model)
    server_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
    by_id = {im.id: im for im in train_set}
    first_partitions = None
    best_key: tuple = ()

    for round_index in range(1, cfg.global_epochs + 1):
        started = time.monotonic()
        if cfg.resample_each_round or first_partitions is None:
            partitions = make_partition(
                train_set, cfg.client_count, global_epoch=round_index, seed=cfg.seed
            )
            if first_partitions is None:
                first_partitions = partitions
        else:
            partitions = first_partitions

        scaled_snapshots = []
        client_losses = []
        for part in partitions:
            model.load_state_dict(server_state)  # client starts from server weights
            examples = [by_id[i] for i in part.ids]
            loss = _client_pass(
                model, examples, cfg, policy, round_index, part.client_index,
                batch_hook, loader_stats,
            )
            client_losses.append(loss)
            snapshot = WeightSnapshot.from_model(model)
            scaled_snapshots.append(scale_weights(snapshot, cfg.client_count))

        averaged = average_weights(scaled_snapshots)
        server_state = averaged.tensors
        model.load_state_dict(server_state)

        val_metrics = _validation_metrics(model, val_set, policy) if val_set else {}
        entry = {
            "round": round_index,
            "client_losses": client_losses,
            "val": val_metrics,
            "wall_time_s": round(time.monotonic() - started, 3),
        }
        result.history.append(entry)
        if out_path is not None:
            with open(out_path / "history.jsonl", "a", encoding="utf-8") as f:
                f.write(json.dumps(entry) + "\n")

        if val_metrics:  # without validation data the final weights stand
            round_key = (
                val_metrics.get("dr_at_1pct_fp", -1.0),
                val_metrics.get("auc", -1.0),
                -round_index,  # earliest round wins ties
            )
            if result.best_round is None or round_key > best_key:
                best_key = round_key
                result.best_round = round_index
                result.best_metrics = val_metrics
                result.best_state = {k: v.clone() for k, v in server_state.items()}

        if out_path is not None and round_index % cfg.checkpoint_every == 0:
            ckpt = save_checkpoint(
                out_path / f"round_{round_index:04d}", model, policy,
                epoch=round_index, metrics=val_metrics,
            )
            result.checkpoints.append(ckpt)

    if result.best_state is not None:
        model.load_state_dict(result.best_state)
        if out_path is not None:
            save_checkpoint(out_path / "best", model, policy,
                            epoch=result.best_round, metrics=result.best_metrics)
    return result
