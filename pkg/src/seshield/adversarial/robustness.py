"""Robustness sweep: evaluation under attack at increasing noise budgets.

Attack-class test images are perturbed against the model under test; benign
images pass through clean, since only attack pages are attacker-controlled.
A budget of None is the clean baseline row.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import torch

from ..dataset.corpus import SE, LabeledImage
from ..evaluation.metrics import EvalReport, ScoredExample, metrics_report
from ..model.backbones import AdaptedModel
from ..model.batching import SizeBucketedBatcher, make_batches
from ..model.preprocess import PreprocessPolicy, normalized_bounds
from ..fedtrain.trainer import load_batch
from .pgd import PGDConfig, pgd_attack


def robustness_eval(
    model: AdaptedModel,
    test_set: list[LabeledImage],
    epsilons: Sequence[float],
    policy: PreprocessPolicy | None = None,
    pgd_steps: int = 10,
    seed: int = 0,
    attack_benign: bool = False,
) -> dict[float | None, EvalReport]:
    """One evaluation report per epsilon, with the clean (None) row included.

    Monotonicity of detection against epsilon is surfaced by the caller; no
    ordering is enforced here.
    """
    policy = policy or PreprocessPolicy.for_family(model.family)
    lo, hi = normalized_bounds(policy)
    batcher = SizeBucketedBatcher(batch_size=32, policy=policy)
    reports: dict[float | None, EvalReport] = {}
    for epsilon in [None, *epsilons]:
        scored: list[ScoredExample] = []
        generator = torch.Generator().manual_seed(seed)
        for batch in make_batches(test_set, batcher, seed=seed):
            inputs, labels = load_batch(batch, policy)
            if epsilon is not None and epsilon > 0:
                mask = (
                    torch.ones(len(batch), dtype=torch.bool)
                    if attack_benign
                    else labels == 1
                )
                if mask.any():
                    cfg = PGDConfig(epsilon=epsilon, steps=pgd_steps)
                    inputs[mask] = pgd_attack(
                        model, inputs[mask], labels[mask], cfg,
                        clip_min=lo, clip_max=hi, generator=generator,
                    )
            model.eval()
            with torch.no_grad():
                probs = model.predict_proba(inputs)
            for im, p in zip(batch, probs):
                scored.append(
                    ScoredExample(id=im.id, true_label=im.class_name, score_se=float(p[1]))
                )
        reports[epsilon] = metrics_report(scored)
    return reports


def write_robustness_csv(
    reports: dict[float | None, EvalReport], path: str | Path
) -> Path:
    """CSV sweep table: epsilon, rates, confusion counts, DR at 1% FP."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["epsilon", "F1", "recall", "precision", "accuracy",
                         "TN", "FN", "FP", "TP", "DR_at_1pct_FP"])
        for epsilon, r in reports.items():
            writer.writerow([
                "NONE" if epsilon is None else epsilon,
                round(r.f1, 4), round(r.recall, 4), round(r.precision, 4),
                round(r.accuracy, 4), r.tn, r.fn, r.fp, r.tp,
                round(r.dr_at_fp[1], 4),
            ])
    return path
