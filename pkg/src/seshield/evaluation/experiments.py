"""Experiment protocols: random split, leave-resolution-out, leave-campaign-out.

Each runner builds the split(s), delegates training to an injected trainer
callable, scores the held-out set, and reports per-experiment metrics plus a
"Global" report computed by pooling every experiment's scores into one set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from ..dataset.corpus import LabeledImage
from ..dataset.splits import (
    RQ1_RANDOM,
    RQ2_LEAVE_RESOLUTION_OUT,
    RQ3_LEAVE_CAMPAIGN_OUT,
    DatasetSplit,
    SplitOptions,
    build_split,
)
from .metrics import EvalReport, ScoredExample, metrics_report

# Trainer: (train_images, val_images) -> scorer; scorer: (test_images) -> scores
TrainerFn = Callable[[list[LabeledImage], list[LabeledImage]], Callable]

# The leave-resolution-out experiment defaults to nine held-out screen sizes,
# five landscape and four portrait.
DEFAULT_HELDOUT_RESOLUTIONS = (
    "800x1280",
    "414x896",
    "768x1024",
    "360x640",
    "1366x768",
    "1920x998",
    "1478x837",
    "1536x824",
    "1366x728",
)


@dataclass
class ExperimentResult:
    name: str
    split: DatasetSplit
    scores: list[ScoredExample]
    report: EvalReport


@dataclass
class ProtocolResult:
    experiments: list[ExperimentResult]
    global_report: EvalReport
    global_scores: list[ScoredExample]


def pool_scores(score_sets: Sequence[list[ScoredExample]]) -> list[ScoredExample]:
    pooled: list[ScoredExample] = []
    for i, scores in enumerate(score_sets):
        for s in scores:
            pooled.append(ScoredExample(id=f"exp{i}:{s.id}", true_label=s.true_label,
                                        score_se=s.score_se))
    return pooled


def _subset(corpus: list[LabeledImage], ids: frozenset[str]) -> list[LabeledImage]:
    return [im for im in corpus if im.id in ids]


def _run_one(
    name: str,
    corpus: list[LabeledImage],
    split: DatasetSplit,
    trainer: TrainerFn,
) -> ExperimentResult:
    scorer = trainer(_subset(corpus, split.train_ids), _subset(corpus, split.val_ids))
    scores = scorer(_subset(corpus, split.test_ids))
    return ExperimentResult(name=name, split=split, scores=scores,
                            report=metrics_report(scores))


def run_rq1(
    corpus: list[LabeledImage],
    trainer: TrainerFn,
    seed: int,
    options: SplitOptions | None = None,
) -> ProtocolResult:
    split = build_split(corpus, RQ1_RANDOM, seed, options=options)
    result = _run_one("random_test", corpus, split, trainer)
    return ProtocolResult([result], result.report, result.scores)


def run_rq2(
    corpus: list[LabeledImage],
    trainer: TrainerFn,
    seed: int,
    resolutions: Sequence[str] = DEFAULT_HELDOUT_RESOLUTIONS,
    options: SplitOptions | None = None,
) -> ProtocolResult:
    experiments = []
    for key in resolutions:
        split = build_split(corpus, RQ2_LEAVE_RESOLUTION_OUT, seed,
                            excluded_key=key, options=options)
        experiments.append(_run_one(key, corpus, split, trainer))
    pooled = pool_scores([e.scores for e in experiments])
    return ProtocolResult(experiments, metrics_report(pooled), pooled)


def run_rq3(
    corpus: list[LabeledImage],
    trainer: TrainerFn,
    seed: int,
    campaigns: Sequence[str],
    options: SplitOptions | None = None,
) -> ProtocolResult:
    experiments = []
    for campaign in campaigns:
        split = build_split(corpus, RQ3_LEAVE_CAMPAIGN_OUT, seed,
                            excluded_key=campaign, options=options)
        experiments.append(_run_one(campaign, corpus, split, trainer))
    pooled = pool_scores([e.scores for e in experiments])
    return ProtocolResult(experiments, metrics_report(pooled), pooled)
