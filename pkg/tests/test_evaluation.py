import math
import random

import pytest

from seshield.dataset.corpus import BENIGN, SE
from seshield.evaluation import (
    MetricsError,
    ScoredExample,
    confusion,
    dr_at_fp,
    metrics_report,
    pool_scores,
    rates_from_confusion,
    roc_auc,
    run_rq1,
    run_rq2,
    run_rq3,
    threshold_at_fp,
)


def scored(pairs):
    return [
        ScoredExample(id=f"s{i}", true_label=label, score_se=score)
        for i, (label, score) in enumerate(pairs)
    ]


def random_scored(rng, n_max=50, ties=True):
    n = rng.randint(4, n_max)
    out = []
    has = {BENIGN: False, SE: False}
    for i in range(n):
        label = rng.choice([BENIGN, SE])
        score = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]) if ties else rng.random()
        has[label] = True
        out.append(ScoredExample(id=f"r{i}", true_label=label, score_se=score))
    if not has[BENIGN]:
        out[0] = ScoredExample(id="r0", true_label=BENIGN, score_se=rng.random())
    if not has[SE]:
        out[1] = ScoredExample(id="r1", true_label=SE, score_se=rng.random())
    return out


def oracle_auc(examples):
    """Pairwise concordance count over all (positive, negative) pairs."""
    pos = [s.score_se for s in examples if s.true_label == SE]
    neg = [s.score_se for s in examples if s.true_label == BENIGN]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else (0.5 if p == n else 0.0)
    return total / (len(pos) * len(neg))


def oracle_dr_at_fp(examples, budget):
    """Exhaustive sweep over every candidate threshold."""
    pos = [s.score_se for s in examples if s.true_label == SE]
    neg = [s.score_se for s in examples if s.true_label == BENIGN]
    best = 0.0
    thresholds = sorted({s.score_se for s in examples} | {max(p for p in pos) + 1})
    for t in thresholds:
        fpr = sum(1 for v in neg if v >= t) / len(neg)
        if fpr <= budget:
            best = max(best, sum(1 for v in pos if v >= t) / len(pos))
    return best


class TestConfusion:
    def test_reference_operating_point(self):
        rates = rates_from_confusion(tn=498, fn=4, fp=2, tp=496)
        assert round(rates["precision"], 3) == 0.996
        assert round(rates["recall"], 3) == 0.992
        assert round(rates["f1"], 3) == 0.994
        assert round(rates["accuracy"], 3) == 0.994

    @pytest.mark.parametrize(
        "tn,fn,fp,tp,f1,recall,precision,accuracy",
        [
            (8674, 11, 83, 480, 0.911, 0.978, 0.853, 0.990),
            (4966, 68, 34, 529, 0.912, 0.886, 0.940, 0.982),
        ],
    )
    def test_pooled_rows(self, tn, fn, fp, tp, f1, recall, precision, accuracy):
        rates = rates_from_confusion(tn, fn, fp, tp)
        assert round(rates["f1"], 3) == f1
        assert round(rates["recall"], 3) == recall
        assert round(rates["precision"], 3) == precision
        assert round(rates["accuracy"], 3) == accuracy

    def test_all_confident_attacks(self):
        s = scored([(SE, 1.0)] * 7)
        assert confusion(s) == (0, 0, 0, 7)

    def test_threshold_zero_flags_everything(self):
        s = scored([(SE, 0.4), (BENIGN, 0.1), (BENIGN, 0.0)])
        tn, fn, fp, tp = confusion(s, threshold=0.0)
        assert (tn, fn) == (0, 0)
        assert fp == 2 and tp == 1

    def test_counts_partition_input(self):
        rng = random.Random(0)
        for _ in range(20):
            s = random_scored(rng)
            tn, fn, fp, tp = confusion(s, rng.random())
            assert tn + fn + fp + tp == len(s)

    def test_empty_input_rejected(self):
        with pytest.raises(MetricsError):
            confusion([])


class TestRocAuc:
    def test_perfect_separation(self):
        s = scored([(SE, 0.9), (SE, 0.8), (BENIGN, 0.2), (BENIGN, 0.1)])
        points, auc = roc_auc(s)
        assert auc == pytest.approx(1.0)
        assert points[0] == (0.0, 0.0)
        assert points[-1] == (1.0, 1.0)

    def test_random_scores_near_half(self):
        rng = random.Random(13)
        s = [
            ScoredExample(id=f"x{i}", true_label=rng.choice([BENIGN, SE]),
                          score_se=rng.random())
            for i in range(20_000)
        ]
        _, auc = roc_auc(s)
        assert abs(auc - 0.5) < 0.05

    def test_hand_case_matches_concordance_oracle(self):
        s = scored([
            (SE, 0.9), (BENIGN, 0.9), (SE, 0.7), (BENIGN, 0.4), (SE, 0.4), (BENIGN, 0.1),
        ])
        _, auc = roc_auc(s)
        assert auc == pytest.approx(oracle_auc(s), abs=1e-12)

    def test_random_sets_match_concordance_oracle(self):
        rng = random.Random(7)
        for _ in range(200):
            s = random_scored(rng)
            _, auc = roc_auc(s)
            assert auc == pytest.approx(oracle_auc(s), abs=1e-9)

    def test_monotone_curve(self):
        rng = random.Random(3)
        for _ in range(30):
            points, _ = roc_auc(random_scored(rng))
            for (f0, t0), (f1, t1) in zip(points, points[1:]):
                assert f1 >= f0 and t1 >= t0

    def test_single_class_rejected(self):
        with pytest.raises(MetricsError):
            roc_auc(scored([(SE, 0.5), (SE, 0.6)]))


class TestDrAtFp:
    def test_fully_separated_is_one(self):
        s = scored([(SE, 0.9), (SE, 0.8), (BENIGN, 0.2), (BENIGN, 0.1)])
        assert dr_at_fp(s, 0.01) == 1.0

    def test_hand_case_matches_exhaustive_oracle(self):
        s = scored([
            (SE, 0.95), (SE, 0.9), (SE, 0.62), (SE, 0.4), (SE, 0.1),
            (BENIGN, 0.7), (BENIGN, 0.6), (BENIGN, 0.3), (BENIGN, 0.2), (BENIGN, 0.05),
        ])
        for budget in (0.0, 0.01, 0.2, 0.4, 1.0):
            assert dr_at_fp(s, budget) == oracle_dr_at_fp(s, budget)

    def test_random_sets_match_exhaustive_oracle(self):
        rng = random.Random(23)
        for _ in range(200):
            s = random_scored(rng)
            budget = rng.choice([0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0])
            assert dr_at_fp(s, budget) == oracle_dr_at_fp(s, budget)

    def test_monotone_in_budget(self):
        rng = random.Random(29)
        for _ in range(30):
            s = random_scored(rng)
            values = [dr_at_fp(s, b) for b in (0.0, 0.05, 0.1, 0.3, 0.7, 1.0)]
            assert values == sorted(values)

    def test_budget_bounds_checked(self):
        s = scored([(SE, 0.9), (BENIGN, 0.1)])
        with pytest.raises(MetricsError):
            dr_at_fp(s, -0.1)
        with pytest.raises(MetricsError):
            dr_at_fp(s, 1.5)

    def test_tuned_threshold_respects_budget(self):
        rng = random.Random(31)
        for _ in range(50):
            s = random_scored(rng)
            t = threshold_at_fp(s, 0.1)
            neg = [x.score_se for x in s if x.true_label == BENIGN]
            assert sum(1 for v in neg if v >= t) / len(neg) <= 0.1 + 1e-9


class TestInvariances:
    def test_strictly_increasing_rescale_leaves_rank_metrics(self):
        rng = random.Random(37)
        for _ in range(40):
            s = random_scored(rng, ties=True)
            transformed = [
                ScoredExample(id=x.id, true_label=x.true_label,
                              score_se=math.tanh(2.5 * x.score_se) + 1.0)
                for x in s
            ]
            _, auc_a = roc_auc(s)
            _, auc_b = roc_auc(transformed)
            assert auc_a == pytest.approx(auc_b, abs=1e-12)
            assert dr_at_fp(s, 0.1) == dr_at_fp(transformed, 0.1)
            roc_a = [p for p, _ in [roc_auc(s)]][0]
            roc_b = [p for p, _ in [roc_auc(transformed)]][0]
            assert roc_a == roc_b

    def test_fixed_threshold_confusion_not_invariant(self):
        s = scored([(SE, 0.55), (BENIGN, 0.45)])
        shifted = [
            ScoredExample(id=x.id, true_label=x.true_label, score_se=x.score_se - 0.2)
            for x in s
        ]
        assert confusion(s, 0.5) != confusion(shifted, 0.5)

    def test_pooling_associativity(self):
        rng = random.Random(41)
        sets = [random_scored(rng) for _ in range(4)]
        pooled = pool_scores(sets)
        report = metrics_report(pooled)
        flat = [s for group in sets for s in group]
        tn, fn, fp, tp = confusion(flat)
        assert (report.tn, report.fn, report.fp, report.tp) == (tn, fn, fp, tp)
        _, auc = roc_auc(flat)
        assert report.auc == pytest.approx(auc, abs=1e-12)


class FakeTrainer:
    """Stands in for model training inside protocol runners."""

    def __init__(self, noise=0.05, seed=0):
        self.noise = noise
        self.rng = random.Random(seed)
        self.calls = []

    def __call__(self, train_images, val_images):
        self.calls.append((len(train_images), len(val_images)))
        train_ids = {im.id for im in train_images} | {im.id for im in val_images}

        def scorer(test_images):
            assert all(im.id not in train_ids for im in test_images)
            return [
                ScoredExample(
                    id=im.id,
                    true_label=im.class_name,
                    score_se=min(1.0, max(0.0, (
                        0.9 if im.class_name == SE else 0.1
                    ) + self.rng.uniform(-self.noise, self.noise))),
                )
                for im in test_images
            ]

        return scorer


class TestProtocolRunners:
    def test_rq1_balanced_report(self, labeled_corpus):
        from seshield.dataset.splits import SplitOptions

        trainer = FakeTrainer()
        result = run_rq1(labeled_corpus, trainer, seed=1,
                         options=SplitOptions(rq1_test_per_class=100))
        assert result.global_report.tn + result.global_report.fp == 100
        assert result.global_report.tp + result.global_report.fn == 100
        assert result.global_report.dr_at_fp[1] >= 0.99

    def test_rq2_global_pools_scores(self, labeled_corpus):
        trainer = FakeTrainer()
        result = run_rq2(labeled_corpus, trainer, seed=2,
                         resolutions=("256x144", "128x256"))
        assert len(result.experiments) == 2
        assert len(result.global_scores) == sum(
            len(e.scores) for e in result.experiments
        )
        from seshield.evaluation.metrics import metrics_report as mr

        again = mr(result.global_scores)
        assert again == result.global_report

    def test_rq3_runs_each_campaign(self, labeled_corpus):
        trainer = FakeTrainer()
        result = run_rq3(labeled_corpus, trainer, seed=3,
                         campaigns=("camp_0", "camp_1"))
        assert len(result.experiments) == 2
        assert trainer.calls and len(trainer.calls) == 2
