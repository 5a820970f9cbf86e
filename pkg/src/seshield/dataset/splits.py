"""Reproducible train/val/test splits for the three evaluation protocols.

Scenarios:
  rq1_random              random held-out test set (default 500 benign + 500 attack)
  rq2_leave_resolution_out test on one screen size absent from training
  rq3_leave_campaign_out   test on one attack campaign absent from training
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import BENIGN, SE, LabeledImage

RQ1_RANDOM = "rq1_random"
RQ2_LEAVE_RESOLUTION_OUT = "rq2_leave_resolution_out"
RQ3_LEAVE_CAMPAIGN_OUT = "rq3_leave_campaign_out"
SCENARIOS = (RQ1_RANDOM, RQ2_LEAVE_RESOLUTION_OUT, RQ3_LEAVE_CAMPAIGN_OUT)

# Test-set composition defaults, mirroring the evaluation protocol:
# a balanced random test for rq1; per-resolution caps for rq2.
RQ1_TEST_PER_CLASS = 500
RQ2_MAX_PER_CAMPAIGN = 10
RQ2_MAX_BENIGN = 1000
RQ3_TEST_BENIGN = 500


class SplitError(Exception):
    pass


@dataclass(frozen=True)
class DatasetSplit:
    scenario: str
    seed: int
    train_ids: frozenset[str]
    val_ids: frozenset[str]
    test_ids: frozenset[str]
    excluded_key: str | None = None

    def validate(self) -> None:
        if self.train_ids & self.test_ids or self.train_ids & self.val_ids or (
            self.val_ids & self.test_ids
        ):
            raise SplitError("train/val/test overlap")

    def to_manifest(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "excluded_key": self.excluded_key,
            "train_ids": sorted(self.train_ids),
            "val_ids": sorted(self.val_ids),
            "test_ids": sorted(self.test_ids),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_manifest(), indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetSplit":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            scenario=d["scenario"],
            seed=d["seed"],
            excluded_key=d.get("excluded_key"),
            train_ids=frozenset(d["train_ids"]),
            val_ids=frozenset(d["val_ids"]),
            test_ids=frozenset(d["test_ids"]),
        )


def _resolution_key(resolution: tuple[int, int]) -> str:
    return f"{resolution[0]}x{resolution[1]}"


def parse_resolution_key(key: str) -> tuple[int, int]:
    w, h = key.split("x")
    return int(w), int(h)


@dataclass
class SplitOptions:
    val_fraction: float = 0.1
    rq1_test_per_class: int = RQ1_TEST_PER_CLASS
    rq2_max_per_campaign: int = RQ2_MAX_PER_CAMPAIGN
    rq2_max_benign: int = RQ2_MAX_BENIGN
    rq3_test_benign: int = RQ3_TEST_BENIGN
    extra: dict = field(default_factory=dict)


def build_split(
    corpus: list[LabeledImage],
    scenario: str,
    seed: int,
    excluded_key: str | None = None,
    options: SplitOptions | None = None,
) -> DatasetSplit:
    """Build a deterministic split; same (corpus, scenario, seed) => same split."""
    options = options or SplitOptions()
    if scenario not in SCENARIOS:
        raise SplitError(f"unknown scenario {scenario!r}")
    originals = sorted((im for im in corpus if im.origin == "original"), key=lambda im: im.id)
    rng = random.Random((seed, scenario, excluded_key).__repr__())
    benign = [im for im in originals if im.class_name == BENIGN]
    attacks = [im for im in originals if im.class_name == SE]

    if scenario == RQ1_RANDOM:
        n = options.rq1_test_per_class
        if len(benign) < n or len(attacks) < n:
            raise SplitError(
                f"need at least {n} images per class for a random test split, "
                f"have {len(benign)} benign / {len(attacks)} attack"
            )
        test = rng.sample(benign, n) + rng.sample(attacks, n)
        test_ids = {im.id for im in test}
        rest = [im for im in originals if im.id not in test_ids]
    elif scenario == RQ2_LEAVE_RESOLUTION_OUT:
        if excluded_key is None:
            raise SplitError("rq2 requires an excluded resolution, e.g. 1366x728")
        resolution = parse_resolution_key(excluded_key)
        held = [im for im in originals if im.resolution == resolution]
        if not held:
            raise SplitError(f"no screenshots at resolution {excluded_key}")
        rest = [im for im in originals if im.resolution != resolution]
        train_campaigns = {im.campaign for im in rest if im.class_name == SE}
        by_campaign: dict[str, list[LabeledImage]] = {}
        for im in held:
            if im.class_name == SE:
                by_campaign.setdefault(im.campaign, []).append(im)
        test: list[LabeledImage] = []
        for campaign in sorted(by_campaign):
            if campaign not in train_campaigns:
                continue  # campaign must be seen in training at another size
            pool = by_campaign[campaign]
            take = min(len(pool), options.rq2_max_per_campaign)
            test.extend(rng.sample(pool, take))
        held_benign = [im for im in held if im.class_name == BENIGN]
        take = min(len(held_benign), options.rq2_max_benign)
        test.extend(rng.sample(held_benign, take))
        test_ids = {im.id for im in test}
    else:  # RQ3_LEAVE_CAMPAIGN_OUT
        if excluded_key is None:
            raise SplitError("rq3 requires an excluded campaign id")
        held = [im for im in attacks if im.campaign == excluded_key]
        if not held:
            raise SplitError(f"no screenshots for campaign {excluded_key!r}")
        take = min(len(benign), options.rq3_test_benign)
        test = held + rng.sample(benign, take)
        test_ids = {im.id for im in test}
        rest = [im for im in originals if im.id not in test_ids]

    rest_ids = sorted(im.id for im in rest if im.id not in test_ids)
    rng.shuffle(rest_ids)
    n_val = int(len(rest_ids) * options.val_fraction)
    val_ids = set(rest_ids[:n_val])
    train_ids = set(rest_ids[n_val:])

    if scenario == RQ2_LEAVE_RESOLUTION_OUT:
        # The val carve must not strip a test campaign's last training image.
        by_id = {im.id: im for im in rest}
        test_campaigns = {
            im.campaign for im in originals if im.id in test_ids and im.class_name == SE
        }
        covered = {by_id[i].campaign for i in train_ids if by_id[i].class_name == SE}
        for campaign in sorted(c for c in test_campaigns if c not in covered):
            movable = sorted(i for i in val_ids if by_id[i].campaign == campaign)
            if movable:
                val_ids.discard(movable[0])
                train_ids.add(movable[0])
    split = DatasetSplit(
        scenario=scenario,
        seed=seed,
        excluded_key=excluded_key,
        train_ids=frozenset(train_ids),
        val_ids=frozenset(val_ids),
        test_ids=frozenset(test_ids),
    )
    split.validate()
    return split
