"""Human-curated campaign grouping and label application.

A merge file (JSON) groups pHash clusters, possibly across resolutions, into
named metaclusters; label files (CSV rows of metacluster_id,labeler_id,label)
carry the per-labeler verdicts. Labels resolve unanimously or fall back to
UNKNOWN, which excludes the metacluster from training.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .clustering import Cluster

LABELS = ("SSE", "LSE", "SUSPICIOUS", "UNKNOWN", "BENIGN")
TRAINABLE_LABELS = ("SSE", "LSE", "BENIGN")
ATTACK_CATEGORIES = (
    "fake_software_download",
    "notification_stealing",
    "service_signup_scam",
    "scareware",
    "sweepstakes",
    "tech_support_scam",
)


class MergeFileError(Exception):
    pass


class LabelError(Exception):
    pass


@dataclass(frozen=True)
class Metacluster:
    id: str
    cluster_ids: tuple[str, ...]
    campaign_name: str
    attack_category: str | None = None
    label: str | None = None
    trainable: bool = False


@dataclass(frozen=True)
class LabelRow:
    metacluster_id: str
    labeler_id: str
    label: str


@dataclass
class LabelFile:
    rows: list[LabelRow] = field(default_factory=list)

    @classmethod
    def load(cls, path: str | Path) -> "LabelFile":
        rows = []
        seen: set[tuple[str, str]] = set()
        with open(path, newline="", encoding="utf-8") as f:
            for raw in csv.reader(f):
                if not raw or raw[0].strip().lower() == "metacluster_id":
                    continue
                mc_id, labeler, label = (v.strip() for v in raw[:3])
                label = label.upper()
                if label not in LABELS:
                    raise LabelError(f"{path}: unknown label {label!r} for {mc_id}")
                if (mc_id, labeler) in seen:
                    raise LabelError(f"{path}: duplicate ({mc_id}, {labeler}) row")
                seen.add((mc_id, labeler))
                rows.append(LabelRow(mc_id, labeler, label))
        return cls(rows)

    @property
    def labeler_ids(self) -> set[str]:
        return {r.labeler_id for r in self.rows}


def merge_metaclusters(
    clusters: list[Cluster], merge_file: str | Path | None
) -> list[Metacluster]:
    """Form metaclusters from a curated merge file; rest become singletons.

    The merge file is ``[{"metacluster_name", "attack_category", "cluster_ids": [...]}]``.
    Unknown cluster ids and clusters claimed by two groups are rejected.
    """
    by_id = {c.id: c for c in clusters}
    groups: list[dict] = []
    if merge_file is not None:
        groups = json.loads(Path(merge_file).read_text(encoding="utf-8"))
    assigned: set[str] = set()
    metaclusters: list[Metacluster] = []
    for group in groups:
        name = group["metacluster_name"]
        category = group.get("attack_category")
        if category is not None and category not in ATTACK_CATEGORIES:
            raise MergeFileError(f"unknown attack_category {category!r} in group {name!r}")
        cluster_ids = list(group["cluster_ids"])
        for cid in cluster_ids:
            if cid not in by_id:
                raise MergeFileError(f"merge group {name!r} references unknown cluster {cid!r}")
            if cid in assigned:
                raise MergeFileError(f"cluster {cid!r} appears in more than one merge group")
            assigned.add(cid)
        metaclusters.append(
            Metacluster(
                id=name,
                cluster_ids=tuple(sorted(cluster_ids)),
                campaign_name=name,
                attack_category=category,
            )
        )
    for cluster in clusters:
        if cluster.id not in assigned:
            metaclusters.append(
                Metacluster(
                    id=f"mc-{cluster.id}",
                    cluster_ids=(cluster.id,),
                    campaign_name=f"mc-{cluster.id}",
                )
            )
    return metaclusters


def apply_labels(
    metaclusters: list[Metacluster], label_files: list[LabelFile]
) -> list[Metacluster]:
    """Resolve labels: unanimous verdict sticks, any disagreement yields UNKNOWN.

    The result depends only on the multiset of labels per metacluster, never
    on labeler order. Trainable = labeled SSE/LSE (attack class) or BENIGN.
    """
    if not label_files:
        raise LabelError("at least one label file is required")
    votes: dict[str, list[str]] = {}
    for lf in label_files:
        for row in lf.rows:
            votes.setdefault(row.metacluster_id, []).append(row.label)
    unlabeled = [mc.id for mc in metaclusters if mc.id not in votes]
    if unlabeled:
        raise LabelError(f"metaclusters with zero labels: {sorted(unlabeled)}")
    labeled = []
    for mc in metaclusters:
        unique = set(votes[mc.id])
        label = unique.pop() if len(unique) == 1 else "UNKNOWN"
        labeled.append(replace(mc, label=label, trainable=label in TRAINABLE_LABELS))
    return labeled
