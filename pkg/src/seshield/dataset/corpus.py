"""Training-ready corpus: screenshots joined with class labels and campaigns."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .clustering import Cluster
from .metaclusters import Metacluster
from .records import ScreenshotRecord

BENIGN = "benign"
SE = "se"


@dataclass(frozen=True)
class LabeledImage:
    id: str
    path: Path
    resolution: tuple[int, int]
    device_class: str
    class_name: str  # "benign" | "se"
    campaign: str | None = None  # metacluster id for attack images
    origin: str = "original"  # "original" | "augmented"
    source_id: str | None = None  # originating image for augmented copies

    def derived(self, **changes) -> "LabeledImage":
        return replace(self, **changes)


def build_corpus(
    benign_records: list[ScreenshotRecord],
    se_records: list[ScreenshotRecord],
    clusters: list[Cluster],
    metaclusters: list[Metacluster],
) -> list[LabeledImage]:
    """Join labeled metaclusters with attack screenshots and benign provenance.

    Benign records bypass clustering entirely: anything captured by the
    popular-site crawl is labeled benign. Attack-side records survive only
    when their metacluster resolved to a trainable SSE/LSE label.
    """
    images = [
        LabeledImage(
            id=rec.id,
            path=rec.image_path,
            resolution=rec.resolution,
            device_class=rec.device_class,
            class_name=BENIGN,
        )
        for rec in benign_records
    ]
    cluster_by_id = {c.id: c for c in clusters}
    record_by_id = {r.id: r for r in se_records}
    for mc in metaclusters:
        if not mc.trainable or mc.label == "BENIGN":
            continue
        for cid in mc.cluster_ids:
            for rid in cluster_by_id[cid].member_ids:
                rec = record_by_id[rid]
                images.append(
                    LabeledImage(
                        id=rec.id,
                        path=rec.image_path,
                        resolution=rec.resolution,
                        device_class=rec.device_class,
                        class_name=SE,
                        campaign=mc.id,
                    )
                )
    return images
