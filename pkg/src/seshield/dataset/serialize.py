"""JSON persistence for records, clusters, metaclusters, and corpus lists."""

from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path

from .clustering import Cluster
from .corpus import LabeledImage
from .metaclusters import Metacluster
from .records import ScreenshotRecord


def record_to_dict(rec: ScreenshotRecord) -> dict:
    return {
        "id": rec.id,
        "image_path": str(rec.image_path),
        "url": rec.url,
        "sld": rec.sld,
        "resolution": list(rec.resolution),
        "device_class": rec.device_class,
        "captured_at": rec.captured_at.isoformat(),
        "content_hash": rec.content_hash,
        "phash": f"{rec.phash:064x}",
    }


def record_from_dict(d: dict) -> ScreenshotRecord:
    return ScreenshotRecord(
        id=d["id"],
        image_path=Path(d["image_path"]),
        url=d["url"],
        sld=d["sld"],
        resolution=tuple(d["resolution"]),
        device_class=d["device_class"],
        captured_at=datetime.fromisoformat(d["captured_at"]),
        content_hash=d["content_hash"],
        phash=int(d["phash"], 16),
    )


def save_records(records: list[ScreenshotRecord], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([record_to_dict(r) for r in records], indent=1), encoding="utf-8"
    )


def load_records(path: str | Path) -> list[ScreenshotRecord]:
    return [record_from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]


def save_clusters(clusters: list[Cluster], path: str | Path) -> None:
    payload = [
        {"id": c.id, "member_ids": list(c.member_ids), "resolution": list(c.resolution)}
        for c in clusters
    ]
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_clusters(path: str | Path) -> list[Cluster]:
    return [
        Cluster(id=d["id"], member_ids=tuple(d["member_ids"]),
                resolution=tuple(d["resolution"]))
        for d in json.loads(Path(path).read_text(encoding="utf-8"))
    ]


def save_metaclusters(metaclusters: list[Metacluster], path: str | Path) -> None:
    payload = [
        {
            "id": m.id,
            "cluster_ids": list(m.cluster_ids),
            "campaign_name": m.campaign_name,
            "attack_category": m.attack_category,
            "label": m.label,
            "trainable": m.trainable,
        }
        for m in metaclusters
    ]
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_metaclusters(path: str | Path) -> list[Metacluster]:
    return [
        Metacluster(
            id=d["id"],
            cluster_ids=tuple(d["cluster_ids"]),
            campaign_name=d["campaign_name"],
            attack_category=d.get("attack_category"),
            label=d.get("label"),
            trainable=d.get("trainable", False),
        )
        for d in json.loads(Path(path).read_text(encoding="utf-8"))
    ]


def image_to_dict(im: LabeledImage) -> dict:
    return {
        "id": im.id,
        "path": str(im.path),
        "resolution": list(im.resolution),
        "device_class": im.device_class,
        "class_name": im.class_name,
        "campaign": im.campaign,
        "origin": im.origin,
        "source_id": im.source_id,
    }


def image_from_dict(d: dict) -> LabeledImage:
    return LabeledImage(
        id=d["id"],
        path=Path(d["path"]),
        resolution=tuple(d["resolution"]),
        device_class=d["device_class"],
        class_name=d["class_name"],
        campaign=d.get("campaign"),
        origin=d.get("origin", "original"),
        source_id=d.get("source_id"),
    )


def save_corpus(images: list[LabeledImage], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([image_to_dict(im) for im in images], indent=1), encoding="utf-8"
    )


def load_corpus(path: str | Path) -> list[LabeledImage]:
    return [image_from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]
