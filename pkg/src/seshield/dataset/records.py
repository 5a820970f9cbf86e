"""Crawl-output ingestion: one provenance record per captured screenshot.

Expected on-disk layout, produced by the crawler farm:

    <root>/<session>/traceback.json
    <root>/<session>/<device_profile>/<WxH>/<name>.png

``traceback.json`` is a JSON array of visit steps
``{"url": ..., "ts": ..., "action": "load"|"click"|"tab", "screenshot": relpath}``
where ``relpath`` is relative to the session directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from PIL import Image

from ..psl import sld_of_url
from .phash import perceptual_hash

TRACEBACK_NAME = "traceback.json"

_MOBILE_HINTS = ("mobile", "phone", "tablet", "android", "iphone", "ipad")


@dataclass(frozen=True)
class ScreenshotRecord:
    id: str
    image_path: Path
    url: str
    sld: str
    resolution: tuple[int, int]  # (width, height) read from the pixels
    device_class: str  # "desktop" | "mobile"
    captured_at: datetime
    content_hash: str  # 128-bit digest of the raw file bytes, hex
    phash: int  # 256-bit perceptual hash

    def with_resolution(self, resolution: tuple[int, int]) -> "ScreenshotRecord":
        return replace(self, resolution=resolution)


@dataclass
class IngestReport:
    warnings: list[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        self.warnings.append(message)


class IngestError(Exception):
    pass


def content_hash_of(path: Path) -> str:
    """Stable 128-bit digest of the file bytes (md5-format hex for interop)."""
    h = hashlib.md5()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def device_class_of(profile: str) -> str:
    low = profile.lower()
    return "mobile" if any(k in low for k in _MOBILE_HINTS) else "desktop"


def _parse_ts(value) -> datetime:
    if isinstance(value, (int, float)):
        return datetime.fromtimestamp(value, tz=timezone.utc)
    dt = datetime.fromisoformat(str(value))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def ingest_crawl_output(root_dir: str | Path) -> tuple[list[ScreenshotRecord], IngestReport]:
    """Walk crawl sessions under ``root_dir`` and build screenshot records.

    Files that fail image decoding, steps pointing at missing files, and
    directory-name/pixel-size mismatches are reported as warnings rather
    than silently dropped. A session without a traceback log is an error.
    """
    root = Path(root_dir)
    report = IngestReport()
    records: list[ScreenshotRecord] = []
    sessions = sorted(p for p in root.iterdir() if p.is_dir()) if root.is_dir() else []
    for session in sessions:
        log_path = session / TRACEBACK_NAME
        if not log_path.is_file():
            raise IngestError(f"missing traceback log in session directory: {session}")
        try:
            steps = json.loads(log_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise IngestError(f"unparseable traceback log {log_path}: {e}") from e
        for step in steps:
            rel = step.get("screenshot")
            if not rel:
                continue
            img_path = session / rel
            if not img_path.is_file():
                report.warn(f"{session.name}: screenshot missing on disk: {rel}")
                continue
            try:
                with Image.open(img_path) as im:
                    im.load()
                    width, height = im.size
                    phash = perceptual_hash(im)
            except Exception as e:  # Pillow raises various decode errors
                report.warn(f"{session.name}: undecodable image {rel}: {e}")
                continue
            parts = img_path.relative_to(session).parts
            profile = parts[0] if len(parts) >= 3 else "desktop"
            if len(parts) >= 3 and "x" in parts[1]:
                try:
                    dir_w, dir_h = (int(v) for v in parts[1].split("x"))
                    if (dir_w, dir_h) != (width, height):
                        report.warn(
                            f"{session.name}: {rel} directory says {dir_w}x{dir_h} "
                            f"but pixels are {width}x{height}; using pixels"
                        )
                except ValueError:
                    pass
            url = step["url"]
            records.append(
                ScreenshotRecord(
                    id=f"{session.name}/{rel}",
                    image_path=img_path,
                    url=url,
                    sld=sld_of_url(url),
                    resolution=(width, height),
                    device_class=device_class_of(profile),
                    captured_at=_parse_ts(step.get("ts", 0)),
                    content_hash=content_hash_of(img_path),
                    phash=phash,
                )
            )
    return records, report


def dedup(records: list[ScreenshotRecord]) -> list[ScreenshotRecord]:
    """Drop byte-identical captures of the same URL, keeping the first.

    Records with equal bytes but different URLs all survive, so the same
    attack page reached from different sites is never lost.
    """
    seen: set[tuple[str, str]] = set()
    out: list[ScreenshotRecord] = []
    for rec in records:
        key = (rec.content_hash, rec.url)
        if key in seen:
            continue
        seen.add(key)
        out.append(rec)
    return out


def bucket_by_resolution(
    records: list[ScreenshotRecord],
) -> dict[tuple[int, int], list[ScreenshotRecord]]:
    buckets: dict[tuple[int, int], list[ScreenshotRecord]] = {}
    for rec in records:
        buckets.setdefault(rec.resolution, []).append(rec)
    return buckets
