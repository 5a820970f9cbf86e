"""Synthetic two-class screenshot corpus for desk-scale experiments.

Attack-class pages carry a prominent dialog-box motif (alert header, message
body, action buttons) over a muted page; benign pages are plain text-like
layouts. Motif geometry and palette are drawn per campaign so leave-one-
campaign-out experiments have coherent held-out groups.
"""

from __future__ import annotations

import random
from pathlib import Path

from PIL import Image, ImageDraw

from .dataset.corpus import BENIGN, SE, LabeledImage

DEFAULT_RESOLUTIONS = (
    ((256, 144), "desktop"),
    ((224, 128), "desktop"),
    ((128, 256), "mobile"),
)

_CAMPAIGN_PALETTES = (
    ((220, 53, 53), (255, 210, 80)),   # red alert, yellow buttons
    ((30, 90, 200), (240, 240, 255)),  # blue dialog, pale buttons
    ((240, 130, 20), (90, 30, 10)),    # orange scare banner
    ((20, 150, 90), (230, 255, 240)),  # green prize box
)


def _benign_page(draw: ImageDraw.ImageDraw, w: int, h: int, rng: random.Random) -> None:
    base = rng.randint(225, 250)
    draw.rectangle([0, 0, w, h], fill=(base, base, min(255, base + 4)))
    header = rng.randint(h // 14, h // 8)
    tone = rng.randint(170, 210)
    draw.rectangle([0, 0, w, header], fill=(tone, tone, tone))
    y = header + rng.randint(4, 10)
    while y < h - 6:
        line_w = rng.randint(int(w * 0.5), int(w * 0.92))
        gray = rng.randint(90, 150)
        draw.rectangle([6, y, 6 + line_w, y + 2], fill=(gray, gray, gray))
        y += rng.randint(6, 12)


def _dialog_page(
    draw: ImageDraw.ImageDraw, w: int, h: int, rng: random.Random, campaign_idx: int
) -> None:
    _benign_page(draw, w, h, rng)  # dialogs render on top of an ordinary page
    primary, accent = _CAMPAIGN_PALETTES[campaign_idx % len(_CAMPAIGN_PALETTES)]
    box_w = int(w * rng.uniform(0.55, 0.8))
    box_h = int(h * rng.uniform(0.4, 0.6))
    x0 = (w - box_w) // 2 + rng.randint(-w // 20, w // 20)
    y0 = (h - box_h) // 2 + rng.randint(-h // 20, h // 20)
    x1, y1 = x0 + box_w, y0 + box_h
    draw.rectangle([x0 - 2, y0 - 2, x1 + 2, y1 + 2], fill=(40, 40, 40))
    draw.rectangle([x0, y0, x1, y1], fill=(252, 252, 252))
    head_h = max(6, box_h // 4)
    draw.rectangle([x0, y0, x1, y0 + head_h], fill=primary)
    for k in range(3):
        ty = y0 + head_h + 4 + k * max(4, box_h // 10)
        tx1 = x1 - rng.randint(4, max(5, box_w // 6))
        if ty + 2 < y1 - head_h and tx1 > x0 + 3:
            draw.rectangle([x0 + 3, ty, tx1, ty + 2], fill=(70, 70, 70))
    btn_w = max(6, box_w // 3)
    btn_h = max(4, box_h // 6)
    by = max(y0 + head_h + 2, y1 - btn_h - 3)
    if by + btn_h <= y1 and x0 + 3 + btn_w < x1 - 3:
        draw.rectangle([x0 + 3, by, x0 + 3 + btn_w, by + btn_h], fill=accent)
        draw.rectangle([x1 - 3 - btn_w, by, x1 - 3, by + btn_h], fill=primary)


def generate_synthetic_corpus(
    out_dir: str | Path,
    seed: int = 0,
    per_class_per_resolution: int = 100,
    resolutions=DEFAULT_RESOLUTIONS,
    n_campaigns: int = 4,
) -> list[LabeledImage]:
    """Render the corpus to PNG files and return the labeled image list."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images: list[LabeledImage] = []
    for (w, h), device_class in resolutions:
        for class_name in (BENIGN, SE):
            for i in range(per_class_per_resolution):
                rng = random.Random((seed, w, h, class_name, i).__repr__())
                campaign_idx = i % n_campaigns if class_name == SE else None
                img = Image.new("RGB", (w, h))
                draw = ImageDraw.Draw(img)
                if class_name == SE:
                    _dialog_page(draw, w, h, rng, campaign_idx)
                else:
                    _benign_page(draw, w, h, rng)
                name = f"{class_name}_{w}x{h}_{i:04d}"
                path = out / f"{name}.png"
                img.save(path, format="PNG")
                images.append(
                    LabeledImage(
                        id=name,
                        path=path,
                        resolution=(w, h),
                        device_class=device_class,
                        class_name=class_name,
                        campaign=(
                            f"motif_{campaign_idx}" if class_name == SE else None
                        ),
                    )
                )
    return images
