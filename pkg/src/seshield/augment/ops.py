"""The eight size-preserving screenshot augmentations.

Geometric flips/rotations are deliberately absent: they would corrupt text
readability and page orientation. Every kind returns an image of the input's
exact dimensions; scale_crop upsamples 10-20% anchored at a page corner and
crops back to the original size.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageEnhance, ImageOps
from torchvision.transforms import functional as TF

KINDS = (
    "invert",
    "grayscale",
    "scale_crop",
    "hue",
    "saturation",
    "contrast",
    "brightness",
    "solarize",
)

HUE_RANGE = (-0.5, 0.5)
FACTOR_RANGE = (0.10, 2.50)  # saturation / contrast / brightness
SCALE_RANGE = (1.10, 1.20)
SOLARIZE_RANGE = (0.0, 255.0)
ANCHORS = ("top_left", "top_right", "bottom_left", "bottom_right")


class AugmentationError(Exception):
    pass


@dataclass(frozen=True)
class AugmentationSpec:
    kind: str
    params: dict = field(default_factory=dict)
    rng_seed: int = 0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise AugmentationError(f"unknown augmentation kind {self.kind!r}")
        p = self.params
        if self.kind in ("invert", "grayscale"):
            if p:
                raise AugmentationError(f"{self.kind} takes no parameters, got {p}")
        elif self.kind == "hue":
            _require_range(p, "delta", *HUE_RANGE)
        elif self.kind in ("saturation", "contrast", "brightness"):
            _require_range(p, "factor", *FACTOR_RANGE)
        elif self.kind == "scale_crop":
            _require_range(p, "scale", *SCALE_RANGE)
            if p.get("anchor") not in ANCHORS:
                raise AugmentationError(f"scale_crop anchor must be one of {ANCHORS}")
        elif self.kind == "solarize":
            _require_range(p, "threshold", *SOLARIZE_RANGE)


def _require_range(params: dict, key: str, lo: float, hi: float) -> None:
    if key not in params:
        raise AugmentationError(f"missing parameter {key!r}")
    v = params[key]
    if not (lo <= v <= hi):
        raise AugmentationError(f"{key}={v} outside [{lo}, {hi}]")


def draw_spec(kind: str, rng: random.Random, rng_seed: int = 0) -> AugmentationSpec:
    """Draw legal parameters for ``kind`` uniformly at random."""
    if kind == "hue":
        params = {"delta": rng.uniform(*HUE_RANGE)}
    elif kind in ("saturation", "contrast", "brightness"):
        params = {"factor": rng.uniform(*FACTOR_RANGE)}
    elif kind == "scale_crop":
        params = {"scale": rng.uniform(*SCALE_RANGE), "anchor": rng.choice(ANCHORS)}
    elif kind == "solarize":
        params = {"threshold": rng.uniform(*SOLARIZE_RANGE)}
    else:
        params = {}
    return AugmentationSpec(kind=kind, params=params, rng_seed=rng_seed)


def apply(image: Image.Image, spec: AugmentationSpec) -> Image.Image:
    """Apply one augmentation; output size always equals input size."""
    spec.validate()
    image = image.convert("RGB")
    kind, p = spec.kind, spec.params
    if kind == "invert":
        return ImageOps.invert(image)
    if kind == "grayscale":
        return image.convert("L").convert("RGB")
    if kind == "hue":
        return TF.adjust_hue(image, p["delta"])
    if kind == "saturation":
        return ImageEnhance.Color(image).enhance(p["factor"])
    if kind == "contrast":
        return ImageEnhance.Contrast(image).enhance(p["factor"])
    if kind == "brightness":
        return ImageEnhance.Brightness(image).enhance(p["factor"])
    if kind == "solarize":
        arr = np.asarray(image)
        out = np.where(arr > p["threshold"], 255 - arr, arr).astype(np.uint8)
        return Image.fromarray(out)
    # scale_crop: enlarge, then cut a window of the original size stuck to
    # the chosen corner ("scaled from random edges, not from the center").
    w, h = image.size
    scale = p["scale"]
    big = image.resize((max(w + 1, round(w * scale)), max(h + 1, round(h * scale))), Image.BILINEAR)
    bw, bh = big.size
    left = 0 if "left" in p["anchor"] else bw - w
    top = 0 if "top" in p["anchor"] else bh - h
    return big.crop((left, top, left + w, top + h))
