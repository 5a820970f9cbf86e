"""Screenshot-to-tensor preprocessing: aspect-preserving downscale + normalize.

Desktop captures shrink by an integer divisor of 4, mobile captures by 2;
scaled dimensions round up (ceil) so nothing collapses to zero. Resampling is
half-pixel bilinear without antialiasing, chosen because it is cheap and
bit-reproducible across the training, export, and in-browser runtimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

# Channel statistics used for (x - mean) / std normalization, per family.
IMAGENET_NORM = ((0.485, 0.456, 0.406), (0.229, 0.224, 0.225))
UNIT_NORM = ((0.5, 0.5, 0.5), (0.5, 0.5, 0.5))

FAMILY_NORM = {
    "vgg19": IMAGENET_NORM,
    "vgg16": IMAGENET_NORM,
    "resnet50v2": IMAGENET_NORM,
    "inception_resnet_v2": IMAGENET_NORM,
    "xception": IMAGENET_NORM,
    "mobilenet_v2": IMAGENET_NORM,
    "tinyconv": UNIT_NORM,
}


class PreprocessError(Exception):
    pass


@dataclass(frozen=True)
class PreprocessPolicy:
    desktop_scale: int = 4
    mobile_scale: int = 2
    min_dim: int = 32
    normalize: tuple[tuple[float, float, float], tuple[float, float, float]] = IMAGENET_NORM

    @classmethod
    def for_family(cls, family: str, **overrides) -> "PreprocessPolicy":
        return cls(normalize=FAMILY_NORM[family], **overrides)

    def divisor(self, device_class: str) -> int:
        return self.desktop_scale if device_class == "desktop" else self.mobile_scale

    def scaled_size(self, resolution: tuple[int, int], device_class: str) -> tuple[int, int]:
        """Post-scale (width, height) under the ceil rounding rule."""
        s = self.divisor(device_class)
        return math.ceil(resolution[0] / s), math.ceil(resolution[1] / s)

    def to_manifest(self) -> dict:
        mean, std = self.normalize
        return {
            "desktop_scale": self.desktop_scale,
            "mobile_scale": self.mobile_scale,
            "min_dim": self.min_dim,
            "rounding": "ceil",
            "resample": "bilinear_half_pixel",
            "normalize": {"mean": list(mean), "std": list(std)},
        }

    @classmethod
    def from_manifest(cls, d: dict) -> "PreprocessPolicy":
        norm = d["normalize"]
        return cls(
            desktop_scale=d["desktop_scale"],
            mobile_scale=d["mobile_scale"],
            min_dim=d["min_dim"],
            normalize=(tuple(norm["mean"]), tuple(norm["std"])),
        )


def load_image(path: str | Path) -> torch.Tensor:
    """Decode to a float32 CHW tensor in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


def preprocess_tensor(
    chw: torch.Tensor, device_class: str, policy: PreprocessPolicy, name: str = "<tensor>"
) -> torch.Tensor:
    """Scale + normalize an already-decoded [0,1] CHW tensor."""
    h, w = chw.shape[1], chw.shape[2]
    out_w, out_h = policy.scaled_size((w, h), device_class)
    if out_w < policy.min_dim or out_h < policy.min_dim:
        raise PreprocessError(
            f"{name}: scaled size {out_w}x{out_h} below minimum {policy.min_dim}"
        )
    scaled = F.interpolate(
        chw.unsqueeze(0), size=(out_h, out_w), mode="bilinear",
        align_corners=False, antialias=False,
    )[0]
    mean, std = policy.normalize
    mean_t = torch.tensor(mean, dtype=scaled.dtype).view(3, 1, 1)
    std_t = torch.tensor(std, dtype=scaled.dtype).view(3, 1, 1)
    return (scaled - mean_t) / std_t


def preprocess(record, policy: PreprocessPolicy) -> torch.Tensor:
    """Preprocess anything with .path and .device_class (records, corpus images)."""
    chw = load_image(record.path if hasattr(record, "path") else record.image_path)
    name = getattr(record, "id", str(record))
    return preprocess_tensor(chw, record.device_class, policy, name=name)


def normalized_bounds(policy: PreprocessPolicy) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-channel tensor bounds corresponding to raw pixels in [0, 1]."""
    mean, std = policy.normalize
    lo = torch.tensor([(0.0 - m) / s for m, s in zip(mean, std)]).view(3, 1, 1)
    hi = torch.tensor([(1.0 - m) / s for m, s in zip(mean, std)]).view(3, 1, 1)
    return lo, hi
