"""Expand a bucketed corpus to per-(resolution, class) target counts.

Each generated image picks one source image, one augmentation kind, and
random legal parameters from a counter-based RNG derived from
(plan seed, source id, generation index), so reruns are byte-identical.
Generated images are never re-augmented; lineage is one level deep and
recorded in a JSON sidecar next to each output file.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from ..dataset.corpus import LabeledImage
from .ops import KINDS, apply, draw_spec

PARAM_FREE_KINDS = ("invert", "grayscale")
PARAMETERIZED_KINDS = tuple(k for k in KINDS if k not in PARAM_FREE_KINDS)


class QuotaError(Exception):
    pass


@dataclass
class AugmentPlan:
    targets: dict[tuple[tuple[int, int], str], int]  # (resolution, class) -> count
    seed: int = 0

    @classmethod
    def uniform(
        cls, cells: list[tuple[tuple[int, int], str]], per_cell: int, seed: int = 0
    ) -> "AugmentPlan":
        return cls(targets={cell: per_cell for cell in cells}, seed=seed)


def _stable_int(*parts) -> int:
    digest = hashlib.md5("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def augment_to_quota(
    corpus: list[LabeledImage], plan: AugmentPlan, out_dir: str | Path
) -> list[LabeledImage]:
    """Return originals plus enough generated images to hit every target.

    Only original images serve as augmentation sources. A cell whose target
    exceeds its current count must contain at least one source image; targets
    below the current count keep the originals untouched (counts never shrink).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells: dict[tuple[tuple[int, int], str], list[LabeledImage]] = {}
    for im in corpus:
        if im.origin != "original":
            raise QuotaError(f"corpus already contains generated image {im.id}")
        cells.setdefault((im.resolution, im.class_name), []).append(im)

    result = list(corpus)
    for cell, target in sorted(plan.targets.items(), key=lambda kv: str(kv[0])):
        (w, h), class_name = cell
        sources = sorted(cells.get(cell, []), key=lambda im: im.id)
        needed = target - len(sources)
        if needed <= 0:
            continue
        if not sources:
            raise QuotaError(f"no source images for cell {w}x{h}/{class_name} (target {target})")
        cell_rng = random.Random(_stable_int(plan.seed, w, h, class_name))
        used_paramfree: set[tuple[str, str]] = set()
        for index in range(needed):
            source = sources[cell_rng.randrange(len(sources))]
            kind = KINDS[cell_rng.randrange(len(KINDS))]
            # Parameter-free kinds are byte-deterministic, so repeating one on
            # the same source would just duplicate an image: apply at most once.
            if kind in PARAM_FREE_KINDS:
                if (source.id, kind) in used_paramfree:
                    kind = PARAMETERIZED_KINDS[cell_rng.randrange(len(PARAMETERIZED_KINDS))]
                else:
                    used_paramfree.add((source.id, kind))
            gen_seed = _stable_int(plan.seed, source.id, index)
            spec = draw_spec(kind, random.Random(gen_seed), rng_seed=gen_seed)
            with Image.open(source.path) as img:
                out_img = apply(img, spec)
            name = f"aug_{w}x{h}_{class_name}_{index:05d}"
            out_path = out_dir / f"{name}.png"
            out_img.save(out_path, format="PNG")
            sidecar = {
                "source": source.id,
                "kind": spec.kind,
                "params": spec.params,
                "seed": gen_seed,
            }
            (out_dir / f"{name}.json").write_text(
                json.dumps(sidecar, sort_keys=True), encoding="utf-8"
            )
            result.append(
                source.derived(
                    id=name,
                    path=out_path,
                    origin="augmented",
                    source_id=source.id,
                )
            )
    return result


def reencode_jpeg(image: Image.Image, quality: int = 90) -> Image.Image:
    """Optional lossy re-encode step; disabled by default in the pipeline."""
    from io import BytesIO

    buf = BytesIO()
    image.convert("RGB").save(buf, format="JPEG", quality=quality)
    buf.seek(0)
    out = Image.open(buf)
    out.load()
    return out
