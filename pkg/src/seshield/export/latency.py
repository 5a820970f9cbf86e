"""End-to-end latency measurement for an exported bundle."""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
from PIL import Image

from .runtime import BundleError, BundleRuntime


def latency_probe(
    bundle_dir: str | Path,
    image_paths: list[str | Path],
    device_class: str = "desktop",
    repeats: int = 3,
) -> dict:
    """Time capture-simulation (decode) + preprocess + inference per image.

    Returns millisecond percentiles over repeats x images runs.
    """
    if not image_paths:
        raise BundleError("latency probe needs at least one image")
    runtime = BundleRuntime(bundle_dir)
    samples_ms: list[float] = []
    for _ in range(repeats):
        for path in image_paths:
            started = time.perf_counter()
            with Image.open(path) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
            chw = np.transpose(arr, (2, 0, 1))
            runtime.score(chw, device_class)
            samples_ms.append((time.perf_counter() - started) * 1000)
    samples_ms.sort()
    return {
        "n": len(samples_ms),
        "p50_ms": float(np.percentile(samples_ms, 50)),
        "p95_ms": float(np.percentile(samples_ms, 95)),
        "mean_ms": float(np.mean(samples_ms)),
    }
