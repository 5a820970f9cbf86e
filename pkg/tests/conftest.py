import random
from pathlib import Path

import pytest
from PIL import Image

from seshield.dataset.corpus import BENIGN, SE, LabeledImage


def make_png(path: Path, size=(32, 24), color=(120, 40, 200)) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", size, color).save(path, format="PNG")
    return path


def make_images(
    n: int,
    class_name: str,
    resolution=(256, 144),
    device_class="desktop",
    campaign=None,
    prefix="im",
) -> list[LabeledImage]:
    return [
        LabeledImage(
            id=f"{prefix}_{class_name}_{resolution[0]}x{resolution[1]}_{i:04d}",
            path=Path(f"/nonexistent/{prefix}_{i}.png"),
            resolution=resolution,
            device_class=device_class,
            class_name=class_name,
            campaign=campaign,
        )
        for i in range(n)
    ]


@pytest.fixture(scope="session")
def labeled_corpus() -> list[LabeledImage]:
    """Metadata-only corpus: 2 resolutions x (600 benign + campaigns of se)."""
    corpus = []
    corpus += make_images(350, BENIGN, (256, 144), prefix="a")
    corpus += make_images(350, BENIGN, (128, 256), "mobile", prefix="b")
    for k, count in enumerate((60, 80, 90, 70)):
        corpus += make_images(count, SE, (256, 144), campaign=f"camp_{k}", prefix=f"c{k}")
    for k, count in enumerate((60, 40, 120, 60)):
        corpus += make_images(
            count, SE, (128, 256), "mobile", campaign=f"camp_{k}", prefix=f"d{k}"
        )
    return corpus


@pytest.fixture(scope="session")
def synthetic_corpus_dir(tmp_path_factory):
    """Small on-disk synthetic corpus shared by training/eval tests."""
    from seshield.synthetic import generate_synthetic_corpus

    root = tmp_path_factory.mktemp("synthcorpus")
    images = generate_synthetic_corpus(root, seed=11, per_class_per_resolution=40)
    return root, images


def rng_for(name: str) -> random.Random:
    return random.Random(name)
