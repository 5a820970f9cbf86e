"""Checkpoint directories: a weights blob plus a self-describing manifest."""

from __future__ import annotations

import json
from pathlib import Path

import torch

from .backbones import AdaptedModel, BackboneSpec
from .preprocess import PreprocessPolicy

WEIGHTS_NAME = "weights.pt"
MANIFEST_NAME = "manifest.json"


class CheckpointError(Exception):
    pass


def save_checkpoint(
    directory: str | Path,
    model: AdaptedModel,
    policy: PreprocessPolicy,
    epoch: int = 0,
    metrics: dict | None = None,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), directory / WEIGHTS_NAME)
    manifest = {
        "family": model.family,
        "pretrained_on": model.spec.pretrained_on,
        "frozen_prefix": sorted(model.frozen_prefixes()),
        "preprocess": policy.to_manifest(),
        "epoch": epoch,
        "metrics": metrics or {},
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    return directory


def load_checkpoint(directory: str | Path) -> tuple[AdaptedModel, PreprocessPolicy, dict]:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    weights_path = directory / WEIGHTS_NAME
    if not manifest_path.is_file() or not weights_path.is_file():
        raise CheckpointError(f"{directory} is not a checkpoint directory")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        spec = BackboneSpec(
            family=manifest["family"],
            pretrained_on=manifest.get("pretrained_on", "none"),
            frozen_prefix=frozenset(manifest["frozen_prefix"]),
        )
        model = AdaptedModel(spec)
        model.load_state_dict(torch.load(weights_path, map_location="cpu", weights_only=True))
    except (KeyError, ValueError, RuntimeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint at {directory}: {e}") from e
    policy = PreprocessPolicy.from_manifest(manifest["preprocess"])
    return model, policy, manifest
