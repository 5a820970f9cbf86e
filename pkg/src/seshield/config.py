"""Run configuration: one versioned JSON document drives every subcommand."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import jsonschema

from .model.backbones import FAMILIES

SCHEMA = {
    "type": "object",
    "required": ["version", "seed", "paths"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": 1},
        "seed": {"type": "integer"},
        "paths": {
            "type": "object",
            "required": ["out_dir"],
            "additionalProperties": False,
            "properties": {
                "benign_root": {"type": "string"},
                "se_root": {"type": "string"},
                "labels": {"type": "array", "items": {"type": "string"}},
                "merge_file": {"type": ["string", "null"]},
                "out_dir": {"type": "string"},
                "corpus": {"type": "string"},
                "split": {"type": "string"},
                "checkpoint": {"type": "string"},
                "bundle": {"type": "string"},
                "probe_images": {"type": "string"},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": list(FAMILIES)},
                "pretrained_on": {"enum": ["none", "imagenet"]},
            },
        },
        "preprocess": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "desktop_scale": {"type": "integer", "minimum": 1},
                "mobile_scale": {"type": "integer", "minimum": 1},
                "min_dim": {"type": "integer", "minimum": 1},
            },
        },
        "fed": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "global_epochs": {"type": "integer", "minimum": 1},
                "client_epochs": {"type": "integer", "minimum": 1},
                "client_count": {"type": "integer", "minimum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
                "checkpoint_every": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "resample_each_round": {"type": "boolean"},
            },
        },
        "adversarial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon_pool": {"type": "array", "items": {"type": "number"}},
                "pgd_steps": {"type": "integer", "minimum": 1},
            },
        },
        "cluster": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "threshold": {"type": "integer", "minimum": 0, "maximum": 257},
            },
        },
        "augment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "per_cell_target": {"type": "integer", "minimum": 1},
            },
        },
        "split": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scenario": {
                    "enum": ["rq1_random", "rq2_leave_resolution_out",
                             "rq3_leave_campaign_out"],
                },
                "excluded_key": {"type": ["string", "null"]},
                "val_fraction": {"type": "number", "minimum": 0, "maximum": 0.5},
                "rq1_test_per_class": {"type": "integer", "minimum": 1},
                "rq2_max_per_campaign": {"type": "integer", "minimum": 1},
                "rq2_max_benign": {"type": "integer", "minimum": 1},
                "rq3_test_benign": {"type": "integer", "minimum": 1},
            },
        },
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilons": {"type": "array", "items": {"type": "number"}},
                "paper_format": {"type": "boolean"},
            },
        },
    },
}


class ConfigError(Exception):
    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message)


def load_config(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(str(e)) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from e
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as e:
        field_path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(e.message, field_path) from e
    return raw


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def file_hash(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
