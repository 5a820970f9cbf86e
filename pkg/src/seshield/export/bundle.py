"""Self-describing inference bundle for the in-browser runtime.

Layout: ``model.json`` (op graph + weight manifest), ``group*.bin`` float32
shards, ``preprocess.json`` (scale rule + normalization), and ``card.json``
(family, run id, metrics, tuned alert threshold). Batch normalization is
folded into the preceding convolution at export time, so runtimes only need
conv / pool / add / global-max-pool / dense / softmax kernels.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..model.backbones import AdaptedModel
from ..model.checkpoint import load_checkpoint
from ..model.preprocess import PreprocessPolicy

FORMAT_NAME = "seshield.webbundle"
FORMAT_VERSION = 1
SHARD_BYTES = 4 * 1024 * 1024

EXPORTABLE_FAMILIES = ("vgg19", "vgg16", "mobilenet_v2", "tinyconv")


class ExportError(Exception):
    pass


class _GraphBuilder:
    def __init__(self):
        self.ops: list[dict] = []
        self.weights: dict[str, np.ndarray] = {}
        self.counter = 0

    def fresh(self, kind: str) -> str:
        self.counter += 1
        return f"{kind}_{self.counter}"

    def add_weights(self, name: str, value: torch.Tensor) -> str:
        self.weights[name] = value.detach().numpy().astype(np.float32)
        return name

    def conv(self, src: str, conv: nn.Conv2d, bn: nn.BatchNorm2d | None,
             activation: str | None) -> str:
        w = conv.weight.detach().clone()
        b = (conv.bias.detach().clone() if conv.bias is not None
             else torch.zeros(conv.out_channels))
        if bn is not None:
            factor = bn.weight / torch.sqrt(bn.running_var + bn.eps)
            w = w * factor.view(-1, 1, 1, 1)
            b = bn.bias + (b - bn.running_mean) * factor
        name = self.fresh("conv")
        self.ops.append({
            "name": name,
            "type": "conv2d",
            "input": src,
            "weights": self.add_weights(f"{name}.w", w),
            "bias": self.add_weights(f"{name}.b", b),
            "stride": list(conv.stride),
            "padding": list(conv.padding),
            "groups": conv.groups,
            "activation": activation,
        })
        return name

    def maxpool(self, src: str, pool: nn.MaxPool2d) -> str:
        name = self.fresh("pool")
        size = pool.kernel_size if isinstance(pool.kernel_size, tuple) else (
            pool.kernel_size, pool.kernel_size)
        stride = pool.stride if isinstance(pool.stride, tuple) else (
            pool.stride, pool.stride)
        padding = pool.padding if isinstance(pool.padding, tuple) else (
            pool.padding, pool.padding)
        self.ops.append({
            "name": name, "type": "maxpool2d", "input": src,
            "size": list(size), "stride": list(stride), "padding": list(padding),
        })
        return name

    def add(self, a: str, b: str) -> str:
        name = self.fresh("add")
        self.ops.append({"name": name, "type": "add", "inputs": [a, b]})
        return name

    def global_max_pool(self, src: str) -> str:
        name = self.fresh("gmp")
        self.ops.append({"name": name, "type": "global_max_pool", "input": src})
        return name

    def dense(self, src: str, layer: nn.Linear) -> str:
        name = self.fresh("dense")
        self.ops.append({
            "name": name, "type": "dense", "input": src,
            "weights": self.add_weights(f"{name}.w", layer.weight.detach()),
            "bias": self.add_weights(f"{name}.b", layer.bias.detach()),
        })
        return name

    def softmax(self, src: str) -> str:
        name = self.fresh("softmax")
        self.ops.append({"name": name, "type": "softmax", "input": src})
        return name


def _export_plain_sequence(builder: _GraphBuilder, modules, src: str) -> str:
    """Conv/ReLU/MaxPool chains (the vgg and tinyconv feature stacks)."""
    pending_conv: nn.Conv2d | None = None
    for module in modules:
        if isinstance(module, nn.Conv2d):
            if pending_conv is not None:
                src = builder.conv(src, pending_conv, None, None)
            pending_conv = module
        elif isinstance(module, nn.ReLU):
            if pending_conv is None:
                raise ExportError("activation without preceding convolution")
            src = builder.conv(src, pending_conv, None, "relu")
            pending_conv = None
        elif isinstance(module, nn.MaxPool2d):
            if pending_conv is not None:
                src = builder.conv(src, pending_conv, None, None)
                pending_conv = None
            src = builder.maxpool(src, module)
        else:
            raise ExportError(f"unsupported op in feature stack: {type(module).__name__}")
    if pending_conv is not None:
        src = builder.conv(src, pending_conv, None, None)
    return src


def _export_conv_bn_act(builder: _GraphBuilder, block: nn.Sequential, src: str) -> str:
    conv, bn = block[0], block[1]
    act = None
    if len(block) > 2:
        act = {"ReLU6": "relu6", "ReLU": "relu"}.get(type(block[2]).__name__)
        if act is None:
            raise ExportError(f"unsupported activation {type(block[2]).__name__}")
    return builder.conv(src, conv, bn, act)


def _export_mobilenet(builder: _GraphBuilder, features: nn.Sequential, src: str) -> str:
    for block in features:
        if type(block).__name__ == "Conv2dNormActivation":
            src = _export_conv_bn_act(builder, block, src)
        elif type(block).__name__ == "InvertedResidual":
            entry = src
            seq = list(block.conv)
            i = 0
            while i < len(seq):
                m = seq[i]
                if type(m).__name__ == "Conv2dNormActivation":
                    src = _export_conv_bn_act(builder, m, src)
                    i += 1
                elif isinstance(m, nn.Conv2d):
                    bn = seq[i + 1] if i + 1 < len(seq) and isinstance(
                        seq[i + 1], nn.BatchNorm2d) else None
                    src = builder.conv(src, m, bn, None)
                    i += 2 if bn is not None else 1
                else:
                    raise ExportError(f"unsupported op in residual block: {type(m).__name__}")
            if block.use_res_connect:
                src = builder.add(entry, src)
        else:
            raise ExportError(f"unsupported block {type(block).__name__}")
    return src


def build_graph(model: AdaptedModel) -> _GraphBuilder:
    if model.family not in EXPORTABLE_FAMILIES:
        unsupported = sorted({
            type(m).__name__
            for m in model.features.modules()
            if not isinstance(m, (nn.Conv2d, nn.ReLU, nn.MaxPool2d, nn.Sequential))
        })
        raise ExportError(
            f"family {model.family!r} uses ops unsupported by the web runtime: "
            f"{', '.join(unsupported) or 'none detected'}"
        )
    builder = _GraphBuilder()
    src = "input"
    if model.family == "mobilenet_v2":
        src = _export_mobilenet(builder, model.features, src)
    else:
        src = _export_plain_sequence(builder, model.features, src)
    src = builder.global_max_pool(src)
    src = builder.dense(src, model.head)
    builder.softmax(src)
    return builder


def _write_shards(weights: dict[str, np.ndarray], out_dir: Path) -> list[dict]:
    manifest = []
    shard_index, shard_bytes, shard_entries = 1, b"", []

    def flush():
        nonlocal shard_index, shard_bytes, shard_entries
        if shard_entries:
            path = out_dir / f"group{shard_index}.bin"
            path.write_bytes(shard_bytes)
            manifest.append({"path": path.name, "tensors": shard_entries})
            shard_index += 1
            shard_bytes, shard_entries = b"", []

    for name, arr in weights.items():
        data = np.ascontiguousarray(arr, dtype=np.float32).tobytes()
        if shard_bytes and len(shard_bytes) + len(data) > SHARD_BYTES:
            flush()
        shard_entries.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": "float32",
            "byte_offset": len(shard_bytes),
            "byte_length": len(data),
        })
        shard_bytes += data
    flush()
    return manifest


def export_web(
    checkpoint_dir: str | Path,
    out_dir: str | Path,
    alert_threshold: float | None = None,
) -> Path:
    """Convert a checkpoint into a web bundle directory.

    The alert threshold defaults to the checkpoint's recorded operating
    threshold (tuned for the FP budget) and falls back to 0.5.
    """
    model, policy, manifest = load_checkpoint(checkpoint_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    builder = build_graph(model)
    weights_manifest = _write_shards(builder.weights, out)
    model_json = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "family": model.family,
        "input": {"name": "input", "layout": "nchw", "channels": 3,
                  "dynamic_spatial": True, "min_dim": model.min_input},
        "output": {"name": builder.ops[-1]["name"], "classes": ["benign", "se"]},
        "ops": builder.ops,
        "weights_manifest": weights_manifest,
    }
    (out / "model.json").write_text(
        json.dumps(model_json, sort_keys=True, separators=(",", ":")), encoding="utf-8"
    )
    (out / "preprocess.json").write_text(
        json.dumps(policy.to_manifest(), sort_keys=True, separators=(",", ":")),
        encoding="utf-8",
    )
    if alert_threshold is None:
        alert_threshold = manifest.get("metrics", {}).get("threshold_at_1pct_fp", 0.5)
    card = {
        "family": model.family,
        "run_id": manifest.get("run_id", f"epoch-{manifest.get('epoch', 0)}"),
        "metrics": manifest.get("metrics", {}),
        "alert_threshold": alert_threshold,
        "classes": ["benign", "se"],
    }
    (out / "card.json").write_text(
        json.dumps(card, sort_keys=True, separators=(",", ":")), encoding="utf-8"
    )
    return out
