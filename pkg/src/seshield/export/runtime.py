"""Reference bundle interpreter (numpy), independent of the training stack.

Used to verify export fidelity against the native model and to time
end-to-end inference. Only bundle files are consulted: the graph, weights,
and preprocessing all come from the exported directory.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class BundleError(Exception):
    pass


def bilinear_resize(chw: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel bilinear resize without antialiasing (channelwise)."""
    c, in_h, in_w = chw.shape
    if (in_h, in_w) == (out_h, out_w):
        return chw.astype(np.float32)

    def axis_coords(n_in: int, n_out: int):
        scale = n_in / n_out
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        i0 = np.floor(src).astype(np.int64)
        i1 = np.minimum(i0 + 1, n_in - 1)
        frac = (src - i0).astype(np.float32)
        return i0, i1, frac

    y0, y1, fy = axis_coords(in_h, out_h)
    x0, x1, fx = axis_coords(in_w, out_w)
    rows = chw[:, y0, :] * (1 - fy)[None, :, None] + chw[:, y1, :] * fy[None, :, None]
    out = rows[:, :, x0] * (1 - fx)[None, None, :] + rows[:, :, x1] * fx[None, None, :]
    return out.astype(np.float32)


def _pad(x: np.ndarray, ph: int, pw: int, value: float = 0.0) -> np.ndarray:
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw)), constant_values=value)


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride, padding, groups) -> np.ndarray:
    cout, cin_g, kh, kw = w.shape
    sh, sw = stride
    x = _pad(x, padding[0], padding[1])
    cin, h, wd = x.shape
    out_h = (h - kh) // sh + 1
    out_w = (wd - kw) // sw + 1
    n = out_h * out_w

    if groups == cin and cin_g == 1 and cout == cin:
        # Depthwise: one (kh*kw)-tap filter per channel, vectorized across channels.
        patches = np.empty((cin, kh * kw, n), dtype=np.float32)
        for dy in range(kh):
            for dx in range(kw):
                patches[:, dy * kw + dx] = x[
                    :, dy:dy + sh * out_h:sh, dx:dx + sw * out_w:sw
                ].reshape(cin, n)
        flat = (w.reshape(cin, 1, kh * kw) @ patches).reshape(cin, n)
        return (flat + b[:, None]).reshape(cin, out_h, out_w)

    if groups == 1:
        # im2col ordered (channel, dy, dx) to match the weight layout.
        cols = np.empty((cin, kh * kw, n), dtype=np.float32)
        for dy in range(kh):
            for dx in range(kw):
                cols[:, dy * kw + dx] = x[
                    :, dy:dy + sh * out_h:sh, dx:dx + sw * out_w:sw
                ].reshape(cin, n)
        flat = w.reshape(cout, cin * kh * kw) @ cols.reshape(cin * kh * kw, n)
        return (flat + b[:, None]).reshape(cout, out_h, out_w)

    out = np.empty((cout, out_h, out_w), dtype=np.float32)
    group_in = cin // groups
    group_out = cout // groups
    for g in range(groups):
        out[g * group_out:(g + 1) * group_out] = _conv2d(
            x[g * group_in:(g + 1) * group_in],
            w[g * group_out:(g + 1) * group_out],
            b[g * group_out:(g + 1) * group_out],
            stride, (0, 0), 1,
        )
    return out


def _maxpool2d(x: np.ndarray, size, stride, padding) -> np.ndarray:
    kh, kw = size
    sh, sw = stride
    x = _pad(x, padding[0], padding[1], value=-np.inf)
    c, h, w = x.shape
    out_h = (h - kh) // sh + 1
    out_w = (w - kw) // sw + 1
    out = np.full((c, out_h, out_w), -np.inf, dtype=np.float32)
    for dy in range(kh):
        for dx in range(kw):
            np.maximum(out, x[:, dy:dy + sh * out_h:sh, dx:dx + sw * out_w:sw], out=out)
    return out


class BundleRuntime:
    """Loads a bundle directory and evaluates the op graph on CHW inputs."""

    def __init__(self, bundle_dir: str | Path):
        bundle = Path(bundle_dir)
        self.model = json.loads((bundle / "model.json").read_text(encoding="utf-8"))
        if self.model.get("format") != "seshield.webbundle":
            raise BundleError(f"{bundle} is not an inference bundle")
        self.preprocess_desc = json.loads(
            (bundle / "preprocess.json").read_text(encoding="utf-8"))
        self.card = json.loads((bundle / "card.json").read_text(encoding="utf-8"))
        self.weights: dict[str, np.ndarray] = {}
        for shard in self.model["weights_manifest"]:
            blob = (bundle / shard["path"]).read_bytes()
            for entry in shard["tensors"]:
                start = entry["byte_offset"]
                arr = np.frombuffer(
                    blob, dtype=np.float32,
                    count=entry["byte_length"] // 4, offset=start,
                ).reshape(entry["shape"])
                self.weights[entry["name"]] = arr

    def preprocess(self, chw01: np.ndarray, device_class: str) -> np.ndarray:
        desc = self.preprocess_desc
        divisor = desc["desktop_scale"] if device_class == "desktop" else desc["mobile_scale"]
        _, h, w = chw01.shape
        out_h = -(-h // divisor)  # ceil
        out_w = -(-w // divisor)
        scaled = bilinear_resize(chw01.astype(np.float32), out_h, out_w)
        mean = np.asarray(desc["normalize"]["mean"], dtype=np.float32).reshape(3, 1, 1)
        std = np.asarray(desc["normalize"]["std"], dtype=np.float32).reshape(3, 1, 1)
        return (scaled - mean) / std

    def run_graph(self, x: np.ndarray) -> np.ndarray:
        tensors: dict[str, np.ndarray] = {"input": x.astype(np.float32)}
        out_name = self.model["output"]["name"]
        for op in self.model["ops"]:
            kind = op["type"]
            if kind == "conv2d":
                y = _conv2d(
                    tensors[op["input"]], self.weights[op["weights"]],
                    self.weights[op["bias"]], op["stride"], op["padding"], op["groups"],
                )
                if op["activation"] == "relu":
                    np.maximum(y, 0, out=y)
                elif op["activation"] == "relu6":
                    np.clip(y, 0, 6, out=y)
            elif kind == "maxpool2d":
                y = _maxpool2d(tensors[op["input"]], op["size"], op["stride"], op["padding"])
            elif kind == "add":
                a, b = (tensors[n] for n in op["inputs"])
                y = a + b
            elif kind == "global_max_pool":
                y = tensors[op["input"]].max(axis=(1, 2))
            elif kind == "dense":
                y = self.weights[op["weights"]] @ tensors[op["input"]] + self.weights[op["bias"]]
            elif kind == "softmax":
                v = tensors[op["input"]]
                e = np.exp(v - v.max())
                y = e / e.sum()
            else:
                raise BundleError(f"unknown op type {kind!r}")
            tensors[op["name"]] = y
        return tensors[out_name]

    def score(self, chw01: np.ndarray, device_class: str = "desktop") -> tuple[float, float]:
        """(p_benign, p_se) for a raw [0,1] CHW image array."""
        probs = self.run_graph(self.preprocess(chw01, device_class))
        return float(probs[0]), float(probs[1])
