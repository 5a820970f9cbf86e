import json

import numpy as np
import pytest
import torch

from seshield.export import (
    BundleError,
    BundleRuntime,
    ExportError,
    bilinear_resize,
    export_web,
    latency_probe,
)
from seshield.model import (
    BackboneSpec,
    CheckpointError,
    PreprocessPolicy,
    adapt_backbone,
    predict,
    preprocess_tensor,
    save_checkpoint,
)

from test_fedtrain import tiny_policy


def checkpoint_for(family, tmp_path, seed=0, policy=None):
    torch.manual_seed(seed)
    model = adapt_backbone(BackboneSpec(family=family))
    policy = policy or PreprocessPolicy.for_family(family)
    directory = tmp_path / f"ckpt_{family}"
    save_checkpoint(directory, model, policy, epoch=1,
                    metrics={"threshold_at_1pct_fp": 0.6})
    return model, policy, directory


def probe_images(rng, sizes):
    return [rng.random((3, h, w)).astype(np.float32) for (h, w) in sizes]


class TestExportFidelity:
    @pytest.mark.parametrize("family", ["tinyconv", "vgg16"])
    def test_bundle_matches_native_scores(self, family, tmp_path):
        policy = PreprocessPolicy.for_family(family, min_dim=1)
        model, policy, ckpt = checkpoint_for(family, tmp_path, policy=policy)
        bundle = export_web(ckpt, tmp_path / "bundle")
        runtime = BundleRuntime(bundle)
        rng = np.random.default_rng(0)
        sizes = [(144, 256), (128, 224), (256, 128)]
        for arr in probe_images(rng, sizes):
            chw = torch.from_numpy(arr)
            native = predict(model, preprocess_tensor(chw, "desktop", policy))
            ours = runtime.score(arr, "desktop")
            assert abs(native[1] - ours[1]) < 1e-3
            assert abs(native[0] - ours[0]) < 1e-3

    def test_mobilenet_bundle_matches_native(self, tmp_path):
        model, policy, ckpt = checkpoint_for("mobilenet_v2", tmp_path)
        bundle = export_web(ckpt, tmp_path / "bundle_mnv2")
        runtime = BundleRuntime(bundle)
        rng = np.random.default_rng(1)
        for arr in probe_images(rng, [(144, 256), (256, 144)]):
            chw = torch.from_numpy(arr)
            native = predict(model, preprocess_tensor(chw, "desktop", policy))
            ours = runtime.score(arr, "desktop")
            assert abs(native[1] - ours[1]) < 1e-3

    def test_reexport_is_byte_identical(self, tmp_path):
        _, _, ckpt = checkpoint_for("tinyconv", tmp_path)
        a = export_web(ckpt, tmp_path / "a")
        b = export_web(ckpt, tmp_path / "b")
        for name in ("model.json", "preprocess.json", "card.json", "group1.bin"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_corrupt_checkpoint_no_partial_bundle(self, tmp_path):
        ckpt = tmp_path / "broken"
        ckpt.mkdir()
        (ckpt / "manifest.json").write_text("{}")
        (ckpt / "weights.pt").write_bytes(b"garbage")
        out = tmp_path / "never"
        with pytest.raises(CheckpointError):
            export_web(ckpt, out)
        assert not out.exists()

    def test_unsupported_family_errors_listing_ops(self, tmp_path):
        _, _, ckpt = checkpoint_for("resnet50v2", tmp_path)
        with pytest.raises(ExportError, match="BatchNorm2d"):
            export_web(ckpt, tmp_path / "nope")

    def test_card_carries_tuned_threshold(self, tmp_path):
        _, _, ckpt = checkpoint_for("tinyconv", tmp_path)
        bundle = export_web(ckpt, tmp_path / "bundle")
        card = json.loads((bundle / "card.json").read_text())
        assert card["alert_threshold"] == 0.6
        assert card["classes"] == ["benign", "se"]


class TestPreprocessParity:
    def test_resize_matches_training_resampler(self):
        torch.manual_seed(2)
        chw = torch.rand(3, 77, 131)
        for out_h, out_w in [(20, 33), (77, 131), (150, 260)]:
            expected = torch.nn.functional.interpolate(
                chw.unsqueeze(0), size=(out_h, out_w), mode="bilinear",
                align_corners=False, antialias=False,
            )[0].numpy()
            got = bilinear_resize(chw.numpy(), out_h, out_w)
            assert np.abs(expected - got).max() < 2e-5

    def test_bundle_preprocess_equals_training_preprocess(self, tmp_path):
        _, policy, ckpt = checkpoint_for("tinyconv", tmp_path)
        bundle = export_web(ckpt, tmp_path / "bundle")
        runtime = BundleRuntime(bundle)
        rng = np.random.default_rng(3)
        arr = rng.random((3, 160, 240)).astype(np.float32)
        for device_class in ("desktop", "mobile"):
            native = preprocess_tensor(torch.from_numpy(arr), device_class, policy).numpy()
            ours = runtime.preprocess(arr, device_class)
            assert native.shape == ours.shape
            assert np.abs(native - ours).max() < 1e-5


class TestLatencyProbe:
    def _image_files(self, tmp_path, size=(384, 216), count=3):
        from PIL import Image

        rng = np.random.default_rng(7)
        paths = []
        for i in range(count):
            arr = (rng.random((size[1], size[0], 3)) * 255).astype(np.uint8)
            p = tmp_path / f"probe_{i}.png"
            Image.fromarray(arr).save(p)
            paths.append(p)
        return paths

    def test_empty_image_set_rejected(self, tmp_path):
        _, _, ckpt = checkpoint_for("tinyconv", tmp_path)
        bundle = export_web(ckpt, tmp_path / "bundle")
        with pytest.raises(BundleError):
            latency_probe(bundle, [])

    def test_mobilenet_under_budget_and_slower_than_vgg(self, tmp_path):
        _, _, ckpt_m = checkpoint_for("mobilenet_v2", tmp_path)
        bundle_m = export_web(ckpt_m, tmp_path / "bm")
        _, _, ckpt_v = checkpoint_for("vgg19", tmp_path)
        bundle_v = export_web(ckpt_v, tmp_path / "bv")
        images = self._image_files(tmp_path)
        stats_m = latency_probe(bundle_m, images, repeats=2)
        stats_v = latency_probe(bundle_v, images, repeats=2)
        assert stats_m["p50_ms"] < 1000, stats_m
        assert stats_v["p50_ms"] > stats_m["p50_ms"], (stats_v, stats_m)
