import random

import pytest
import torch

from seshield.model import (
    BackboneError,
    BackboneSpec,
    PreprocessPolicy,
    PreprocessError,
    SizeBucketedBatcher,
    adapt_backbone,
    load_checkpoint,
    make_batches,
    predict,
    preprocess_tensor,
    save_checkpoint,
)

from conftest import make_images


@pytest.fixture(scope="module")
def tiny_model():
    return adapt_backbone(BackboneSpec(family="tinyconv"))


class TestAdaptBackbone:
    def test_vgg19_head_contract(self):
        model = adapt_backbone(BackboneSpec(family="vgg19"))
        assert model.feature_width == 512
        assert model.head_parameter_count() == 512 * 2 + 2 == 1026
        with torch.no_grad():
            out = model(torch.randn(1, 3, 224, 224))
        assert tuple(out.shape) == (1, 2)

    def test_no_flatten_no_wide_dense(self):
        model = adapt_backbone(BackboneSpec(family="vgg19"))
        kinds = {type(m).__name__ for m in model.modules()}
        assert "Flatten" not in kinds
        dense = [m for m in model.modules() if isinstance(m, torch.nn.Linear)]
        assert len(dense) == 1 and dense[0].out_features == 2

    def test_both_aspect_extremes(self):
        model = adapt_backbone(BackboneSpec(family="vgg19"))
        with torch.no_grad():
            assert tuple(model(torch.randn(1, 3, 96, 480)).shape) == (1, 2)
            assert tuple(model(torch.randn(1, 3, 480, 96)).shape) == (1, 2)

    def test_unknown_family_rejected(self):
        with pytest.raises(BackboneError, match="unknown"):
            BackboneSpec(family="alexnet")

    def test_imagenet_weights_unavailable_is_loud(self):
        with pytest.raises(BackboneError, match="pretrained weights"):
            adapt_backbone(BackboneSpec(family="vgg19", pretrained_on="imagenet"))

    def test_zeroed_head_predicts_half(self, tiny_model):
        torch.nn.init.zeros_(tiny_model.head.weight)
        torch.nn.init.zeros_(tiny_model.head.bias)
        p_benign, p_se = predict(tiny_model, torch.zeros(3, 40, 40))
        assert p_benign == pytest.approx(0.5, abs=1e-6)
        assert p_se == pytest.approx(0.5, abs=1e-6)

    def test_below_minimum_input_rejected(self, tiny_model):
        with pytest.raises(BackboneError, match="minimum"):
            tiny_model(torch.randn(1, 3, 8, 100))


class TestPredict:
    def test_probabilities_sum_to_one(self, tiny_model):
        p_benign, p_se = predict(tiny_model, torch.rand(3, 48, 64))
        assert p_benign + p_se == pytest.approx(1.0, abs=1e-5)

    def test_deterministic(self, tiny_model):
        x = torch.rand(3, 48, 64)
        assert predict(tiny_model, x) == predict(tiny_model, x)

    def test_channel_mismatch_rejected(self, tiny_model):
        with pytest.raises(BackboneError):
            predict(tiny_model, torch.rand(1, 48, 64))


class TestPreprocess:
    @pytest.mark.parametrize(
        "resolution,device_class,expected",
        [
            ((1920, 1080), "desktop", (480, 270)),
            ((360, 640), "mobile", (180, 320)),
            ((1366, 728), "desktop", (342, 182)),
        ],
    )
    def test_scaled_size_arithmetic(self, resolution, device_class, expected):
        policy = PreprocessPolicy()
        assert policy.scaled_size(resolution, device_class) == expected

    def test_tensor_shape_and_normalization(self):
        policy = PreprocessPolicy(normalize=((0.5, 0.5, 0.5), (0.5, 0.5, 0.5)))
        chw = torch.ones(3, 728, 1366)
        out = preprocess_tensor(chw, "desktop", policy)
        assert tuple(out.shape) == (3, 182, 342)
        assert torch.allclose(out, torch.ones_like(out))  # (1 - .5) / .5

    def test_min_dim_violation_names_input(self):
        policy = PreprocessPolicy()
        with pytest.raises(PreprocessError, match="shot77"):
            preprocess_tensor(torch.ones(3, 64, 64), "desktop", policy, name="shot77")

    def test_aspect_ratio_preserved_exactly(self):
        policy = PreprocessPolicy()
        w, h = policy.scaled_size((1920, 1080), "desktop")
        assert w / h == pytest.approx(1920 / 1080)


class TestBatching:
    def _policy(self):
        return PreprocessPolicy(min_dim=1)

    def test_batch_sizes(self):
        images = make_images(70, "benign", (256, 144))
        batcher = SizeBucketedBatcher(batch_size=32, policy=self._policy())
        batches = list(make_batches(images, batcher, seed=0))
        assert sorted(len(b) for b in batches) == [6, 32, 32]

    def test_no_mixed_batches_over_seeds(self):
        images = make_images(40, "benign", (256, 144)) + make_images(
            40, "se", (128, 256), "mobile", campaign="x", prefix="q"
        )
        batcher = SizeBucketedBatcher(batch_size=16, policy=self._policy())
        for seed in range(100):
            for batch in make_batches(images, batcher, seed=seed):
                keys = {batcher.key_of(im) for im in batch}
                assert len(keys) == 1

    def test_epoch_covers_every_record_once(self):
        images = make_images(33, "benign", (64, 64)) + make_images(
            21, "se", (96, 64), campaign="x", prefix="z"
        )
        batcher = SizeBucketedBatcher(batch_size=8, policy=self._policy())
        seen = [im.id for b in make_batches(images, batcher, seed=5) for im in b]
        assert sorted(seen) == sorted(im.id for im in images)

    def test_seed_determinism_and_shuffling(self):
        images = make_images(50, "benign", (64, 64))
        batcher = SizeBucketedBatcher(batch_size=8, policy=self._policy())
        a = [[im.id for im in b] for b in make_batches(images, batcher, seed=7)]
        b = [[im.id for im in b] for b in make_batches(images, batcher, seed=7)]
        c = [[im.id for im in b] for b in make_batches(images, batcher, seed=8)]
        assert a == b
        assert a != c


class TestTrainingProperties:
    def test_frozen_layers_bit_identical_after_step(self):
        model = adapt_backbone(
            BackboneSpec(family="tinyconv", frozen_prefix=frozenset({"conv1", "conv2"}))
        )
        frozen_before = {
            name: p.detach().clone()
            for name, p in model.features.named_parameters()
            if not p.requires_grad
        }
        assert frozen_before  # the freeze actually bit
        optimizer = torch.optim.Adam(
            [p for p in model.parameters() if p.requires_grad], lr=1e-2
        )
        for _ in range(3):
            loss = torch.nn.functional.cross_entropy(
                model(torch.randn(4, 3, 32, 32)), torch.tensor([0, 1, 0, 1])
            )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        for name, p in model.features.named_parameters():
            if name in frozen_before:
                assert torch.equal(p.detach(), frozen_before[name]), name

    def test_head_gradients_match_finite_differences(self):
        model = adapt_backbone(BackboneSpec(family="tinyconv")).double()
        x = torch.rand(2, 3, 24, 24, dtype=torch.float64)
        y = torch.tensor([0, 1])

        def loss_fn():
            return torch.nn.functional.cross_entropy(model(x), y)

        loss = loss_fn()
        model.zero_grad()
        loss.backward()
        analytic = model.head.weight.grad.detach().clone()

        eps = 1e-6
        rng = random.Random(0)
        flat_positions = [
            (rng.randrange(2), rng.randrange(model.feature_width)) for _ in range(10)
        ]
        with torch.no_grad():
            for i, j in flat_positions:
                original = model.head.weight[i, j].item()
                model.head.weight[i, j] = original + eps
                up = loss_fn().item()
                model.head.weight[i, j] = original - eps
                down = loss_fn().item()
                model.head.weight[i, j] = original
                numeric = (up - down) / (2 * eps)
                rel = abs(numeric - analytic[i, j].item()) / max(
                    abs(numeric), abs(analytic[i, j].item()), 1e-12
                )
                assert rel < 1e-4, (i, j, numeric, analytic[i, j].item())

    def test_global_max_pool_translation_property(self, tiny_model):
        # tinyconv receptive field is 18px with output stride 4: a bright
        # patch moved by stride multiples, kept clear of borders, must pool
        # to identical features.
        base = torch.zeros(1, 3, 96, 96)
        patch = torch.rand(3, 8, 8)
        a = base.clone()
        a[0, :, 32:40, 32:40] = patch
        b = base.clone()
        b[0, :, 36:44, 56:64] = patch  # translated by (+4, +24)
        tiny_model.eval()
        with torch.no_grad():
            la = tiny_model(a)
            lb = tiny_model(b)
        assert torch.allclose(la, lb, atol=1e-4)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, tiny_model):
        policy = PreprocessPolicy.for_family("tinyconv")
        save_checkpoint(tmp_path / "ck", tiny_model, policy, epoch=3,
                        metrics={"auc": 0.9})
        model, loaded_policy, manifest = load_checkpoint(tmp_path / "ck")
        assert manifest["epoch"] == 3
        assert loaded_policy == policy
        for (ka, va), (kb, vb) in zip(
            tiny_model.state_dict().items(), model.state_dict().items()
        ):
            assert ka == kb
            assert torch.equal(va, vb)
