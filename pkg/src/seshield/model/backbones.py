"""Convolutional backbones adapted for arbitrary-size screenshot input.

Every family keeps only its fully convolutional feature extractor; the
classifier head (flatten + dense stack) is replaced by global max pooling
over the spatial dimensions followed by a 2-unit softmax layer, so a single
trained model accepts any input height/width above the family minimum.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import torch
from torch import nn
from torchvision.models import mobilenet_v2 as tv_mobilenet_v2

FAMILIES = (
    "vgg19",
    "vgg16",
    "resnet50v2",
    "inception_resnet_v2",
    "xception",
    "mobilenet_v2",
    "tinyconv",  # desk-scale family for CPU-budget experiments
)

HEAD_GLOBAL_MAX_SOFTMAX2 = "global_max_pool_softmax2"

_VGG_CFGS = {
    "vgg16": [64, 64, "M", 128, 128, "M", 256, 256, 256, "M",
              512, 512, 512, "M", 512, 512, 512, "M"],
    "vgg19": [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M",
              512, 512, 512, 512, "M", 512, 512, 512, 512, "M"],
}

# Everything up to (and excluding) these prefixes is frozen by default, so
# fine-tuning touches only the deepest convolutional block plus the head.
_DEFAULT_UNFROZEN = {
    "vgg19": ("block5",),
    "vgg16": ("block5",),
    "mobilenet_v2": ("features.17", "features.18"),
    "resnet50v2": ("stage4", "post"),
    "inception_resnet_v2": ("mixed_7a", "block8", "conv_final"),
    "xception": ("exit_",),
    "tinyconv": ("",),  # everything trainable
}

_MIN_INPUT = {family: 32 for family in FAMILIES}
_MIN_INPUT["tinyconv"] = 16


class BackboneError(Exception):
    pass


@dataclass
class BackboneSpec:
    family: str
    pretrained_on: str = "none"  # "none" | "imagenet"
    frozen_prefix: frozenset[str] | None = None  # None -> family default
    head: str = HEAD_GLOBAL_MAX_SOFTMAX2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BackboneError(f"unknown backbone family {self.family!r}")
        if self.head != HEAD_GLOBAL_MAX_SOFTMAX2:
            raise BackboneError(f"unsupported head {self.head!r}")


def _vgg_features(cfg: list) -> nn.Sequential:
    layers: OrderedDict[str, nn.Module] = OrderedDict()
    in_ch, block, conv = 3, 1, 1
    for item in cfg:
        if item == "M":
            layers[f"block{block}_pool"] = nn.MaxPool2d(2, 2)
            block, conv = block + 1, 1
        else:
            layers[f"block{block}_conv{conv}"] = nn.Conv2d(in_ch, item, 3, padding=1)
            layers[f"block{block}_relu{conv}"] = nn.ReLU(inplace=True)
            in_ch, conv = item, conv + 1
    return nn.Sequential(layers)


class _PreactBottleneck(nn.Module):
    def __init__(self, in_ch: int, width: int, stride: int):
        super().__init__()
        out_ch = width * 4
        self.pre = nn.Sequential(nn.BatchNorm2d(in_ch), nn.ReLU(inplace=True))
        self.conv1 = nn.Conv2d(in_ch, width, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(width)
        self.conv2 = nn.Conv2d(width, width, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(width)
        self.conv3 = nn.Conv2d(width, out_ch, 1, bias=False)
        self.shortcut = None
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False)
        self.relu = nn.ReLU(inplace=True)

    def forward(self, x):
        pre = self.pre(x)
        short = x if self.shortcut is None else self.shortcut(pre)
        out = self.conv1(pre)
        out = self.conv2(self.relu(self.bn1(out)))
        out = self.conv3(self.relu(self.bn2(out)))
        return out + short


def _resnet50v2_features() -> nn.Sequential:
    layers: OrderedDict[str, nn.Module] = OrderedDict()
    layers["stem_conv"] = nn.Conv2d(3, 64, 7, stride=2, padding=3, bias=False)
    layers["stem_pool"] = nn.MaxPool2d(3, stride=2, padding=1)
    in_ch = 64
    for stage, (width, blocks) in enumerate(((64, 3), (128, 4), (256, 6), (512, 3)), start=1):
        for b in range(blocks):
            stride = 2 if (b == 0 and stage > 1) else 1
            layers[f"stage{stage}_block{b + 1}"] = _PreactBottleneck(in_ch, width, stride)
            in_ch = width * 4
    layers["post_bn"] = nn.BatchNorm2d(in_ch)
    layers["post_relu"] = nn.ReLU(inplace=True)
    return nn.Sequential(layers)


class _SeparableConv(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, stride: int = 1):
        super().__init__()
        self.depthwise = nn.Conv2d(in_ch, in_ch, 3, stride=stride, padding=1,
                                   groups=in_ch, bias=False)
        self.pointwise = nn.Conv2d(in_ch, out_ch, 1, bias=False)
        self.bn = nn.BatchNorm2d(out_ch)

    def forward(self, x):
        return self.bn(self.pointwise(self.depthwise(x)))


class _XceptionBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, reps: int, stride: int, grow_first: bool):
        super().__init__()
        self.skip = None
        if out_ch != in_ch or stride != 1:
            self.skip = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_ch),
            )
        ops: list[nn.Module] = []
        ch = in_ch
        for i in range(reps):
            target = out_ch if (grow_first or i == reps - 1) else in_ch
            ops.append(nn.ReLU(inplace=False))
            ops.append(_SeparableConv(ch, target))
            ch = target
        if stride != 1:
            ops.append(nn.MaxPool2d(3, stride=stride, padding=1))
        self.body = nn.Sequential(*ops)

    def forward(self, x):
        short = x if self.skip is None else self.skip(x)
        return self.body(x) + short


def _xception_features() -> nn.Sequential:
    layers: OrderedDict[str, nn.Module] = OrderedDict()
    layers["entry_conv1"] = nn.Sequential(
        nn.Conv2d(3, 32, 3, stride=2, padding=1, bias=False),
        nn.BatchNorm2d(32), nn.ReLU(inplace=True),
    )
    layers["entry_conv2"] = nn.Sequential(
        nn.Conv2d(32, 64, 3, padding=1, bias=False),
        nn.BatchNorm2d(64), nn.ReLU(inplace=True),
    )
    layers["entry_block1"] = _XceptionBlock(64, 128, reps=2, stride=2, grow_first=True)
    layers["entry_block2"] = _XceptionBlock(128, 256, reps=2, stride=2, grow_first=True)
    layers["entry_block3"] = _XceptionBlock(256, 728, reps=2, stride=2, grow_first=True)
    for i in range(1, 9):
        layers[f"middle_block{i}"] = _XceptionBlock(728, 728, reps=3, stride=1, grow_first=True)
    layers["exit_block"] = _XceptionBlock(728, 1024, reps=2, stride=2, grow_first=False)
    layers["exit_sep1"] = nn.Sequential(_SeparableConv(1024, 1536), nn.ReLU(inplace=True))
    layers["exit_sep2"] = nn.Sequential(_SeparableConv(1536, 2048), nn.ReLU(inplace=True))
    return nn.Sequential(layers)


def _conv_bn(in_ch: int, out_ch: int, kernel: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=kernel // 2, bias=False),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class _InceptionResnetBlock(nn.Module):
    """Residual inception block: parallel towers, 1x1 projection, scaled add."""

    def __init__(self, in_ch: int, towers: list[nn.Module], tower_out: int, scale: float,
                 activate: bool = True):
        super().__init__()
        self.towers = nn.ModuleList(towers)
        self.project = nn.Conv2d(tower_out, in_ch, 1)
        self.scale = scale
        self.act = nn.ReLU(inplace=False) if activate else None

    def forward(self, x):
        mixed = torch.cat([tower(x) for tower in self.towers], dim=1)
        out = x + self.scale * self.project(mixed)
        return self.act(out) if self.act is not None else out


def _irv2_block35(in_ch: int = 320) -> _InceptionResnetBlock:
    towers = [
        _conv_bn(in_ch, 32, 1),
        nn.Sequential(_conv_bn(in_ch, 32, 1), _conv_bn(32, 32, 3)),
        nn.Sequential(_conv_bn(in_ch, 32, 1), _conv_bn(32, 48, 3), _conv_bn(48, 64, 3)),
    ]
    return _InceptionResnetBlock(in_ch, towers, 32 + 32 + 64, scale=0.17)


def _irv2_block17(in_ch: int = 1088) -> _InceptionResnetBlock:
    towers = [
        _conv_bn(in_ch, 192, 1),
        nn.Sequential(_conv_bn(in_ch, 128, 1), _conv_bn(128, 160, 3), _conv_bn(160, 192, 3)),
    ]
    return _InceptionResnetBlock(in_ch, towers, 192 + 192, scale=0.10)


def _irv2_block8(in_ch: int = 2080, activate: bool = True) -> _InceptionResnetBlock:
    towers = [
        _conv_bn(in_ch, 192, 1),
        nn.Sequential(_conv_bn(in_ch, 192, 1), _conv_bn(192, 224, 3), _conv_bn(224, 256, 3)),
    ]
    return _InceptionResnetBlock(in_ch, towers, 192 + 256, scale=0.20, activate=activate)


class _Parallel(nn.Module):
    def __init__(self, *branches: nn.Module):
        super().__init__()
        self.branches = nn.ModuleList(branches)

    def forward(self, x):
        return torch.cat([b(x) for b in self.branches], dim=1)


def _inception_resnet_v2_features() -> nn.Sequential:
    """Inception-ResNet-v2 with same-padding so 32px inputs stay usable.

    The canonical network uses valid padding (minimum input 75px); padded
    convolutions change border behavior slightly but keep the layer graph.
    """
    layers: OrderedDict[str, nn.Module] = OrderedDict()
    layers["stem"] = nn.Sequential(
        _conv_bn(3, 32, 3, stride=2),
        _conv_bn(32, 32, 3),
        _conv_bn(32, 64, 3),
        nn.MaxPool2d(3, stride=2, padding=1),
        _conv_bn(64, 80, 1),
        _conv_bn(80, 192, 3),
        nn.MaxPool2d(3, stride=2, padding=1),
    )
    layers["mixed_5b"] = _Parallel(
        _conv_bn(192, 96, 1),
        nn.Sequential(_conv_bn(192, 48, 1), _conv_bn(48, 64, 5)),
        nn.Sequential(_conv_bn(192, 64, 1), _conv_bn(64, 96, 3), _conv_bn(96, 96, 3)),
        nn.Sequential(nn.AvgPool2d(3, stride=1, padding=1), _conv_bn(192, 64, 1)),
    )  # -> 320
    for i in range(1, 6):
        layers[f"block35_{i}"] = _irv2_block35()
    layers["mixed_6a"] = _Parallel(
        nn.Sequential(
            nn.Conv2d(320, 384, 3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(384), nn.ReLU(inplace=True),
        ),
        nn.Sequential(_conv_bn(320, 256, 1), _conv_bn(256, 256, 3),
                      nn.Conv2d(256, 384, 3, stride=2, padding=1, bias=False),
                      nn.BatchNorm2d(384), nn.ReLU(inplace=True)),
        nn.MaxPool2d(3, stride=2, padding=1),
    )  # -> 384 + 384 + 320 = 1088
    for i in range(1, 11):
        layers[f"block17_{i}"] = _irv2_block17()
    layers["mixed_7a"] = _Parallel(
        nn.Sequential(_conv_bn(1088, 256, 1),
                      nn.Conv2d(256, 384, 3, stride=2, padding=1, bias=False),
                      nn.BatchNorm2d(384), nn.ReLU(inplace=True)),
        nn.Sequential(_conv_bn(1088, 256, 1),
                      nn.Conv2d(256, 288, 3, stride=2, padding=1, bias=False),
                      nn.BatchNorm2d(288), nn.ReLU(inplace=True)),
        nn.Sequential(_conv_bn(1088, 256, 1), _conv_bn(256, 288, 3),
                      nn.Conv2d(288, 320, 3, stride=2, padding=1, bias=False),
                      nn.BatchNorm2d(320), nn.ReLU(inplace=True)),
        nn.MaxPool2d(3, stride=2, padding=1),
    )  # -> 384 + 288 + 320 + 1088 = 2080
    for i in range(1, 6):
        layers[f"block8_{i}"] = _irv2_block8()
    layers["block8_final"] = _irv2_block8(activate=False)
    layers["conv_final"] = _conv_bn(2080, 1536, 1)
    return nn.Sequential(layers)


def _tinyconv_features() -> nn.Sequential:
    layers: OrderedDict[str, nn.Module] = OrderedDict()
    layers["conv1"] = nn.Conv2d(3, 16, 3, padding=1)
    layers["relu1"] = nn.ReLU(inplace=True)
    layers["pool1"] = nn.MaxPool2d(2, 2)
    layers["conv2"] = nn.Conv2d(16, 32, 3, padding=1)
    layers["relu2"] = nn.ReLU(inplace=True)
    layers["pool2"] = nn.MaxPool2d(2, 2)
    layers["conv3"] = nn.Conv2d(32, 64, 3, padding=1)
    layers["relu3"] = nn.ReLU(inplace=True)
    return nn.Sequential(layers)


def _build_features(family: str) -> tuple[nn.Module, int]:
    if family in ("vgg19", "vgg16"):
        return _vgg_features(_VGG_CFGS[family]), 512
    if family == "mobilenet_v2":
        return tv_mobilenet_v2(weights=None).features, 1280
    if family == "resnet50v2":
        return _resnet50v2_features(), 2048
    if family == "xception":
        return _xception_features(), 2048
    if family == "inception_resnet_v2":
        return _inception_resnet_v2_features(), 1536
    if family == "tinyconv":
        return _tinyconv_features(), 64
    raise BackboneError(f"unknown backbone family {family!r}")


class AdaptedModel(nn.Module):
    """Feature extractor + global max pool + 2-way softmax head.

    Class index 0 is benign, 1 is the attack class. The forward pass returns
    logits; use :func:`predict` or ``predict_proba`` for probabilities.
    """

    def __init__(self, spec: BackboneSpec):
        super().__init__()
        self.spec = spec
        self.features, self.feature_width = _build_features(spec.family)
        self.head = nn.Linear(self.feature_width, 2)
        # Symmetric start: near-zero logits so an untrained head predicts ~(.5, .5).
        nn.init.uniform_(self.head.weight, -1e-3, 1e-3)
        nn.init.zeros_(self.head.bias)
        self.apply_freeze()
        # Inference-ready by default; trainers switch to train mode per client
        # pass. Batch-norm families cannot even run train-mode forwards on
        # minimum-size inputs (1x1 feature maps).
        self.eval()

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def min_input(self) -> int:
        return _MIN_INPUT[self.spec.family]

    def frozen_prefixes(self) -> frozenset[str]:
        if self.spec.frozen_prefix is not None:
            return self.spec.frozen_prefix
        unfrozen = _DEFAULT_UNFROZEN[self.spec.family]
        frozen = set()
        for name, _ in self.features.named_parameters():
            if not any(name.startswith(p) for p in unfrozen):
                frozen.add(name.split(".")[0])
        return frozenset(frozen)

    def apply_freeze(self) -> None:
        frozen = self.frozen_prefixes()
        for name, param in self.features.named_parameters():
            param.requires_grad = not any(name.startswith(p) for p in frozen)
        for param in self.head.parameters():
            param.requires_grad = True

    def pooled_features(self, x: torch.Tensor) -> torch.Tensor:
        self._check_input(x)
        return self.features(x).amax(dim=(2, 3))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.pooled_features(x))

    def predict_proba(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.forward(x), dim=1)

    def _check_input(self, x: torch.Tensor) -> None:
        if x.ndim != 4 or x.shape[1] != 3:
            raise BackboneError(
                f"expected NCHW input with 3 channels, got shape {tuple(x.shape)}"
            )
        if x.shape[2] < self.min_input or x.shape[3] < self.min_input:
            raise BackboneError(
                f"input {tuple(x.shape[2:])} below {self.family} minimum {self.min_input}"
            )

    def head_parameter_count(self) -> int:
        return sum(p.numel() for p in self.head.parameters())


def adapt_backbone(spec: BackboneSpec) -> AdaptedModel:
    """Build an adapted model; copies pretrained weights when requested.

    Pretrained weights are searched in the local torch hub cache. Requesting
    ``pretrained_on="imagenet"`` without a cached checkpoint is an error:
    silent random initialization would invalidate fine-tuning assumptions.
    """
    model = AdaptedModel(spec)
    if spec.pretrained_on == "none":
        return model
    if spec.pretrained_on != "imagenet":
        raise BackboneError(f"unknown pretraining tag {spec.pretrained_on!r}")
    state = _load_imagenet_state(spec.family)
    _copy_conv_weights(model, state)
    model.apply_freeze()
    return model


_TORCHVISION_CHECKPOINTS = {
    "vgg19": "vgg19-dcbb9e9d.pth",
    "vgg16": "vgg16-397923af.pth",
    "mobilenet_v2": "mobilenet_v2-b0353104.pth",
}


def _load_imagenet_state(family: str) -> dict:
    if family not in _TORCHVISION_CHECKPOINTS:
        raise BackboneError(
            f"no pretrained checkpoint mapping for {family}; train from scratch "
            f'with pretrained_on="none" or provide weights manually'
        )
    hub_dir = torch.hub.get_dir()
    path = f"{hub_dir}/checkpoints/{_TORCHVISION_CHECKPOINTS[family]}"
    try:
        return torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError as e:
        raise BackboneError(
            f"pretrained weights for {family} not found at {path}; "
            f"download them into the torch hub cache first"
        ) from e


def _copy_conv_weights(model: AdaptedModel, source_state: dict) -> None:
    """Copy backbone weights positionally; the replaced head keeps its init."""
    target = model.features.state_dict()
    source_items = [
        (k, v) for k, v in source_state.items()
        if k.startswith("features.") and not k.startswith("classifier")
    ]
    target_keys = list(target.keys())
    if len(source_items) < len(target_keys):
        raise BackboneError("pretrained checkpoint has fewer tensors than the backbone")
    for key, (src_key, value) in zip(target_keys, source_items):
        if target[key].shape != value.shape:
            raise BackboneError(
                f"shape mismatch copying {src_key} -> {key}: "
                f"{tuple(value.shape)} vs {tuple(target[key].shape)}"
            )
        target[key] = value
    model.features.load_state_dict(target)


def predict(model: AdaptedModel, tensor: torch.Tensor) -> tuple[float, float]:
    """Probabilities (p_benign, p_se) for one image tensor (CHW or 1CHW)."""
    if tensor.ndim == 3:
        tensor = tensor.unsqueeze(0)
    if tensor.ndim != 4 or tensor.shape[0] != 1 or tensor.shape[1] != 3:
        raise BackboneError(f"predict expects one 3-channel image, got {tuple(tensor.shape)}")
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            probs = model.predict_proba(tensor)[0]
    finally:
        model.train(was_training)
    return float(probs[0]), float(probs[1])
