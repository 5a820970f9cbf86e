"""Weight snapshots and the scale/sum aggregation server step."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import torch


class SnapshotError(Exception):
    pass


@dataclass
class WeightSnapshot:
    tensors: dict[str, torch.Tensor]
    scale: Fraction = Fraction(1)

    @classmethod
    def from_model(cls, model: torch.nn.Module) -> "WeightSnapshot":
        return cls({k: v.detach().clone() for k, v in model.state_dict().items()})

    def layer_names(self) -> tuple[str, ...]:
        return tuple(self.tensors)


def scale_weights(snapshot: WeightSnapshot, client_count: int) -> WeightSnapshot:
    """Multiply every float tensor by 1/client_count.

    Integer buffers (e.g. batch counters) are copied unscaled; they carry no
    averaged signal and scaling would truncate them.
    """
    if client_count < 1:
        raise SnapshotError("client_count must be >= 1")
    factor = 1.0 / client_count
    scaled = {
        name: t * factor if t.is_floating_point() else t.clone()
        for name, t in snapshot.tensors.items()
    }
    return WeightSnapshot(scaled, scale=snapshot.scale / client_count)


def average_weights(scaled: list[WeightSnapshot]) -> WeightSnapshot:
    """Elementwise sum of pre-scaled snapshots (the mean of the originals)."""
    if not scaled:
        raise SnapshotError("no snapshots to average")
    names = scaled[0].layer_names()
    for snap in scaled[1:]:
        if snap.layer_names() != names:
            missing = set(names) ^ set(snap.layer_names())
            raise SnapshotError(f"snapshot layer sets differ: {sorted(missing)[:5]}")
    out: dict[str, torch.Tensor] = {}
    for name in names:
        ref = scaled[0].tensors[name]
        for snap in scaled[1:]:
            if snap.tensors[name].shape != ref.shape:
                raise SnapshotError(
                    f"shape mismatch at layer {name!r}: "
                    f"{tuple(ref.shape)} vs {tuple(snap.tensors[name].shape)}"
                )
        if ref.is_floating_point():
            total = ref.clone()
            for snap in scaled[1:]:
                total += snap.tensors[name]
            out[name] = total
        else:
            out[name] = ref.clone()
    return WeightSnapshot(out, scale=Fraction(1))
