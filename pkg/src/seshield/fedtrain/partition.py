"""Per-round client partitions, stratified by class and resolution."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..dataset.corpus import LabeledImage


class PartitionError(Exception):
    pass


@dataclass(frozen=True)
class ClientPartition:
    client_index: int
    ids: tuple[str, ...]


def partition(
    train_set: list[LabeledImage], client_count: int, global_epoch: int, seed: int
) -> list[ClientPartition]:
    """Split the training set into disjoint, covering, stratified partitions.

    Every (class, resolution) stratum is shuffled and dealt round-robin, so
    each client sees both classes and, where a stratum has at least
    ``client_count`` members, every resolution. Re-randomized per global
    epoch: the draw is keyed on (seed, global_epoch).
    """
    if not train_set:
        raise PartitionError("empty training set")
    if client_count < 1:
        raise PartitionError("client_count must be >= 1")
    per_class: dict[str, int] = {}
    for im in train_set:
        per_class[im.class_name] = per_class.get(im.class_name, 0) + 1
    for class_name, count in per_class.items():
        if client_count > count:
            raise PartitionError(
                f"client_count {client_count} exceeds the {count} "
                f"{class_name!r} records available"
            )
    strata: dict[tuple[str, str], list[str]] = {}
    for im in sorted(train_set, key=lambda r: r.id):
        key = (im.class_name, f"{im.resolution[0]}x{im.resolution[1]}")
        strata.setdefault(key, []).append(im.id)

    rng = random.Random((seed, global_epoch).__repr__())
    assignments: list[list[str]] = [[] for _ in range(client_count)]
    for offset, key in enumerate(sorted(strata)):
        ids = strata[key]
        rng.shuffle(ids)
        for i, rec_id in enumerate(ids):
            assignments[(i + offset + global_epoch) % client_count].append(rec_id)
    return [
        ClientPartition(client_index=i, ids=tuple(ids))
        for i, ids in enumerate(assignments)
    ]
