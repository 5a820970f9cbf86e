"""Dimension-homogeneous minibatch streams.

Variable-size training requires every minibatch to hold images of one exact
post-preprocess size; records are grouped by that size and both the group
visit order and the order inside each group are shuffled per epoch seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .preprocess import PreprocessPolicy


@dataclass(frozen=True)
class SizeBucketedBatcher:
    batch_size: int = 32
    policy: PreprocessPolicy = PreprocessPolicy()

    def key_of(self, item) -> tuple[int, int]:
        return self.policy.scaled_size(item.resolution, item.device_class)


def make_batches(
    records: Sequence, batcher: SizeBucketedBatcher, seed: int,
    key_fn: Callable | None = None,
) -> Iterator[list]:
    """Yield one epoch of size-homogeneous batches covering every record once."""
    key_fn = key_fn or batcher.key_of
    buckets: dict[tuple[int, int], list] = {}
    for rec in sorted(records, key=lambda r: r.id):
        buckets.setdefault(key_fn(rec), []).append(rec)
    rng = random.Random(seed)
    keys = sorted(buckets)
    rng.shuffle(keys)
    for key in keys:
        group = buckets[key]
        rng.shuffle(group)
        for i in range(0, len(group), batcher.batch_size):
            yield group[i:i + batcher.batch_size]
