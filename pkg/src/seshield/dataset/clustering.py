"""Single-linkage clustering of same-resolution screenshots by pHash distance."""

from __future__ import annotations

from dataclasses import dataclass

from .phash import hamming
from .records import ScreenshotRecord

DEFAULT_THRESHOLD = 40


@dataclass(frozen=True)
class Cluster:
    id: str
    member_ids: tuple[str, ...]  # sorted record ids
    resolution: tuple[int, int]

    def __len__(self) -> int:
        return len(self.member_ids)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def cluster_by_phash(
    bucket: list[ScreenshotRecord], threshold: int = DEFAULT_THRESHOLD
) -> list[Cluster]:
    """Connected components of the graph with edges at Hamming distance < threshold.

    All records must share one resolution. Output is order-invariant: members
    are sorted by record id and clusters by their smallest member id.
    """
    if not 0 <= threshold <= 257:  # 257 merges everything (max distance is 256)
        raise ValueError(f"threshold out of range: {threshold}")
    if not bucket:
        return []
    resolutions = {rec.resolution for rec in bucket}
    if len(resolutions) != 1:
        raise ValueError(f"bucket mixes resolutions: {sorted(resolutions)}")
    resolution = bucket[0].resolution

    order = sorted(range(len(bucket)), key=lambda i: bucket[i].id)
    uf = _UnionFind(len(order))
    for i in range(len(order)):
        hi = bucket[order[i]].phash
        for j in range(i + 1, len(order)):
            d = hamming(hi, bucket[order[j]].phash)
            # Identical hashes always merge, so threshold 0 yields exactly
            # the pHash-equality classes; beyond that the edge rule is strict.
            if d < threshold or d == 0:
                uf.union(i, j)

    groups: dict[int, list[str]] = {}
    for pos, idx in enumerate(order):
        groups.setdefault(uf.find(pos), []).append(bucket[idx].id)
    clusters = []
    w, h = resolution
    for k, root in enumerate(sorted(groups, key=lambda r: groups[r][0])):
        clusters.append(
            Cluster(
                id=f"{w}x{h}-{k:04d}",
                member_ids=tuple(sorted(groups[root])),
                resolution=resolution,
            )
        )
    return clusters


def filter_clusters(
    clusters: list[Cluster], records_by_id: dict[str, ScreenshotRecord]
) -> list[Cluster]:
    """Keep clusters with >= 3 screenshots spanning >= 3 second-level domains."""
    kept = []
    for cluster in clusters:
        if len(cluster) < 3:
            continue
        slds = {records_by_id[mid].sld for mid in cluster.member_ids}
        if len(slds) < 3:
            continue
        kept.append(cluster)
    return kept
