import random
from dataclasses import replace
from io import BytesIO
from pathlib import Path

import pytest
from PIL import Image, ImageDraw, ImageEnhance, ImageOps

from seshield.dataset import cluster_by_phash, filter_clusters, hamming, perceptual_hash
from seshield.dataset.clustering import Cluster
from seshield.dataset.records import ScreenshotRecord
from seshield.synthetic import _dialog_page


def reference_image() -> Image.Image:
    img = Image.new("RGB", (256, 144))
    _dialog_page(ImageDraw.Draw(img), 256, 144, random.Random(7), 0)
    return img


class TestPerceptualHash:
    def test_self_distance_zero(self):
        img = reference_image()
        assert hamming(perceptual_hash(img), perceptual_hash(img)) == 0

    def test_lossless_reencode_invariant(self):
        img = reference_image()
        buf = BytesIO()
        img.save(buf, format="PNG")
        buf.seek(0)
        assert perceptual_hash(img) == perceptual_hash(Image.open(buf))

    def test_brightness_regression_value(self):
        # Oracle run on the fixed reference image measured distance 0;
        # anything <= 10 keeps near-duplicates inside one cluster.
        img = reference_image()
        bright = ImageEnhance.Brightness(img).enhance(1.01)
        distance = hamming(perceptual_hash(img), perceptual_hash(bright))
        assert distance == 0
        assert distance <= 10

    def test_inversion_regression_value(self):
        # Oracle run measured 254 of 256 bits flipped on the reference image.
        img = reference_image()
        distance = hamming(perceptual_hash(img), perceptual_hash(ImageOps.invert(img)))
        assert distance == 254
        assert distance >= 64


def fake_record(idx: int, phash: int, resolution=(100, 80), sld="example.com"):
    from datetime import datetime, timezone

    return ScreenshotRecord(
        id=f"r{idx:03d}",
        image_path=Path(f"/nonexistent/r{idx}.png"),
        url=f"https://{sld}/p{idx}",
        sld=sld,
        resolution=resolution,
        device_class="desktop",
        captured_at=datetime.now(timezone.utc),
        content_hash=f"{idx:032x}",
        phash=phash,
    )


def brute_force_components(records, threshold):
    """Independent oracle: repeated closure over all pairs, no union-find."""
    ids = [r.id for r in records]
    parent = {i: {i} for i in ids}
    changed = True
    while changed:
        changed = False
        for a in records:
            for b in records:
                if a.id == b.id:
                    continue
                d = hamming(a.phash, b.phash)
                if d < threshold or d == 0:
                    sa, sb = parent[a.id], parent[b.id]
                    if sa is not sb:
                        merged = sa | sb
                        for member in merged:
                            parent[member] = merged
                        changed = True
    return {frozenset(s) for s in parent.values()}


class TestClustering:
    def test_chain_rule_merges_transitively(self):
        # A-B and B-C close, A-C far: single linkage still joins all three.
        a = fake_record(0, 0)
        b = fake_record(1, (1 << 10) - 1)   # bits 0-9 set
        c = fake_record(2, (1 << 20) - 1)   # bits 0-19 set
        assert hamming(a.phash, b.phash) == 10
        assert hamming(b.phash, c.phash) == 10
        assert hamming(a.phash, c.phash) == 20
        clusters = cluster_by_phash([a, b, c], threshold=15)
        assert len(clusters) == 1
        assert clusters[0].member_ids == ("r000", "r001", "r002")

    def test_far_records_stay_singletons(self):
        records = [fake_record(i, ((1 << 64) - 1) << (i * 64)) for i in range(4)]
        clusters = cluster_by_phash(records, threshold=40)
        assert len(clusters) == 4

    def test_matches_brute_force_oracle(self):
        rng = random.Random(42)
        for trial in range(30):
            records = [fake_record(i, rng.getrandbits(256)) for i in range(20)]
            threshold = rng.choice([20, 80, 128, 200])
            expected = brute_force_components(records, threshold)
            got = {frozenset(c.member_ids) for c in cluster_by_phash(records, threshold)}
            assert got == expected, f"trial {trial} threshold {threshold}"

    def test_threshold_zero_is_equality_classes(self):
        rng = random.Random(1)
        values = [rng.getrandbits(256) for _ in range(5)]
        records = [fake_record(i, values[i % 5]) for i in range(15)]
        clusters = cluster_by_phash(records, threshold=0)
        by_value = {}
        for r in records:
            by_value.setdefault(r.phash, set()).add(r.id)
        assert {frozenset(v) for v in by_value.values()} == {
            frozenset(c.member_ids) for c in clusters
        }

    def test_threshold_257_merges_bucket(self):
        rng = random.Random(2)
        records = [fake_record(i, rng.getrandbits(256)) for i in range(12)]
        clusters = cluster_by_phash(records, threshold=257)
        assert len(clusters) == 1
        assert len(clusters[0]) == 12

    def test_order_invariance(self):
        rng = random.Random(3)
        records = [fake_record(i, rng.getrandbits(256)) for i in range(20)]
        base = cluster_by_phash(records, threshold=128)
        shuffled = records[:]
        rng.shuffle(shuffled)
        again = cluster_by_phash(shuffled, threshold=128)
        assert [c.member_ids for c in base] == [c.member_ids for c in again]

    def test_mixed_resolution_bucket_rejected(self):
        records = [fake_record(0, 0), fake_record(1, 0, resolution=(9, 9))]
        with pytest.raises(ValueError, match="resolution"):
            cluster_by_phash(records)


class TestFilterClusters:
    def _setup(self, sizes_slds):
        records = {}
        clusters = []
        idx = 0
        for k, (size, slds) in enumerate(sizes_slds):
            member_ids = []
            for j in range(size):
                rec = fake_record(idx, idx, sld=slds[j % len(slds)])
                records[rec.id] = rec
                member_ids.append(rec.id)
                idx += 1
            clusters.append(Cluster(id=f"c{k}", member_ids=tuple(member_ids),
                                    resolution=(100, 80)))
        return clusters, records

    def test_two_screenshots_removed(self):
        clusters, records = self._setup([(2, ["a.com", "b.com"])])
        assert filter_clusters(clusters, records) == []

    def test_five_screenshots_two_slds_removed(self):
        clusters, records = self._setup([(5, ["a.com", "b.com"])])
        assert filter_clusters(clusters, records) == []

    def test_three_and_three_kept(self):
        clusters, records = self._setup([(3, ["a.com", "b.com", "c.com"])])
        kept = filter_clusters(clusters, records)
        assert len(kept) == 1

    def test_never_adds_or_grows(self):
        clusters, records = self._setup(
            [(5, ["a.com", "b.com", "c.com"]), (4, ["a.com"]), (3, ["x.com", "y.com", "z.com"])]
        )
        kept = filter_clusters(clusters, records)
        assert len(kept) <= len(clusters)
        by_id = {c.id: c for c in clusters}
        for c in kept:
            assert len(c) <= len(by_id[c.id])
            assert c.member_ids == by_id[c.id].member_ids
