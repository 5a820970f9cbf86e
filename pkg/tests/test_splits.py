import pytest

from seshield.dataset import (
    RQ1_RANDOM,
    RQ2_LEAVE_RESOLUTION_OUT,
    RQ3_LEAVE_CAMPAIGN_OUT,
    DatasetSplit,
    SplitError,
    SplitOptions,
    build_split,
)
from seshield.dataset.corpus import BENIGN, SE


def by_id(corpus):
    return {im.id: im for im in corpus}


class TestRQ1:
    def test_balanced_test_set(self, labeled_corpus):
        options = SplitOptions(rq1_test_per_class=100)
        split = build_split(labeled_corpus, RQ1_RANDOM, seed=3, options=options)
        images = by_id(labeled_corpus)
        test = [images[i] for i in split.test_ids]
        assert sum(1 for im in test if im.class_name == BENIGN) == 100
        assert sum(1 for im in test if im.class_name == SE) == 100
        assert not split.train_ids & split.test_ids

    def test_insufficient_class_errors(self, labeled_corpus):
        options = SplitOptions(rq1_test_per_class=10_000)
        with pytest.raises(SplitError):
            build_split(labeled_corpus, RQ1_RANDOM, seed=3, options=options)


class TestRQ2:
    def test_resolution_absent_from_train(self, labeled_corpus):
        split = build_split(
            labeled_corpus, RQ2_LEAVE_RESOLUTION_OUT, seed=5, excluded_key="256x144"
        )
        images = by_id(labeled_corpus)
        assert all(images[i].resolution != (256, 144) for i in split.train_ids)
        assert all(images[i].resolution != (256, 144) for i in split.val_ids)
        assert all(images[i].resolution == (256, 144) for i in split.test_ids)

    def test_campaign_coverage_and_caps(self, labeled_corpus):
        options = SplitOptions(rq2_max_per_campaign=10, rq2_max_benign=50)
        split = build_split(
            labeled_corpus, RQ2_LEAVE_RESOLUTION_OUT, seed=5,
            excluded_key="256x144", options=options,
        )
        images = by_id(labeled_corpus)
        test = [images[i] for i in split.test_ids]
        per_campaign = {}
        for im in test:
            if im.class_name == SE:
                per_campaign[im.campaign] = per_campaign.get(im.campaign, 0) + 1
        assert per_campaign and all(v <= 10 for v in per_campaign.values())
        assert sum(1 for im in test if im.class_name == BENIGN) <= 50
        train_campaigns = {
            images[i].campaign for i in split.train_ids if images[i].class_name == SE
        }
        assert set(per_campaign) <= train_campaigns

    def test_unknown_resolution_errors(self, labeled_corpus):
        with pytest.raises(SplitError):
            build_split(labeled_corpus, RQ2_LEAVE_RESOLUTION_OUT, seed=5,
                        excluded_key="999x999")


class TestRQ3:
    def test_campaign_absent_from_train_and_val(self, labeled_corpus):
        split = build_split(
            labeled_corpus, RQ3_LEAVE_CAMPAIGN_OUT, seed=7, excluded_key="camp_2"
        )
        images = by_id(labeled_corpus)
        for ids in (split.train_ids, split.val_ids):
            assert all(images[i].campaign != "camp_2" for i in ids)
        test_se = [i for i in split.test_ids if images[i].class_name == SE]
        assert test_se and all(images[i].campaign == "camp_2" for i in test_se)

    def test_benign_test_quota(self, labeled_corpus):
        options = SplitOptions(rq3_test_benign=77)
        split = build_split(
            labeled_corpus, RQ3_LEAVE_CAMPAIGN_OUT, seed=7, excluded_key="camp_0",
            options=options,
        )
        images = by_id(labeled_corpus)
        benign_test = [i for i in split.test_ids if images[i].class_name == BENIGN]
        assert len(benign_test) == 77

    def test_unknown_campaign_errors(self, labeled_corpus):
        with pytest.raises(SplitError):
            build_split(labeled_corpus, RQ3_LEAVE_CAMPAIGN_OUT, seed=7,
                        excluded_key="camp_404")


class TestCommon:
    @pytest.mark.parametrize(
        "scenario,key",
        [(RQ1_RANDOM, None), (RQ2_LEAVE_RESOLUTION_OUT, "128x256"),
         (RQ3_LEAVE_CAMPAIGN_OUT, "camp_1")],
    )
    def test_determinism_and_disjointness(self, labeled_corpus, scenario, key):
        options = SplitOptions(rq1_test_per_class=100)
        a = build_split(labeled_corpus, scenario, seed=11, excluded_key=key,
                        options=options)
        b = build_split(labeled_corpus, scenario, seed=11, excluded_key=key,
                        options=options)
        assert a == b
        assert not a.train_ids & a.test_ids
        assert not a.train_ids & a.val_ids
        assert not a.val_ids & a.test_ids
        c = build_split(labeled_corpus, scenario, seed=12, excluded_key=key,
                        options=options)
        assert c.test_ids != a.test_ids or c.train_ids != a.train_ids

    def test_manifest_round_trip(self, labeled_corpus, tmp_path):
        split = build_split(labeled_corpus, RQ3_LEAVE_CAMPAIGN_OUT, seed=2,
                            excluded_key="camp_3")
        path = tmp_path / "split.json"
        split.save(path)
        assert DatasetSplit.load(path) == split

    def test_unknown_scenario_rejected(self, labeled_corpus):
        with pytest.raises(SplitError):
            build_split(labeled_corpus, "rq9_mystery", seed=0)
