from .agreement import UndefinedAgreementError, krippendorff_alpha
from .clustering import DEFAULT_THRESHOLD, Cluster, cluster_by_phash, filter_clusters
from .corpus import BENIGN, SE, LabeledImage, build_corpus
from .metaclusters import (
    ATTACK_CATEGORIES,
    LABELS,
    TRAINABLE_LABELS,
    LabelError,
    LabelFile,
    LabelRow,
    MergeFileError,
    Metacluster,
    apply_labels,
    merge_metaclusters,
)
from .phash import HASH_BITS, hamming, perceptual_hash
from .records import (
    IngestError,
    IngestReport,
    ScreenshotRecord,
    bucket_by_resolution,
    content_hash_of,
    dedup,
    device_class_of,
    ingest_crawl_output,
)
from .splits import (
    RQ1_RANDOM,
    RQ2_LEAVE_RESOLUTION_OUT,
    RQ3_LEAVE_CAMPAIGN_OUT,
    SCENARIOS,
    DatasetSplit,
    SplitError,
    SplitOptions,
    build_split,
    parse_resolution_key,
)

__all__ = [name for name in dir() if not name.startswith("_")]
from .serialize import (  # noqa: E402
    load_clusters,
    load_corpus,
    load_metaclusters,
    load_records,
    save_clusters,
    save_corpus,
    save_metaclusters,
    save_records,
)
