from .backbones import (
    FAMILIES,
    HEAD_GLOBAL_MAX_SOFTMAX2,
    AdaptedModel,
    BackboneError,
    BackboneSpec,
    adapt_backbone,
    predict,
)
from .batching import SizeBucketedBatcher, make_batches
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .preprocess import (
    FAMILY_NORM,
    IMAGENET_NORM,
    UNIT_NORM,
    PreprocessError,
    PreprocessPolicy,
    load_image,
    normalized_bounds,
    preprocess,
    preprocess_tensor,
)

__all__ = [name for name in dir() if not name.startswith("_")]
