from .ops import (
    ANCHORS,
    FACTOR_RANGE,
    HUE_RANGE,
    KINDS,
    SCALE_RANGE,
    SOLARIZE_RANGE,
    AugmentationError,
    AugmentationSpec,
    apply,
    draw_spec,
)
from .quota import AugmentPlan, QuotaError, augment_to_quota, reencode_jpeg

__all__ = [name for name in dir() if not name.startswith("_")]
