from .experiments import (
    DEFAULT_HELDOUT_RESOLUTIONS,
    ExperimentResult,
    ProtocolResult,
    pool_scores,
    run_rq1,
    run_rq2,
    run_rq3,
)
from .metrics import (
    EvalReport,
    MetricsError,
    ScoredExample,
    confusion,
    dr_at_fp,
    metrics_report,
    rates_from_confusion,
    roc_auc,
    threshold_at_fp,
)
from .reporting import PAPER_COLUMNS, write_roc, write_table

__all__ = [name for name in dir() if not name.startswith("_")]
