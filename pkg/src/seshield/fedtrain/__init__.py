from .partition import ClientPartition, PartitionError, partition
from .snapshots import SnapshotError, WeightSnapshot, average_weights, scale_weights
from .trainer import (
    FedConfig,
    LoaderStats,
    TrainingDiagnosticError,
    TrainResult,
    derive_seed,
    evaluate_scores,
    load_batch,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
