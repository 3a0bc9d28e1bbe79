"""Staged fine-tuning driver over curriculum manifests and JSONL corpora."""
from .datafiles import DatasetError, Row, ensure_trainable, read_rows, training_rows
from .plans import (
    FixedEpochs,
    LossPlateau,
    ManifestError,
    PlanError,
    StagePlan,
    TrainingOptions,
    load_manifest,
    plan_stages,
    validate_chain,
)
from .runner import (
    PreflightResult,
    StageError,
    TrainRequest,
    describe_stage,
    preflight,
    run_stage,
)

__all__ = [
    "DatasetError",
    "FixedEpochs",
    "LossPlateau",
    "ManifestError",
    "PlanError",
    "PreflightResult",
    "Row",
    "StageError",
    "StagePlan",
    "TrainRequest",
    "TrainingOptions",
    "describe_stage",
    "ensure_trainable",
    "load_manifest",
    "plan_stages",
    "preflight",
    "read_rows",
    "run_stage",
    "training_rows",
    "validate_chain",
]

__version__ = "0.1.0"
