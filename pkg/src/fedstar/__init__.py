"""Deterministic simulator for federated semi-supervised self-training.

Clients holding mostly unlabeled data jointly train a classifier via
temperature-scaled pseudo-labeling under a cosine-scheduled confidence
threshold, aggregated by sample-weighted federated averaging, with an
optional contrastive pretraining stage for faster convergence.
"""

from .data import (
    ClientDataset,
    Dataset,
    PartitionSpec,
    SplitSpec,
    load_dataset,
    make_blobs,
    partition_class_availability,
    partition_clients,
    partition_quantity_skew,
    save_dataset,
    split_holdout,
    split_labeled,
)
from .errors import FedstarError, ParameterError, ShapeError, SpecError
from .experiment import (
    ComparisonReport,
    ExperimentSpec,
    default_spec,
    emit_csv,
    load_spec,
    run_experiment,
    save_spec,
    sweep,
)
from .federation import (
    FederationConfig,
    FederationHistory,
    RoundRecord,
    centralized_train,
    fedavg_aggregate,
    run_federation,
    sample_clients,
)
from .nn import (
    ArchSpec,
    Gradient,
    LossSpec,
    ModelParams,
    OptimizerState,
    adam_step,
    backward,
    cross_entropy,
    evaluate,
    forward,
    fresh_adam_state,
    init_params,
    load_params,
    save_params,
    softmax_temperature,
)
from .pretrain import (
    ContrastiveConfig,
    EncoderWithHead,
    bilinear_similarity,
    contrastive_pretrain,
    init_encoder,
    sample_positive_pair,
)
from .selftrain import (
    ClientStats,
    PseudoLabelOutcome,
    SelfTrainConfig,
    client_update,
    pseudo_label,
    supervised_update,
    threshold_at,
)

__version__ = "0.1.0"

__all__ = [
    "ArchSpec",
    "ClientDataset",
    "ClientStats",
    "ComparisonReport",
    "ContrastiveConfig",
    "Dataset",
    "EncoderWithHead",
    "ExperimentSpec",
    "FederationConfig",
    "FederationHistory",
    "FedstarError",
    "Gradient",
    "LossSpec",
    "ModelParams",
    "OptimizerState",
    "ParameterError",
    "PartitionSpec",
    "PseudoLabelOutcome",
    "RoundRecord",
    "SelfTrainConfig",
    "ShapeError",
    "SpecError",
    "SplitSpec",
    "adam_step",
    "backward",
    "bilinear_similarity",
    "centralized_train",
    "client_update",
    "contrastive_pretrain",
    "cross_entropy",
    "default_spec",
    "emit_csv",
    "evaluate",
    "fedavg_aggregate",
    "forward",
    "fresh_adam_state",
    "init_encoder",
    "init_params",
    "load_dataset",
    "load_params",
    "load_spec",
    "make_blobs",
    "partition_class_availability",
    "partition_clients",
    "partition_quantity_skew",
    "pseudo_label",
    "run_experiment",
    "run_federation",
    "sample_clients",
    "sample_positive_pair",
    "save_dataset",
    "save_params",
    "save_spec",
    "softmax_temperature",
    "split_holdout",
    "split_labeled",
    "supervised_update",
    "sweep",
    "threshold_at",
]
