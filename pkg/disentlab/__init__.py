"""disentlab: disentangled training and fairness audits on synthetic fundus data.

Usage::

    from disentlab import GeneratorConfig, generate_dataset, split_dataset

    data = generate_dataset(GeneratorConfig(n_patients=200, confound_rho=0.9))
    splits = split_dataset(data)
"""

from disentlab.config import (
    AuditConfig,
    ExperimentConfig,
    GeneratorConfig,
    LossWeights,
    TrainConfig,
    load_config,
)
from disentlab.errors import DisentlabError
from disentlab.fairaudit import (
    AuditReport,
    PredictionRecord,
    audit,
    compare_reports,
)
from disentlab.synthgen import (
    Dataset,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_dataset,
)
from disentlab.trainer import (
    predict,
    train,
    train_baseline,
    train_disentangled,
)

__version__ = "0.1.0"

__all__ = [
    "AuditConfig",
    "AuditReport",
    "Dataset",
    "DisentlabError",
    "ExperimentConfig",
    "GeneratorConfig",
    "LossWeights",
    "PredictionRecord",
    "TrainConfig",
    "__version__",
    "audit",
    "compare_reports",
    "generate_dataset",
    "load_config",
    "load_dataset",
    "predict",
    "save_dataset",
    "split_dataset",
    "train",
    "train_baseline",
    "train_disentangled",
]
