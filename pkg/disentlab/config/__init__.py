"""Configuration models and the strict ``section.key=value`` parser."""

from disentlab.config.models import (
    AugmentationConfig,
    AuditConfig,
    ExperimentConfig,
    GeneratorConfig,
    LossWeights,
    SplitConfig,
    TrainConfig,
)
from disentlab.config.parser import dump_config, load_config, parse_config_text

__all__ = [
    "AugmentationConfig",
    "AuditConfig",
    "ExperimentConfig",
    "GeneratorConfig",
    "LossWeights",
    "SplitConfig",
    "TrainConfig",
    "dump_config",
    "load_config",
    "parse_config_text",
]
