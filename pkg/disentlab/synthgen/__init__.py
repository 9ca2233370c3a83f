"""Synthetic fundus-like datasets with a controllable SA/DR confound."""

from disentlab.synthgen.augment import (
    AugmentParams,
    augment,
    draw_params,
    random_augment,
)
from disentlab.synthgen.dataset import (
    META_COLUMNS,
    Dataset,
    Sample,
    SplitAssignment,
)
from disentlab.synthgen.generator import (
    binarize_icdr,
    empirical_correlation,
    generate_dataset,
    joint_table,
)
from disentlab.synthgen.io import dataset_hash, load_dataset, save_dataset
from disentlab.synthgen.split import split_dataset, split_prevalence

__all__ = [
    "META_COLUMNS",
    "AugmentParams",
    "Dataset",
    "Sample",
    "SplitAssignment",
    "augment",
    "binarize_icdr",
    "dataset_hash",
    "draw_params",
    "empirical_correlation",
    "generate_dataset",
    "joint_table",
    "load_dataset",
    "random_augment",
    "save_dataset",
    "split_dataset",
    "split_prevalence",
]
