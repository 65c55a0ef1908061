"""Synthetic datasets with known relevant coordinates."""

from relevance_diffusion.datasets.synthetic import (
    SyntheticDataset,
    get_available_datasets,
    create_dataset,
    gen_linear_dataset,
    gen_nonlinear_dataset,
    gen_gmm_dataset
)

__all__ = [
    'SyntheticDataset',
    'get_available_datasets',
    'create_dataset',
    'gen_linear_dataset',
    'gen_nonlinear_dataset',
    'gen_gmm_dataset'
]
