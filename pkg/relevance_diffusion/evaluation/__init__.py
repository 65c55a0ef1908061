"""Evaluation metrics for trained relevance-masked diffusion models."""

from relevance_diffusion.evaluation.metrics import (
    EvalReport,
    mask_auc,
    ks_statistic,
    ks_critical_value,
    learned_mask,
    evaluate
)

__all__ = [
    'EvalReport',
    'mask_auc',
    'ks_statistic',
    'ks_critical_value',
    'learned_mask',
    'evaluate'
]
