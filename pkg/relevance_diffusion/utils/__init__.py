"""Configuration, checkpoint and artifact utilities."""

from relevance_diffusion.utils.config_manager import (
    TrainConfig,
    load_config,
    save_config,
    config_hash,
    list_presets,
    load_preset,
    save_preset,
    delete_preset
)
from relevance_diffusion.utils.checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    'TrainConfig',
    'load_config',
    'save_config',
    'config_hash',
    'list_presets',
    'load_preset',
    'save_preset',
    'delete_preset',
    'Checkpoint',
    'load_checkpoint',
    'save_checkpoint'
]
