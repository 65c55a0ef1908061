#!/usr/bin/env python3
"""
Checkpoint serialization: config echo, network parameters and optimizer state as JSON
"""

import os
import json
from dataclasses import dataclass

from relevance_diffusion.errors import CheckpointError, ConfigError
from relevance_diffusion.core.networks import get_available_networks
from relevance_diffusion.core.optimizer import OptimizerState
from relevance_diffusion.core.tensor import ParamVector
from relevance_diffusion.utils.config_manager import config_from_dict


FORMAT_VERSION = 1
NET_KINDS = {'theta': 'denoiser', 'phi_mask': 'mask_encoder', 'phi_sig': 'signal_decoder'}
MODES = ('xddpm', 'ddpm-baseline')


@dataclass
class Checkpoint:
    """Everything needed to resume training or sample from a run"""
    config: object
    step: int
    mode: str
    nets: dict
    optimizer: OptimizerState
    format_version: int = FORMAT_VERSION

    @property
    def theta(self):
        return self.nets['theta']

    @property
    def phi_mask(self):
        return self.nets['phi_mask']

    @property
    def phi_sig(self):
        return self.nets['phi_sig']

    def to_dict(self):
        data = {
            "format_version": self.format_version,
            "mode": self.mode,
            "step": int(self.step),
            "config": self.config.to_dict(),
            "arch": {key: net.arch() for key, net in self.nets.items()},
        }
        for key, net in self.nets.items():
            data[key] = net.params.to_dict()
        data["optimizer"] = self.optimizer.to_dict()
        return data

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise CheckpointError("Checkpoint must be a JSON object")
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"Unsupported checkpoint format_version {version!r}, expected {FORMAT_VERSION}")
        try:
            config = config_from_dict(data["config"])
            if data["mode"] not in MODES:
                raise CheckpointError(f"Unknown training mode {data['mode']!r}")
            networks = get_available_networks()
            nets = {}
            for key, kind in NET_KINDS.items():
                template = networks[kind](**data["arch"][key])
                params = ParamVector.from_dict(template.mlp.layout, data[key])
                nets[key] = template.with_params(params)
            optimizer = OptimizerState.from_dict(data["optimizer"])
            step = int(data["step"])
        except KeyError as e:
            raise CheckpointError(f"Checkpoint is missing field {e}")
        except (ConfigError, ValueError, TypeError) as e:
            if isinstance(e, CheckpointError):
                raise
            raise CheckpointError(f"Invalid checkpoint: {e}")
        return cls(config=config, step=step, mode=data["mode"], nets=nets, optimizer=optimizer,
                   format_version=version)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise CheckpointError(f"Checkpoint is not valid JSON: {e}")
        return cls.from_dict(data)


def save_checkpoint(checkpoint, path):
    """Write a checkpoint and return its path"""
    with open(path, 'w') as f:
        f.write(checkpoint.to_json())
    return path


def load_checkpoint(path):
    """
    Load a checkpoint file

    Raises:
        CheckpointError: Missing file, parse failure or version mismatch
    """
    if not os.path.exists(path):
        raise CheckpointError(f"Checkpoint not found: {path}")
    with open(path, 'r') as f:
        return Checkpoint.from_json(f.read())
