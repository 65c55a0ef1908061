#!/usr/bin/env python3
"""
Training configuration: defaults, JSON loading/validation and named presets
"""

import os
import json
import hashlib
from dataclasses import dataclass, field, asdict, fields

from relevance_diffusion.errors import ConfigError
from relevance_diffusion.core.schedule import SCHEDULE_KINDS, build_schedule
from relevance_diffusion.datasets import get_available_datasets


DEFAULT_PRESETS_DIR = os.path.expanduser("~/.relevance_diffusion/presets")


@dataclass
class TrainConfig:
    """Every knob of an experiment; JSON config files use these field names as keys"""
    lambda_vib: float = 1.0
    beta_ib: float = 10.0
    lr: float = 1e-3
    batch_size: int = 64
    total_steps: int = 10000
    seed: int = 0
    D: int = 16
    d: int = 2
    k: int = 4
    N: int = 8000
    dataset: str = 'linear'
    signal_noise: float = 0.1
    data_seed: int = None
    T: int = 200
    schedule: str = 'linear'
    beta_start: float = None
    beta_end: float = None
    denoiser_hidden: list = field(default_factory=lambda: [64, 64])
    mask_hidden: list = field(default_factory=lambda: [64, 64])
    signal_hidden: list = field(default_factory=lambda: [64, 64])
    time_embed: int = 16
    loss_threshold: float = None
    log_every: int = 10
    record_timing: bool = True

    @property
    def dataset_seed(self):
        return self.seed if self.data_seed is None else self.data_seed

    def to_dict(self):
        return asdict(self)

    def replace(self, **changes):
        data = self.to_dict()
        data.update(changes)
        return TrainConfig(**data)

    def build_schedule(self):
        return build_schedule(self.schedule, self.T, self.beta_start, self.beta_end)

    def validate(self):
        """
        Check every value

        Raises:
            ConfigError: Naming the first offending key
        """
        def require(ok, key, message):
            if not ok:
                raise ConfigError(key, message)

        require(self.lambda_vib >= 0, 'lambda_vib', f"must be >= 0, got {self.lambda_vib}")
        require(self.beta_ib >= 0, 'beta_ib', f"must be >= 0, got {self.beta_ib}")
        require(self.lr > 0, 'lr', f"must be > 0, got {self.lr}")
        require(self.batch_size >= 1, 'batch_size', f"must be >= 1, got {self.batch_size}")
        require(self.total_steps >= 0, 'total_steps', f"must be >= 0, got {self.total_steps}")
        require(0 <= self.seed < 2 ** 64, 'seed', "must be an unsigned 64-bit integer")
        require(self.data_seed is None or 0 <= self.data_seed < 2 ** 64, 'data_seed',
                "must be null or an unsigned 64-bit integer")
        require(self.D >= self.d >= 1, 'd', f"need D >= d >= 1, got D={self.D}, d={self.d}")
        require(self.dataset in get_available_datasets(), 'dataset',
                f"unknown dataset '{self.dataset}', expected one of {sorted(get_available_datasets())}")
        if self.dataset == 'gmm':
            require(self.D == 1 and self.d == 1, 'D', "the gmm dataset needs D = 1 and d = 1")
        else:
            require(1 <= self.k < self.D, 'k', f"need 1 <= k < D, got k={self.k}, D={self.D}")
            require(self.d <= self.k, 'd', f"need d <= k, got d={self.d}, k={self.k}")
        require(self.N >= 1, 'N', f"must be >= 1, got {self.N}")
        require(self.signal_noise >= 0, 'signal_noise', f"must be >= 0, got {self.signal_noise}")
        require(self.schedule in SCHEDULE_KINDS, 'schedule',
                f"unknown schedule '{self.schedule}', expected one of {SCHEDULE_KINDS}")
        require(self.T >= 1, 'T', f"must be >= 1, got {self.T}")
        try:
            self.build_schedule()
        except ValueError as e:
            raise ConfigError('beta_start', str(e))
        for key in ('denoiser_hidden', 'mask_hidden', 'signal_hidden'):
            widths = getattr(self, key)
            require(len(widths) >= 1 and all(w >= 1 for w in widths), key,
                    f"must be a non-empty list of positive widths, got {widths}")
        require(self.time_embed >= 2 and self.time_embed % 2 == 0, 'time_embed',
                f"must be a positive even number, got {self.time_embed}")
        require(self.log_every >= 1, 'log_every', f"must be >= 1, got {self.log_every}")
        return self


_FIELD_KINDS = {
    'lambda_vib': 'float', 'beta_ib': 'float', 'lr': 'float', 'batch_size': 'int',
    'total_steps': 'int', 'seed': 'int', 'D': 'int', 'd': 'int', 'k': 'int', 'N': 'int',
    'dataset': 'str', 'signal_noise': 'float', 'data_seed': 'int?', 'T': 'int', 'schedule': 'str',
    'beta_start': 'float?', 'beta_end': 'float?', 'denoiser_hidden': 'ints',
    'mask_hidden': 'ints', 'signal_hidden': 'ints', 'time_embed': 'int',
    'loss_threshold': 'float?', 'log_every': 'int', 'record_timing': 'bool',
}


def _coerce(key, value):
    kind = _FIELD_KINDS[key]
    if kind.endswith('?'):
        if value is None:
            return None
        kind = kind[:-1]

    if kind == 'bool':
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if kind == 'str':
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if kind == 'ints':
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list of integers, got {value!r}")
        return [_coerce_int(key, v) for v in value]
    if kind == 'int':
        return _coerce_int(key, value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _coerce_int(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigError(key, f"expected an integer, got {value!r}")
        value = int(value)
    return value


def config_from_dict(data, verbose=False):
    """
    Build a validated TrainConfig from a flat mapping

    Unknown keys are rejected; missing keys take their defaults (one notice per key).
    """
    if not isinstance(data, dict):
        raise ConfigError(None, "Config must be a JSON object")
    known = {f.name for f in fields(TrainConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown config key")

    values = {key: _coerce(key, value) for key, value in data.items()}
    config = TrainConfig(**values)
    if verbose:
        for key in sorted(known - set(data)):
            print(f"Config: '{key}' not set, using default {getattr(config, key)!r}")
    return config.validate()


def load_config(path=None, verbose=True):
    """
    Load a JSON config file

    Args:
        path: Path to the JSON file; None gives the defaults
        verbose: Print a notice for every defaulted key

    Returns:
        TrainConfig

    Raises:
        ConfigError: Malformed JSON, unknown keys or invalid values
    """
    if path is None:
        return TrainConfig().validate()
    if not os.path.exists(path):
        raise ConfigError(None, f"Config file not found: {path}")
    with open(path, 'r') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(None, f"Malformed JSON in {path}: {e}")
    return config_from_dict(data, verbose=verbose)


def save_config(config, path):
    with open(path, 'w') as f:
        json.dump(config.to_dict(), f, indent=2)
    return path


def config_hash(config):
    """SHA-256 of the canonical JSON form"""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def get_presets_dir():
    return os.environ.get("RELEVANCE_DIFFUSION_PRESETS", DEFAULT_PRESETS_DIR)


def ensure_presets_dir():
    """Ensure the presets directory exists"""
    presets_dir = get_presets_dir()
    os.makedirs(presets_dir, exist_ok=True)
    return presets_dir


def list_presets():
    """List all available presets"""
    presets_dir = ensure_presets_dir()
    return sorted(f[:-len(".json")] for f in os.listdir(presets_dir) if f.endswith(".json"))


def get_preset_path(preset_name):
    """Get the full path to a preset file"""
    return os.path.join(get_presets_dir(), f"{preset_name}.json")


def load_preset(preset_name):
    """
    Load a preset

    Raises:
        ConfigError: If the preset doesn't exist or is invalid
    """
    preset_path = get_preset_path(preset_name)
    if not os.path.exists(preset_path):
        raise ConfigError(None, f"Preset '{preset_name}' not found")
    return load_config(preset_path, verbose=False)


def save_preset(preset_name, config):
    """Save a config as a preset and return its path"""
    ensure_presets_dir()
    return save_config(config, get_preset_path(preset_name))


def delete_preset(preset_name):
    """
    Delete a preset

    Returns:
        bool: True if deleted, False if not found
    """
    preset_path = get_preset_path(preset_name)
    if not os.path.exists(preset_path):
        return False
    os.remove(preset_path)
    return True
