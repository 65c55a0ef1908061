#!/usr/bin/env python3
"""
Synthetic (x, s) datasets with known relevant coordinates
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from relevance_diffusion.core.tensor import RngStream, STREAM_DATA


# Relevant block: equal-weight mixture of N(+m, sd^2 I) and N(-m, sd^2 I)
MIXTURE_MEAN = 1.5
MIXTURE_STD = 0.5
HELD_OUT_FRACTION = 0.2


@dataclass
class SyntheticDataset:
    """Aligned rows of features x (N, D) and signal s (N, d) plus the ground-truth mask"""
    x: np.ndarray
    s: np.ndarray
    truth_mask: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.s = np.asarray(self.s, dtype=np.float64)
        self.truth_mask = np.asarray(self.truth_mask, dtype=np.int64)
        if self.x.ndim != 2 or self.s.ndim != 2 or self.x.shape[0] != self.s.shape[0]:
            raise ValueError(f"x and s must be row-aligned 2-D arrays, got {self.x.shape} and {self.s.shape}")
        if self.truth_mask.shape != (self.x.shape[1],):
            raise ValueError(f"truth_mask must have length {self.x.shape[1]}")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.s))):
            raise ValueError("Dataset contains non-finite values")

    @property
    def N(self):
        return self.x.shape[0]

    @property
    def D(self):
        return self.x.shape[1]

    @property
    def d(self):
        return self.s.shape[1]

    @property
    def relevant(self):
        return self.truth_mask.astype(bool)

    @property
    def has_both_classes(self):
        k = int(self.truth_mask.sum())
        return 0 < k < self.D

    def subset(self, rows):
        return SyntheticDataset(self.x[rows], self.s[rows], self.truth_mask, dict(self.meta))

    def split(self, held_out_fraction=HELD_OUT_FRACTION):
        """Return (train, held_out); the held-out part is the last rows"""
        n_held = int(round(self.N * held_out_fraction))
        cut = self.N - n_held
        return self.subset(slice(0, cut)), self.subset(slice(cut, self.N))


class DatasetGenerator(ABC):
    """Base class for synthetic dataset generators"""

    @abstractmethod
    def sample(self, stream, N):
        """
        Draw one dataset

        Args:
            stream: RngStream to draw from
            N: Number of rows

        Returns:
            x, s, truth_mask
        """
        pass

    @abstractmethod
    def params(self):
        pass

    @property
    def name(self):
        """Return the name of the generator"""
        return self.__class__.__name__

    def generate(self, seed, N):
        if int(N) < 1:
            raise ValueError(f"N must be >= 1, got {N}")
        stream = RngStream(seed, STREAM_DATA)
        x, s, truth = self.sample(stream, int(N))
        meta = {"generator": self.name, "params": self.params(), "seed": int(seed), "N": int(N)}
        return SyntheticDataset(x, s, truth, meta)


class _MixtureBlockGenerator(DatasetGenerator):
    """Shared construction: k bimodal relevant coordinates among D, the rest N(0, 1)"""

    def __init__(self, D=16, k=4, d=1, signal_noise=0.1):
        if not 1 <= k < D:
            raise ValueError(f"Need 1 <= k < D, got k={k}, D={D}")
        if not 1 <= d <= k:
            raise ValueError(f"Need 1 <= d <= k, got d={d}, k={k}")
        if signal_noise < 0:
            raise ValueError(f"signal_noise must be >= 0, got {signal_noise}")
        self.D = int(D)
        self.k = int(k)
        self.d = int(d)
        self.signal_noise = float(signal_noise)

    def params(self):
        return {"D": self.D, "k": self.k, "d": self.d, "signal_noise": self.signal_noise}

    def _readout(self, stream):
        matrix = stream.normal((self.d, self.k))
        return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)

    @abstractmethod
    def signal(self, z, matrix):
        pass

    def sample(self, stream, N):
        relevant = np.sort(stream.choice(self.D, self.k, replace=False))
        matrix = self._readout(stream)

        # Each relevant coordinate draws its own mode
        signs = 2.0 * stream.integers(0, 2, (N, self.k)) - 1.0
        z = signs * MIXTURE_MEAN + MIXTURE_STD * stream.normal((N, self.k))
        noise = stream.normal((N, self.D - self.k))
        zeta = stream.normal((N, self.d))

        truth = np.zeros(self.D, dtype=np.int64)
        truth[relevant] = 1
        x = np.empty((N, self.D))
        x[:, relevant] = z
        x[:, truth == 0] = noise

        s = self.signal(z, matrix) + self.signal_noise * zeta
        return x, s, truth


class LinearMixtureGenerator(_MixtureBlockGenerator):
    """s = A z + noise with unit-norm rows of A"""

    def signal(self, z, matrix):
        return z @ matrix.T


class QuadraticMixtureGenerator(_MixtureBlockGenerator):
    """s_j = sum_i B_ji z_i^2 - c_j, centred analytically"""

    def signal(self, z, matrix):
        second_moment = MIXTURE_MEAN ** 2 + MIXTURE_STD ** 2
        return (z ** 2) @ matrix.T - second_moment * matrix.sum(axis=1)


class BimodalGenerator(DatasetGenerator):
    """One-dimensional 1/2 N(-2, 0.5^2) + 1/2 N(+2, 0.5^2) with a dummy zero signal"""

    def __init__(self, mode_distance=2.0, mode_std=0.5):
        self.mode_distance = float(mode_distance)
        self.mode_std = float(mode_std)

    def params(self):
        return {"mode_distance": self.mode_distance, "mode_std": self.mode_std}

    def sample(self, stream, N):
        signs = 2.0 * stream.integers(0, 2, N) - 1.0
        x = signs * self.mode_distance + self.mode_std * stream.normal(N)
        return x[:, None], np.zeros((N, 1)), np.ones(1, dtype=np.int64)


def get_available_datasets():
    """Return a dictionary of available dataset generators"""
    return {
        'linear': LinearMixtureGenerator,
        'nonlinear': QuadraticMixtureGenerator,
        'gmm': BimodalGenerator,
    }


def create_dataset(name, seed, N, D=16, k=4, d=1, signal_noise=0.1):
    """
    Generate a dataset by registry name

    Args:
        name: 'linear', 'nonlinear' or 'gmm' ('gmm' ignores D, k, d and signal_noise)
        seed: Generator seed
        N: Number of rows

    Returns:
        SyntheticDataset
    """
    available = get_available_datasets()
    if name not in available:
        raise ValueError(f"Unknown dataset '{name}', expected one of {sorted(available)}")
    if name == 'gmm':
        generator = available[name]()
    else:
        generator = available[name](D=D, k=k, d=d, signal_noise=signal_noise)
    return generator.generate(seed, N)


def gen_linear_dataset(seed, N, D, k, d=1, signal_noise=0.1):
    return LinearMixtureGenerator(D=D, k=k, d=d, signal_noise=signal_noise).generate(seed, N)


def gen_nonlinear_dataset(seed, N, D, k, d=1, signal_noise=0.1):
    return QuadraticMixtureGenerator(D=D, k=k, d=d, signal_noise=signal_noise).generate(seed, N)


def gen_gmm_dataset(seed, N):
    return BimodalGenerator().generate(seed, N)
