#!/usr/bin/env python3
"""
Noise schedules and the forward (diffusion) process
"""

from dataclasses import dataclass

import numpy as np


SCHEDULE_KINDS = ('linear', 'constant')


def default_beta_range(T):
    """Linear-schedule endpoints scaled so that alpha_bar_T matches the usual 1000-step regime"""
    scale = 1000.0 / T
    return 1e-4 * scale, 0.02 * scale


@dataclass(frozen=True, eq=False)
class Schedule:
    """
    Precomputed per-step tables, stored 0-based: entry t-1 belongs to step t

    Attributes:
        T: Number of diffusion steps
        betas: Per-step variances beta_t
        alphas: 1 - beta_t
        alpha_bars: Cumulative products of alphas
        sigmas: Reverse-process noise scales (sigma_1 = 0)
    """
    T: int
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    sigmas: np.ndarray

    @classmethod
    def from_betas(cls, betas):
        betas = np.array(betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 1:
            raise ValueError("betas must be a non-empty 1-D sequence")
        if np.any(betas <= 0) or np.any(betas >= 1):
            raise ValueError("every beta_t must lie strictly between 0 and 1")

        alphas = 1.0 - betas
        alpha_bars = np.cumprod(alphas)
        alpha_bars_prev = np.concatenate([[1.0], alpha_bars[:-1]])
        sigmas = np.sqrt(betas * (1.0 - alpha_bars_prev) / (1.0 - alpha_bars))
        sigmas[0] = 0.0

        for table in (betas, alphas, alpha_bars, sigmas):
            table.flags.writeable = False
        return cls(T=int(betas.size), betas=betas, alphas=alphas, alpha_bars=alpha_bars, sigmas=sigmas)

    def check_step(self, t):
        """Validate a step index (scalar or array) against 1..T"""
        t_arr = np.asarray(t)
        if not np.issubdtype(t_arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(t_arr, 1), 0)):
                raise ValueError(f"Diffusion step must be an integer, got {t}")
            t_arr = t_arr.astype(np.int64)
        if np.any(t_arr < 1) or np.any(t_arr > self.T):
            raise ValueError(f"Diffusion step out of range 1..{self.T}: {t}")
        return t_arr

    def beta(self, t):
        return self.betas[self.check_step(t) - 1]

    def alpha(self, t):
        return self.alphas[self.check_step(t) - 1]

    def alpha_bar(self, t):
        return self.alpha_bars[self.check_step(t) - 1]

    def sigma(self, t):
        return self.sigmas[self.check_step(t) - 1]

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        # The other tables are derived from the betas
        return self.T == other.T and np.array_equal(self.betas, other.betas)

    def __hash__(self):
        return hash((self.T, self.betas.tobytes()))

    def to_dict(self):
        return {"T": self.T, "betas": [float(b) for b in self.betas]}


def build_schedule(kind='linear', T=200, beta_start=None, beta_end=None):
    """
    Build a noise schedule

    Args:
        kind: 'linear' (beta_start -> beta_end inclusive) or 'constant' (beta_start everywhere)
        T: Number of steps
        beta_start: First beta; defaults to the T-scaled linear default
        beta_end: Last beta; defaults to the T-scaled linear default

    Returns:
        Schedule
    """
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"Unknown schedule kind '{kind}', expected one of {SCHEDULE_KINDS}")
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    T = int(T)

    default_start, default_end = default_beta_range(T)
    beta_start = default_start if beta_start is None else float(beta_start)
    beta_end = default_end if beta_end is None else float(beta_end)
    if kind == 'constant':
        beta_end = beta_start

    if not 0 < beta_start <= beta_end < 1:
        raise ValueError(f"Invalid beta range: need 0 < beta_start <= beta_end < 1, "
                         f"got {beta_start} and {beta_end}")

    if kind == 'linear':
        betas = np.linspace(beta_start, beta_end, T)
    else:
        betas = np.full(T, beta_start)
    return Schedule.from_betas(betas)


def forward_closed(x0, t, eps, sched):
    """
    Jump straight to step t of the forward process

    Args:
        x0: Clean sample(s), shape (D,) or (B, D)
        t: Step index, scalar or shape (B,)
        eps: Standard-normal noise, same shape as x0
        sched: Schedule

    Returns:
        sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"x0 and eps shapes differ: {x0.shape} vs {eps.shape}")
    a_bar = _per_row(sched.alpha_bar(t), x0)
    return np.sqrt(a_bar) * x0 + np.sqrt(1.0 - a_bar) * eps


def forward_step(x_prev, t, sched, noise):
    """One forward transition x_{t-1} -> x_t = sqrt(alpha_t) x_{t-1} + sqrt(beta_t) noise"""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if x_prev.shape != noise.shape:
        raise ValueError(f"x_prev and noise shapes differ: {x_prev.shape} vs {noise.shape}")
    alpha = _per_row(sched.alpha(t), x_prev)
    beta = _per_row(sched.beta(t), x_prev)
    return np.sqrt(alpha) * x_prev + np.sqrt(beta) * noise


def _per_row(values, x):
    """Broadcast a per-sample coefficient over the feature axis"""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1 and x.ndim == 2:
        if values.shape[0] != x.shape[0]:
            raise ValueError(f"Got {values.shape[0]} steps for a batch of {x.shape[0]}")
        return values[:, None]
    return values
