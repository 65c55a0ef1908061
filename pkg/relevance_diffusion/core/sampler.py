#!/usr/bin/env python3
"""
Ancestral sampling of the explainable variable W
"""

from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from relevance_diffusion.errors import NumericalAbort
from relevance_diffusion.core.schedule import forward_closed


@dataclass
class GeneratedBatch:
    """Generated samples W (n, D) and their provenance"""
    w: np.ndarray
    seed: int
    T: int
    mode: str

    def sidecar(self):
        return {"seed": self.seed, "T": self.T, "mode": self.mode, "n": int(self.w.shape[0]),
                "D": int(self.w.shape[1])}


def ancestral_step(x_t, t, eps_hat, sched, eta):
    """
    One reverse step

    x_{t-1} = (x_t - (1 - alpha_t) / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t) + sigma_t * eta,
    with sigma_1 = 0 so eta is ignored at t = 1.
    """
    t = int(sched.check_step(t))
    x_t = np.asarray(x_t, dtype=np.float64)
    alpha = sched.alphas[t - 1]
    alpha_bar = sched.alpha_bars[t - 1]
    mean = (x_t - (1.0 - alpha) / np.sqrt(1.0 - alpha_bar) * eps_hat) / np.sqrt(alpha)
    if t == 1:
        return mean
    return mean + sched.sigmas[t - 1] * eta


def generate(net, sched, n, stream, mode='xddpm', verbose=False):
    """
    Run the reverse process from x_T ~ N(0, I) down to W = x_0

    Both training modes share this recurrence; `mode` only tags the batch.

    Args:
        net: DenoiserNet
        sched: Schedule
        n: Number of samples
        stream: RngStream; step t draws from stream.derive(t)

    Returns:
        GeneratedBatch

    Raises:
        NumericalAbort: On a non-finite intermediate, naming the step
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x = stream.derive(0).normal((int(n), net.D))
    for t in tqdm(range(sched.T, 0, -1), desc="Sampling", disable=not verbose):
        eps_hat = net.evaluate(x, t)
        eta = stream.derive(t).normal(x.shape) if t > 1 else None
        x = ancestral_step(x, t, eps_hat, sched, eta)
        if not np.all(np.isfinite(x)):
            raise NumericalAbort(f"Non-finite sample values at step {t}", {"step": t})
    return GeneratedBatch(w=x, seed=stream.seed, T=sched.T, mode=mode)


def predicted_passthrough_variance(sched):
    """
    Exact variance of a coordinate of W whose predicted noise is always 0

    Follows v_{t-1} = v_t / alpha_t + sigma_t^2 from v_T = 1.
    """
    v = 1.0
    for t in range(sched.T, 0, -1):
        v = v / sched.alphas[t - 1] + sched.sigmas[t - 1] ** 2
    return float(v)


def relevance_from_denoiser(net, sched, probes, stream, x0=None):
    """
    Mean |eps_hat_j| over noised probes at random steps

    Args:
        net: DenoiserNet
        sched: Schedule
        probes: Number of probe points
        stream: RngStream
        x0: Optional clean data rows to noise (standard normal if None)

    Returns:
        Per-coordinate non-negative scores, shape (D,)
    """
    if probes < 1:
        raise ValueError(f"probes must be >= 1, got {probes}")
    probes = int(probes)
    if x0 is None:
        clean = stream.normal((probes, net.D))
    else:
        x0 = np.asarray(x0, dtype=np.float64)
        clean = x0[stream.integers(0, x0.shape[0], probes)]
    t = stream.integers(1, sched.T + 1, probes)
    eps = stream.normal((probes, net.D))
    x_t = forward_closed(clean, t, eps, sched)
    return np.mean(np.abs(net.evaluate(x_t, t)), axis=0)
