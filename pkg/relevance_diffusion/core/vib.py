#!/usr/bin/env python3
"""
Variational information bottleneck over a per-feature relevance mask

X_S = X * M is modelled as N(clamp(mu_M) * x, softplus(xi_M * x)), the
prior is N(0, I) and the signal decoder is a unit-variance Gaussian.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

# Lower bound on the bottleneck variance
VAR_FLOOR = 1e-6


@dataclass
class RelevanceMask:
    """Clamped mask mean M in [0, 1]^D (per sample when batched)"""
    mean: np.ndarray


@dataclass
class XsDistribution:
    """Diagonal Gaussian over the bottleneck variable X_S"""
    mean: np.ndarray
    var: np.ndarray


@dataclass
class VibBreakdown:
    """Batch-mean VIB terms; total = kl + beta_ib / 2 * signal_mse"""
    kl: float
    signal_mse: float
    total: float
    mask: RelevanceMask


def softplus(z):
    """ln(1 + e^z) without overflow"""
    return np.logaddexp(0.0, z)


def clamp_unit(z):
    return np.clip(z, 0.0, 1.0)


def clamp_unit_grad(z):
    """Derivative of clamp to [0, 1]: 1 on the closed interval, 0 outside"""
    return ((z >= 0.0) & (z <= 1.0)).astype(np.float64)


def mask_distribution(mu_raw, xi, x):
    """
    Build the relevance mask and the X_S distribution from encoder outputs

    Args:
        mu_raw: Unclamped mask mean, shape (D,) or (B, D)
        xi: Mask logit, same shape
        x: Input features, same shape

    Returns:
        (RelevanceMask, XsDistribution)
    """
    mu_raw = np.asarray(mu_raw, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if not (mu_raw.shape == xi.shape == x.shape):
        raise ValueError(f"Shape mismatch: mu_raw {mu_raw.shape}, xi {xi.shape}, x {x.shape}")

    mask = clamp_unit(mu_raw)
    var = np.maximum(softplus(xi * x), VAR_FLOOR)
    return RelevanceMask(mean=mask), XsDistribution(mean=mask * x, var=var)


def reparam_sample(dist, eta):
    """x_s = mean + sqrt(var) * eta"""
    eta = np.asarray(eta, dtype=np.float64)
    if eta.shape != dist.mean.shape:
        raise ValueError(f"eta has shape {eta.shape}, expected {dist.mean.shape}")
    return dist.mean + np.sqrt(dist.var) * eta


def kl_to_standard_normal(dist):
    """
    KL(N(mean, var) || N(0, I)) summed over the feature axis

    Returns a float for a single sample, an array of per-sample values for a batch.
    """
    var = np.asarray(dist.var, dtype=np.float64)
    if np.any(var <= 0):
        raise ValueError("XsDistribution variance must be strictly positive")
    kl = 0.5 * np.sum(dist.mean ** 2 + var - np.log(var) - 1.0, axis=-1)
    return float(kl) if np.ndim(kl) == 0 else kl


class VibPass:
    """
    Forward pass of the VIB term over a batch, kept for backpropagation

    The mask M computed here is what the masked denoising loss consumes, so
    the joint objective sends both gradient paths through one encoder pass.
    """

    def __init__(self, mask_net, sig_net, x, s, eta):
        self.mask_net = mask_net
        self.sig_net = sig_net
        self.x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        self.s = np.atleast_2d(np.asarray(s, dtype=np.float64))
        self.eta = np.atleast_2d(np.asarray(eta, dtype=np.float64))
        if self.s.shape != (self.x.shape[0], sig_net.d):
            raise ValueError(f"s must have shape {(self.x.shape[0], sig_net.d)}, got {self.s.shape}")
        if self.eta.shape != self.x.shape:
            raise ValueError(f"eta must have shape {self.x.shape}, got {self.eta.shape}")

        encoded, self._mask_cache = mask_net.forward(self.x)
        D = mask_net.D
        self.mu_raw = encoded[:, :D]
        self.xi = encoded[:, D:]
        self.mask, self.dist = mask_distribution(self.mu_raw, self.xi, self.x)
        self.x_s = reparam_sample(self.dist, self.eta)
        self.mu_s, self._sig_cache = sig_net.forward(self.x_s)

        self.kl_per_sample = kl_to_standard_normal(self.dist)
        self.mse_per_sample = np.sum((self.mu_s - self.s) ** 2, axis=1)

    @property
    def batch_size(self):
        return self.x.shape[0]

    def breakdown(self, beta_ib):
        kl = float(np.mean(self.kl_per_sample))
        mse = float(np.mean(self.mse_per_sample))
        return VibBreakdown(kl=kl, signal_mse=mse, total=kl + 0.5 * beta_ib * mse, mask=self.mask)

    def backward(self, beta_ib, weight=1.0, grad_mask=None):
        """
        Gradients of weight * mean_batch(kl + beta_ib/2 * mse) (+ an upstream mask gradient)

        Args:
            beta_ib: IB trade-off coefficient
            weight: Multiplier on the VIB term (lambda in the joint objective)
            grad_mask: Optional extra d(loss)/d(M), shape (B, D)

        Returns:
            (grad of mask-encoder params, grad of signal-decoder params)
        """
        scale = weight / self.batch_size
        std = np.sqrt(self.dist.var)

        # Decoder term back to the sampled x_s
        grad_mu_s = scale * beta_ib * (self.mu_s - self.s)
        grad_sig, grad_x_s = self.sig_net.backward(self._sig_cache, grad_mu_s)

        # KL plus the reparameterized path into the X_S mean and variance
        grad_mean = scale * self.dist.mean + grad_x_s
        grad_var = scale * 0.5 * (1.0 - 1.0 / self.dist.var) + grad_x_s * self.eta / (2.0 * std)

        # Mean is M * x; the clamp passes gradient only inside [0, 1]
        grad_m = grad_mean * self.x
        if grad_mask is not None:
            grad_m = grad_m + grad_mask
        grad_mu_raw = grad_m * clamp_unit_grad(self.mu_raw)

        # Variance is softplus(xi * x), flat where the floor is active
        z = self.xi * self.x
        above_floor = (softplus(z) > VAR_FLOOR).astype(np.float64)
        grad_xi = grad_var * above_floor * expit(z) * self.x

        # Both heads share one trunk
        grad_mask_params = self.mask_net.backward(self._mask_cache, grad_mu_raw, grad_xi)
        return grad_mask_params, grad_sig


def vib_loss(mask_net, sig_net, x, s, beta_ib, eta):
    """
    Variational bottleneck loss

    Single samples give the per-sample value; batches give batch means.

    Returns:
        VibBreakdown
    """
    if beta_ib < 0:
        raise ValueError(f"beta_ib must be >= 0, got {beta_ib}")
    vib = VibPass(mask_net, sig_net, x, s, eta)
    breakdown = vib.breakdown(beta_ib)
    if np.ndim(x) == 1:
        breakdown.mask = RelevanceMask(mean=breakdown.mask.mean[0])
    return breakdown


def vib_loss_grad(mask_net, sig_net, x, s, beta_ib, eta):
    """VIB loss together with gradients w.r.t. both networks' parameters"""
    if beta_ib < 0:
        raise ValueError(f"beta_ib must be >= 0, got {beta_ib}")
    vib = VibPass(mask_net, sig_net, x, s, eta)
    grad_mask, grad_sig = vib.backward(beta_ib)
    return vib.breakdown(beta_ib), grad_mask, grad_sig
