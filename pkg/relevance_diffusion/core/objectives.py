#!/usr/bin/env python3
"""
Training losses: plain denoising, masked denoising and the joint objective
"""

from dataclasses import dataclass, asdict

import numpy as np

from relevance_diffusion.core.schedule import forward_closed
from relevance_diffusion.core.vib import RelevanceMask, VibPass


@dataclass
class LossBreakdown:
    """
    Batch-mean loss components at one training step

    total = denoise + lambda_vib * (kl + beta_ib / 2 * signal_mse).
    denoise_relevant is the same denoising error (masked target for the
    joint objective, plain eps for the baseline) summed over the
    ground-truth relevant coordinates only, None when no truth is known;
    it does not enter the total.
    """
    denoise: float
    kl: float
    signal_mse: float
    total: float
    step: int = 0
    denoise_relevant: float = None

    def to_dict(self):
        return asdict(self)


class DenoisePass:
    """Forward pass of the (masked) denoising loss over a batch"""

    def __init__(self, net, x0, t, eps, sched, mask=None):
        self.net = net
        single = np.ndim(x0) == 1
        self.x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
        self.eps = np.atleast_2d(np.asarray(eps, dtype=np.float64))
        if self.x0.shape != self.eps.shape or self.x0.shape[1] != net.D:
            raise ValueError(f"x0 {self.x0.shape} and eps {self.eps.shape} must both be (B, {net.D})")
        self.t = np.broadcast_to(sched.check_step(t), (self.x0.shape[0],))

        self.x_t = forward_closed(self.x0, self.t, self.eps, sched)
        self.eps_hat, self._cache = net.forward(self.x_t, self.t)

        if mask is None:
            self.target = self.eps
        else:
            mask = np.asarray(mask.mean if isinstance(mask, RelevanceMask) else mask, dtype=np.float64)
            mask = np.broadcast_to(np.atleast_2d(mask), self.eps.shape)
            self.target = self.eps * mask
        self.residual = self.target - self.eps_hat
        self.per_sample = np.sum(self.residual ** 2, axis=1)
        self.single = single

    @property
    def batch_size(self):
        return self.x0.shape[0]

    def value(self):
        return float(self.per_sample[0]) if self.single else float(np.mean(self.per_sample))

    def relevant_error(self, truth):
        """Batch-mean squared residual against this pass's target, summed over the coordinates in `truth`"""
        truth = np.asarray(truth, dtype=bool)
        return float(np.mean(np.sum(self.residual[:, truth] ** 2, axis=1)))

    def backward(self):
        """Gradients of the batch mean w.r.t. the denoiser params and the mask"""
        grad_eps_hat = -2.0 * self.residual / self.batch_size
        grad_theta = self.net.backward(self._cache, grad_eps_hat)
        grad_mask = 2.0 * self.residual * self.eps / self.batch_size
        return grad_theta, grad_mask


def ddpm_loss(net, x0, t, eps, sched):
    """||eps - eps_theta(x_t, t)||^2 with x_t from the closed-form forward process"""
    return DenoisePass(net, x0, t, eps, sched).value()


def ddpm_loss_grad(net, x0, t, eps, sched):
    """ddpm_loss and its gradient w.r.t. the denoiser parameters"""
    denoise = DenoisePass(net, x0, t, eps, sched)
    grad_theta, _ = denoise.backward()
    return denoise.value(), grad_theta


def masked_denoise_loss(net, mask, x0, t, eps, sched):
    """
    ||eps * M - eps_theta(x_t, t)||^2

    The denoiser always sees the fully noised x_t; the mask only gates the target.
    """
    return DenoisePass(net, x0, t, eps, sched, mask=mask).value()


def _check_weights(cfg):
    if cfg.lambda_vib < 0 or cfg.beta_ib < 0:
        raise ValueError("lambda_vib and beta_ib must be non-negative")


def joint_loss(theta_net, mask_net, sig_net, x0, s, t, eps, eta, cfg, sched, truth=None):
    """
    Joint objective: masked denoising + lambda_vib * VIB

    One encoder pass supplies the mask to the denoising term and the
    (kl, signal_mse) pair to the VIB term.

    Returns:
        LossBreakdown
    """
    breakdown, _ = _joint(theta_net, mask_net, sig_net, x0, s, t, eps, eta, cfg, sched, truth, False)
    return breakdown


def joint_loss_grad(theta_net, mask_net, sig_net, x0, s, t, eps, eta, cfg, sched, truth=None):
    """
    Joint objective with gradients

    Returns:
        (LossBreakdown, {'theta': grad, 'phi_mask': grad, 'phi_sig': grad})
    """
    return _joint(theta_net, mask_net, sig_net, x0, s, t, eps, eta, cfg, sched, truth, True)


def _joint(theta_net, mask_net, sig_net, x0, s, t, eps, eta, cfg, sched, truth, need_grad):
    _check_weights(cfg)
    vib = VibPass(mask_net, sig_net, x0, s, eta)
    denoise = DenoisePass(theta_net, x0, t, eps, sched, mask=vib.mask)
    vib_terms = vib.breakdown(cfg.beta_ib)

    denoise_value = float(np.mean(denoise.per_sample))
    breakdown = LossBreakdown(
        denoise=denoise_value,
        kl=vib_terms.kl,
        signal_mse=vib_terms.signal_mse,
        total=denoise_value + cfg.lambda_vib * vib_terms.total,
        denoise_relevant=None if truth is None else denoise.relevant_error(truth),
    )
    if not need_grad:
        return breakdown, None

    grad_theta, grad_mask = denoise.backward()
    grad_phi_mask, grad_phi_sig = vib.backward(cfg.beta_ib, weight=cfg.lambda_vib, grad_mask=grad_mask)
    return breakdown, {'theta': grad_theta, 'phi_mask': grad_phi_mask, 'phi_sig': grad_phi_sig}


def baseline_loss_grad(theta_net, x0, t, eps, sched, truth=None):
    """Plain denoising step for the baseline: kl and signal_mse are zero by convention"""
    denoise = DenoisePass(theta_net, x0, t, eps, sched)
    grad_theta, _ = denoise.backward()
    value = float(np.mean(denoise.per_sample))
    breakdown = LossBreakdown(
        denoise=value, kl=0.0, signal_mse=0.0, total=value,
        denoise_relevant=None if truth is None else denoise.relevant_error(truth),
    )
    return breakdown, {'theta': grad_theta}
