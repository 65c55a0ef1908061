#!/usr/bin/env python3
"""
Gradient checks of every training loss on a tiny randomly initialized model
"""

import numpy as np

from relevance_diffusion.core.objectives import ddpm_loss_grad, joint_loss_grad
from relevance_diffusion.core.tensor import ParamVector, RngStream, STREAM_GRADCHECK, grad_check
from relevance_diffusion.core.trainer import build_networks
from relevance_diffusion.core.vib import vib_loss_grad


GRADCHECK_TOLERANCE = 1e-5
GRADCHECK_STEP = 1e-5
GRADCHECK_BATCH = 2

# Applied when no config file is given
TINY_MODEL = {
    "D": 4, "d": 1, "k": 2, "T": 50,
    "denoiser_hidden": [8], "mask_hidden": [8], "signal_hidden": [8],
}


def _probe_batch(cfg, sched):
    stream = RngStream(cfg.seed, STREAM_GRADCHECK)
    B = GRADCHECK_BATCH
    return {
        "x0": stream.normal((B, cfg.D)),
        "s": stream.normal((B, cfg.d)),
        "t": stream.integers(1, sched.T + 1, B),
        "eps": stream.normal((B, cfg.D)),
        "eta": stream.normal((B, cfg.D)),
    }


def gradient_suite(cfg, h=GRADCHECK_STEP, corrupt=False):
    """
    Check ddpm_loss, vib_loss and joint_loss gradients

    Args:
        cfg: TrainConfig describing the model to check
        h: Finite-difference step
        corrupt: Scale analytic gradients by 1.001 (negative control)

    Returns:
        dict {'ddpm_loss': GradReport, 'vib_loss': GradReport, 'joint_loss': GradReport}
    """
    sched = cfg.build_schedule()
    nets = build_networks(cfg)
    batch = _probe_batch(cfg, sched)
    factor = 1.001 if corrupt else 1.0

    theta, mask_net, sig_net = nets['theta'], nets['phi_mask'], nets['phi_sig']

    def ddpm(values):
        net = theta.with_params(theta.params.replace(values))
        loss, grad = ddpm_loss_grad(net, batch["x0"], batch["t"], batch["eps"], sched)
        return loss, factor * grad

    vib_templates = {'phi_mask': mask_net.params, 'phi_sig': sig_net.params}
    vib_params = ParamVector.stack(vib_templates)

    def vib(values):
        parts = vib_params.replace(values).split(vib_templates)
        breakdown, g_mask, g_sig = vib_loss_grad(mask_net.with_params(parts['phi_mask']),
                                                 sig_net.with_params(parts['phi_sig']),
                                                 batch["x0"], batch["s"], cfg.beta_ib, batch["eta"])
        return breakdown.total, factor * np.concatenate([g_mask, g_sig])

    joint_templates = {key: net.params for key, net in nets.items()}
    joint_params = ParamVector.stack(joint_templates)

    def joint(values):
        parts = joint_params.replace(values).split(joint_templates)
        current = {key: nets[key].with_params(parts[key]) for key in nets}
        breakdown, grads = joint_loss_grad(current['theta'], current['phi_mask'], current['phi_sig'],
                                           batch["x0"], batch["s"], batch["t"], batch["eps"], batch["eta"],
                                           cfg, sched)
        return breakdown.total, factor * np.concatenate([grads[key] for key in joint_templates])

    stream = RngStream(cfg.seed, STREAM_GRADCHECK).derive(1)
    return {
        'ddpm_loss': grad_check(theta.params, ddpm, h=h, stream=stream),
        'vib_loss': grad_check(vib_params, vib, h=h, stream=stream),
        'joint_loss': grad_check(joint_params, joint, h=h, stream=stream),
    }
