#!/usr/bin/env python3
"""
Joint training of the denoiser and the relevance bottleneck
"""

import time
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from relevance_diffusion.errors import NumericalAbort
from relevance_diffusion.core.networks import create_networks
from relevance_diffusion.core.objectives import joint_loss_grad, baseline_loss_grad
from relevance_diffusion.core.optimizer import Adam, OptimizerState
from relevance_diffusion.core.tensor import RngStream, STREAM_INIT, STREAM_TRAIN
from relevance_diffusion.utils.checkpoint import Checkpoint, MODES


EMA_DECAY = 0.99

TRACE_COLUMNS = ['step', 'denoise', 'kl', 'signal_mse', 'total', 'ema_denoise', 'wall_ms',
                 'denoise_relevant', 'ema_denoise_relevant']


@dataclass
class TrainState:
    """Networks plus optimizer state between steps"""
    nets: dict
    optimizer: OptimizerState


@dataclass
class TrainTrace:
    """
    Logged loss rows with exponentially smoothed denoise losses

    The EMAs run over the logged rows (decay 0.99, seeded with the first
    row), so they can always be recomputed from `rows`.
    """
    rows: list = field(default_factory=list)
    ema_denoise: list = field(default_factory=list)
    ema_denoise_relevant: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)

    def append(self, row, wall_ms=0.0):
        self.rows.append(row)
        self.wall_ms.append(float(wall_ms))
        self.ema_denoise.append(_ema_next(self.ema_denoise, row.denoise))
        if row.denoise_relevant is None:
            self.ema_denoise_relevant.append(None)
        else:
            self.ema_denoise_relevant.append(_ema_next(self.ema_denoise_relevant, row.denoise_relevant))

    def __len__(self):
        return len(self.rows)

    @property
    def steps(self):
        return [row.step for row in self.rows]

    @property
    def has_relevant(self):
        return bool(self.rows) and self.rows[0].denoise_relevant is not None

    def recompute_ema(self, attribute='denoise'):
        ema = []
        for row in self.rows:
            ema.append(_ema_next(ema, getattr(row, attribute)))
        return ema

    def csv_rows(self, record_timing=True):
        for i, row in enumerate(self.rows):
            yield [row.step, row.denoise, row.kl, row.signal_mse, row.total, self.ema_denoise[i],
                   self.wall_ms[i] if record_timing else 0.0,
                   row.denoise_relevant, self.ema_denoise_relevant[i]]


def _ema_next(history, value):
    if not history or history[-1] is None:
        return float(value)
    return EMA_DECAY * history[-1] + (1.0 - EMA_DECAY) * float(value)


def build_networks(cfg):
    """The three networks for a config, Glorot-initialized from the init stream"""
    return create_networks(
        cfg.D, cfg.d,
        denoiser_hidden=cfg.denoiser_hidden,
        mask_hidden=cfg.mask_hidden,
        signal_hidden=cfg.signal_hidden,
        time_embed=cfg.time_embed,
        stream=RngStream(cfg.seed, STREAM_INIT),
    )


def initial_state(cfg):
    nets = build_networks(cfg)
    return TrainState(nets=nets, optimizer=OptimizerState.zeros_like({k: n.params for k, n in nets.items()}))


def step_stream(cfg, step):
    """Random stream of training step `step`; depends only on (seed, step)"""
    return RngStream(cfg.seed, STREAM_TRAIN).derive(step)


def train_step(state, batch, stream, cfg, sched, mode='xddpm', truth=None, step=None):
    """
    One gradient step on a batch

    Per sample draws t uniform in 1..T and standard-normal eps and eta,
    averages the loss over the batch and applies one Adam update. The
    baseline mode updates only the denoiser with the plain denoising loss.

    Args:
        state: TrainState
        batch: dict with 'x0' (B, D) and 's' (B, d)
        stream: RngStream for this step's draws
        cfg: TrainConfig
        sched: Schedule
        mode: 'xddpm' or 'ddpm-baseline'
        truth: Optional ground-truth relevance indicator for the restricted loss
        step: Step number reported in the breakdown (defaults to optimizer step + 1)

    Returns:
        (new TrainState, LossBreakdown)

    Raises:
        NumericalAbort: If the loss, gradients or updated parameters are not finite
    """
    if mode not in MODES:
        raise ValueError(f"Unknown training mode '{mode}', expected one of {MODES}")
    x0 = np.asarray(batch['x0'], dtype=np.float64)
    s = np.asarray(batch['s'], dtype=np.float64)
    if x0.ndim != 2 or x0.shape[0] < 1:
        raise ValueError("batch['x0'] must be a non-empty (B, D) array")
    B, D = x0.shape
    step = state.optimizer.step + 1 if step is None else step

    t = stream.integers(1, sched.T + 1, B)
    eps = stream.normal((B, D))
    eta = stream.normal((B, D))

    nets = state.nets
    if mode == 'xddpm':
        breakdown, grads = joint_loss_grad(nets['theta'], nets['phi_mask'], nets['phi_sig'],
                                           x0, s, t, eps, eta, cfg, sched, truth=truth)
    else:
        breakdown, grads = baseline_loss_grad(nets['theta'], x0, t, eps, sched, truth=truth)
    breakdown.step = step

    diagnostics = {"step": step, "mode": mode, **breakdown.to_dict()}
    if not np.isfinite(breakdown.total):
        raise NumericalAbort(f"Non-finite loss at step {step}", diagnostics)
    for key, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NumericalAbort(f"Non-finite gradient for '{key}' at step {step}", {**diagnostics, "group": key})

    optimizer = Adam(lr=cfg.lr)
    new_values, new_opt = optimizer.update({k: n.params for k, n in nets.items()}, grads, state.optimizer)
    new_nets = dict(nets)
    for key, values in new_values.items():
        if not np.all(np.isfinite(values)):
            raise NumericalAbort(f"Non-finite parameters for '{key}' after step {step}", {**diagnostics, "group": key})
        new_nets[key] = nets[key].with_params(nets[key].params.replace(values))
    return TrainState(nets=new_nets, optimizer=new_opt), breakdown


def train_loop(cfg, dataset, mode='xddpm', resume=None, verbose=True):
    """
    Train for cfg.total_steps steps (or up to it, when resuming)

    Batches come from the training split (all but the last 20% of rows),
    drawn without replacement within a batch.

    Args:
        cfg: TrainConfig
        dataset: SyntheticDataset
        mode: 'xddpm' or 'ddpm-baseline'
        resume: Optional Checkpoint to continue from
        verbose: Print status and show a progress bar

    Returns:
        (Checkpoint, TrainTrace)
    """
    if mode not in MODES:
        raise ValueError(f"Unknown training mode '{mode}', expected one of {MODES}")
    if dataset.D != cfg.D or dataset.d != cfg.d:
        raise ValueError(f"Dataset is (D={dataset.D}, d={dataset.d}), config expects (D={cfg.D}, d={cfg.d})")
    train, _ = dataset.split()
    if train.N < cfg.batch_size:
        raise ValueError(f"Training split has {train.N} rows, fewer than batch_size={cfg.batch_size}")

    sched = cfg.build_schedule()
    truth = dataset.truth_mask if dataset.has_both_classes else None

    if resume is None:
        state = initial_state(cfg)
        start = 0
    else:
        state = TrainState(nets=dict(resume.nets), optimizer=resume.optimizer)
        start = resume.step

    trace = TrainTrace()
    if verbose:
        print(f"Training {mode} for {max(cfg.total_steps - start, 0)} steps "
              f"(D={cfg.D}, d={cfg.d}, T={cfg.T}, batch={cfg.batch_size})")

    started = time.perf_counter()
    with tqdm(total=max(cfg.total_steps - start, 0), desc=f"Training {mode}", disable=not verbose) as pbar:
        for step in range(start + 1, cfg.total_steps + 1):
            stream = step_stream(cfg, step)
            rows = stream.choice(train.N, cfg.batch_size, replace=False)
            batch = {'x0': train.x[rows], 's': train.s[rows]}
            state, breakdown = train_step(state, batch, stream, cfg, sched, mode=mode, truth=truth, step=step)

            if step % cfg.log_every == 0 or step == cfg.total_steps:
                trace.append(breakdown, wall_ms=1000.0 * (time.perf_counter() - started))
                pbar.set_postfix(denoise=f"{trace.ema_denoise[-1]:.4f}")
            pbar.update(1)

    checkpoint = Checkpoint(config=cfg, step=max(cfg.total_steps, start), mode=mode,
                            nets=state.nets, optimizer=state.optimizer)
    return checkpoint, trace


def steps_to_threshold(trace, threshold, restricted=True):
    """
    First logged step whose smoothed denoise loss is <= threshold

    Args:
        trace: Non-empty TrainTrace
        threshold: Loss level
        restricted: Use the loss restricted to ground-truth relevant coordinates when recorded

    Returns:
        Step number, or None if never reached
    """
    if not trace.rows:
        raise ValueError("steps_to_threshold needs a non-empty trace")
    ema = trace.ema_denoise_relevant if restricted and trace.has_relevant else trace.ema_denoise
    for row, value in zip(trace.rows, ema):
        if value <= threshold:
            return row.step
    return None


def final_smoothed_loss(trace, restricted=True):
    ema = trace.ema_denoise_relevant if restricted and trace.has_relevant else trace.ema_denoise
    return ema[-1]
