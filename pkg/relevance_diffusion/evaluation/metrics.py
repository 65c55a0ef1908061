#!/usr/bin/env python3
"""
Evaluation: mask recovery, Gaussianity of pass-through coordinates and
fidelity of the denoised ones
"""

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

from relevance_diffusion.core.sampler import generate, predicted_passthrough_variance, relevance_from_denoiser
from relevance_diffusion.core.vib import clamp_unit


KS_CRITICAL_COEFFICIENT = 1.63  # alpha = 0.01
MIN_KS_SAMPLES = 20
RELEVANCE_PROBES = 2000


def mask_auc(mask_mean, truth):
    """
    Probability that a random relevant coordinate outranks a random irrelevant one

    Ties count one half.

    Raises:
        ValueError: If truth contains only one class
    """
    mask_mean = np.asarray(mask_mean, dtype=np.float64)
    truth = np.asarray(truth).astype(bool)
    if mask_mean.shape != truth.shape:
        raise ValueError(f"mask_mean {mask_mean.shape} and truth {truth.shape} differ in shape")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("mask_auc needs both relevant and irrelevant coordinates in truth")
    ranks = stats.rankdata(mask_mean)
    return float((ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def ks_statistic(samples, standardize=True):
    """
    Kolmogorov-Smirnov distance to the standard normal

    Args:
        samples: At least 20 values
        standardize: Subtract the sample mean and divide by the sample std first

    Raises:
        ValueError: Too few samples, or zero variance when standardizing
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < MIN_KS_SAMPLES:
        raise ValueError(f"ks_statistic needs at least {MIN_KS_SAMPLES} samples, got {samples.size}")
    if standardize:
        std = np.std(samples, ddof=1)
        if std == 0:
            raise ValueError("Cannot standardize samples with zero variance")
        samples = (samples - np.mean(samples)) / std
    return float(stats.kstest(samples, 'norm').statistic)


def ks_critical_value(n):
    return KS_CRITICAL_COEFFICIENT / np.sqrt(n)


@dataclass
class EvalReport:
    """Metrics of a trained model against a dataset with known relevant coordinates"""
    mask_auc: float = None
    mask_mean: list = field(default_factory=list)
    denoiser_relevance: list = field(default_factory=list)
    denoiser_auc: float = None
    truth_mask: list = field(default_factory=list)
    mean: list = field(default_factory=list)
    var: list = field(default_factory=list)
    skewness: list = field(default_factory=list)
    excess_kurtosis: list = field(default_factory=list)
    ks: list = field(default_factory=list)
    positive_fraction: list = field(default_factory=list)
    data_var: list = field(default_factory=list)
    max_abs_cross_corr: float = None
    predicted_irrelevant_var: float = None
    irrelevant_var_standard_error: float = None
    ks_critical: float = None
    n_gen: int = 0

    def to_dict(self):
        return asdict(self)

    def per_coordinate_rows(self):
        for j in range(len(self.mean)):
            yield [j, self.truth_mask[j], self.mask_mean[j], self.denoiser_relevance[j], self.mean[j],
                   self.var[j], self.skewness[j], self.excess_kurtosis[j], self.ks[j],
                   self.positive_fraction[j], self.data_var[j]]

    PER_COORDINATE_COLUMNS = ['coordinate', 'relevant', 'mask_mean', 'denoiser_relevance', 'mean', 'var',
                              'skewness', 'excess_kurtosis', 'ks', 'positive_fraction', 'data_var']

    def passthrough_coordinates_gaussian(self):
        """Every irrelevant coordinate passes the standardized KS test"""
        return all(ks < self.ks_critical for ks, rel in zip(self.ks, self.truth_mask) if not rel)


def learned_mask(mask_net, x):
    """Mean clamped mask over the rows of x"""
    mu_raw, _ = mask_net.evaluate(np.atleast_2d(x))
    return np.mean(clamp_unit(mu_raw), axis=0)


def evaluate(checkpoint, dataset, n_gen, stream, verbose=False):
    """
    Score a checkpoint against a dataset

    Args:
        checkpoint: Trained Checkpoint
        dataset: SyntheticDataset with the checkpoint's D; its last 20% is used as held-out data
        n_gen: Number of W samples to generate
        stream: RngStream for sampling and probing

    Returns:
        EvalReport
    """
    if dataset.D != checkpoint.theta.D:
        raise ValueError(f"Dataset has D={dataset.D}, checkpoint expects D={checkpoint.theta.D}")
    if n_gen < MIN_KS_SAMPLES:
        raise ValueError(f"n_gen must be >= {MIN_KS_SAMPLES}, got {n_gen}")
    sched = checkpoint.config.build_schedule()
    _, held_out = dataset.split()
    truth = dataset.relevant

    if verbose:
        print(f"Evaluating on {held_out.N} held-out rows, generating {n_gen} samples")

    report = EvalReport(n_gen=int(n_gen), truth_mask=[int(v) for v in dataset.truth_mask])
    mask_mean = learned_mask(checkpoint.phi_mask, held_out.x)
    scores = relevance_from_denoiser(checkpoint.theta, sched, RELEVANCE_PROBES, stream.derive(2), x0=held_out.x)
    report.mask_mean = [float(v) for v in mask_mean]
    report.denoiser_relevance = [float(v) for v in scores]
    if dataset.has_both_classes:
        report.mask_auc = mask_auc(mask_mean, truth)
        report.denoiser_auc = mask_auc(scores, truth)

    w = generate(checkpoint.theta, sched, n_gen, stream.derive(1), mode=checkpoint.mode, verbose=verbose).w
    report.mean = [float(v) for v in np.mean(w, axis=0)]
    report.var = [float(v) for v in np.var(w, axis=0, ddof=1)]
    report.skewness = [float(v) for v in stats.skew(w, axis=0)]
    report.excess_kurtosis = [float(v) for v in stats.kurtosis(w, axis=0, fisher=True)]
    report.ks = [ks_statistic(w[:, j], standardize=True) for j in range(w.shape[1])]
    report.positive_fraction = [float(v) for v in np.mean(w > 0, axis=0)]
    report.data_var = [float(v) for v in np.var(held_out.x, axis=0, ddof=1)]
    report.ks_critical = float(ks_critical_value(n_gen))

    v = predicted_passthrough_variance(sched)
    report.predicted_irrelevant_var = v
    report.irrelevant_var_standard_error = float(v * np.sqrt(2.0 / (n_gen - 1)))

    if dataset.has_both_classes:
        corr = np.corrcoef(w, rowvar=False)
        cross = np.abs(corr[np.ix_(~truth, truth)])
        report.max_abs_cross_corr = float(np.nanmax(cross))
    return report
