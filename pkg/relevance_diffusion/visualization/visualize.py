#!/usr/bin/env python3
"""
Visualization module for training runs and generated samples
"""

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def plot_loss_trace(trace, title="Training Losses"):
    """Plot logged loss components and the smoothed denoise loss"""
    plt.figure(figsize=(12, 6))
    steps = trace.steps

    plt.subplot(2, 1, 1)
    plt.plot(steps, [row.denoise for row in trace.rows], alpha=0.4, label="denoise")
    plt.plot(steps, trace.ema_denoise, label="denoise (EMA)")
    if trace.has_relevant:
        plt.plot(steps, trace.ema_denoise_relevant, label="relevant coordinates (EMA)")
    plt.ylabel("Loss")
    plt.title(title)
    plt.legend()

    plt.subplot(2, 1, 2)
    plt.plot(steps, [row.kl for row in trace.rows], label="KL")
    plt.plot(steps, [row.signal_mse for row in trace.rows], label="signal MSE")
    plt.xlabel("Step")
    plt.ylabel("VIB terms")
    plt.legend()

    plt.tight_layout()
    return plt.gcf()


def plot_mask(mask_mean, truth, title="Learned Relevance Mask"):
    """Bar plot of the mean mask per coordinate, coloured by ground truth"""
    plt.figure(figsize=(12, 4))
    truth = np.asarray(truth).astype(bool)
    coords = np.arange(len(mask_mean))
    colors = np.where(truth, "tab:red", "tab:gray")
    plt.bar(coords, mask_mean, color=colors)
    plt.ylim(0.0, 1.05)
    plt.xlabel("Coordinate")
    plt.ylabel("Mask mean")
    plt.title(f"{title} (red = relevant)")
    plt.tight_layout()
    return plt.gcf()


def plot_sample_histograms(w, truth, data_x=None, title="Generated Coordinates", bins=50):
    """One histogram per coordinate of W, with the data distribution overlaid"""
    n_coords = w.shape[1]
    cols = min(4, n_coords)
    rows = int(np.ceil(n_coords / cols))
    plt.figure(figsize=(3 * cols, 2.5 * rows))
    truth = np.asarray(truth).astype(bool)

    for j in range(n_coords):
        plt.subplot(rows, cols, j + 1)
        plt.hist(w[:, j], bins=bins, density=True, alpha=0.6, label="W")
        if data_x is not None:
            plt.hist(data_x[:, j], bins=bins, density=True, histtype="step", label="data")
        plt.title(f"{j} ({'relevant' if truth[j] else 'irrelevant'})", fontsize=8)

    plt.suptitle(title)
    plt.tight_layout()
    return plt.gcf()


def plot_speed_comparison(trace_xddpm, trace_ddpm, threshold=None, title="Learning Speed"):
    """Smoothed relevant-coordinate denoise loss of both training modes"""
    plt.figure(figsize=(10, 5))
    for label, trace in (("xddpm", trace_xddpm), ("ddpm-baseline", trace_ddpm)):
        ema = trace.ema_denoise_relevant if trace.has_relevant else trace.ema_denoise
        plt.plot(trace.steps, ema, label=label)
    if threshold is not None:
        plt.axhline(threshold, color="black", linestyle="--", label="threshold")
    plt.xlabel("Step")
    plt.ylabel("Denoise loss on relevant coordinates (EMA)")
    plt.title(title)
    plt.legend()
    plt.tight_layout()
    return plt.gcf()


def save_figure(fig, path):
    fig.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return path
