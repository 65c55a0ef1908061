"""Visualization utilities for training runs and samples."""

from relevance_diffusion.visualization.visualize import (
    plot_loss_trace,
    plot_mask,
    plot_sample_histograms,
    plot_speed_comparison,
    save_figure
)

__all__ = [
    'plot_loss_trace',
    'plot_mask',
    'plot_sample_histograms',
    'plot_speed_comparison',
    'save_figure'
]
