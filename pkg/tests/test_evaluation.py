#!/usr/bin/env python3
"""
Tests for mask recovery, Gaussianity and fidelity metrics
"""

import os
import sys
import unittest
import numpy as np
from scipy import stats

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from relevance_diffusion.core.networks import create_networks
from relevance_diffusion.core.optimizer import OptimizerState
from relevance_diffusion.core.tensor import RngStream, STREAM_EVAL
from relevance_diffusion.datasets import create_dataset
from relevance_diffusion.evaluation import EvalReport, mask_auc, ks_statistic, ks_critical_value, evaluate
from relevance_diffusion.utils.checkpoint import Checkpoint
from relevance_diffusion.utils.config_manager import config_from_dict


def zero_checkpoint(cfg):
    nets = create_networks(cfg.D, cfg.d, cfg.denoiser_hidden, cfg.mask_hidden, cfg.signal_hidden, cfg.time_embed)
    optimizer = OptimizerState.zeros_like({key: net.params for key, net in nets.items()})
    return Checkpoint(config=cfg, step=0, mode='xddpm', nets=nets, optimizer=optimizer)


class TestMaskAuc(unittest.TestCase):
    """Test cases for mask_auc."""

    def setUp(self):
        self.truth = np.array([1, 0, 0, 1, 0])

    def test_perfect_ranking(self):
        self.assertEqual(mask_auc(self.truth.astype(float), self.truth), 1.0)

    def test_inverted_ranking(self):
        self.assertEqual(mask_auc(1.0 - self.truth, self.truth), 0.0)

    def test_ties_count_half(self):
        self.assertEqual(mask_auc(np.full(5, 0.3), self.truth), 0.5)

    def test_partial_ranking(self):
        # Relevant scores 0.9 and 0.2 against irrelevant 0.5, 0.1, 0.3: 4 of 6 pairs ordered
        scores = np.array([0.9, 0.5, 0.1, 0.2, 0.3])
        self.assertAlmostEqual(mask_auc(scores, self.truth), 4.0 / 6.0)

    def test_single_class(self):
        with self.assertRaises(ValueError):
            mask_auc(np.zeros(3), np.ones(3))
        with self.assertRaises(ValueError):
            mask_auc(np.zeros(3), np.ones(4))


class TestKs(unittest.TestCase):
    """Test cases for the KS statistic."""

    def test_quantile_samples(self):
        n = 1000
        samples = stats.norm.ppf((np.arange(n) + 0.5) / n)
        self.assertLess(ks_statistic(samples, standardize=False), 0.001)

    def test_point_mass(self):
        self.assertGreaterEqual(ks_statistic(np.full(50, 0.7), standardize=False), 0.5)

    def test_standard_normal_draws(self):
        draws = RngStream(0, STREAM_EVAL).normal(2000)
        self.assertLess(ks_statistic(draws), ks_critical_value(2000))
        self.assertAlmostEqual(ks_critical_value(2000), 0.0364, places=4)

    def test_standardizing_removes_scale(self):
        draws = RngStream(1, STREAM_EVAL).normal(500)
        self.assertAlmostEqual(ks_statistic(3.0 * draws + 2.0), ks_statistic(draws), places=12)

    def test_errors(self):
        with self.assertRaises(ValueError):
            ks_statistic(np.zeros(19))
        with self.assertRaises(ValueError):
            ks_statistic(np.ones(30), standardize=True)


class TestEvaluate(unittest.TestCase):
    """Test cases for evaluate on untrained networks."""

    def setUp(self):
        self.cfg = config_from_dict({"D": 4, "d": 1, "k": 2, "N": 200, "T": 50, "denoiser_hidden": [8],
                                     "mask_hidden": [8], "signal_hidden": [8], "time_embed": 4})
        self.dataset = create_dataset('linear', 0, 200, D=4, k=2, d=1)

    def test_zero_networks(self):
        report = evaluate(zero_checkpoint(self.cfg), self.dataset, 200, RngStream(0, STREAM_EVAL))
        self.assertEqual(report.mask_auc, 0.5)
        self.assertEqual(report.denoiser_auc, 0.5)
        self.assertEqual(report.mask_mean, [0.0] * 4)
        self.assertEqual(report.n_gen, 200)
        for values in (report.mean, report.var, report.ks, report.positive_fraction, report.data_var):
            self.assertEqual(len(values), 4)
        self.assertAlmostEqual(report.ks_critical, 1.63 / np.sqrt(200))
        self.assertGreater(report.predicted_irrelevant_var, 1.0)
        self.assertLessEqual(report.max_abs_cross_corr, 1.0)

    def test_per_coordinate_rows(self):
        report = evaluate(zero_checkpoint(self.cfg), self.dataset, 50, RngStream(0, STREAM_EVAL))
        rows = list(report.per_coordinate_rows())
        self.assertEqual(len(rows), 4)
        self.assertEqual(len(rows[0]), len(EvalReport.PER_COORDINATE_COLUMNS))
        self.assertEqual([row[1] for row in rows], [int(v) for v in self.dataset.truth_mask])

    def test_reproducible(self):
        first = evaluate(zero_checkpoint(self.cfg), self.dataset, 50, RngStream(3, STREAM_EVAL))
        second = evaluate(zero_checkpoint(self.cfg), self.dataset, 50, RngStream(3, STREAM_EVAL))
        self.assertEqual(first.to_dict(), second.to_dict())

    def test_single_class_dataset_skips_auc(self):
        cfg = config_from_dict({"dataset": "gmm", "D": 1, "d": 1, "T": 50, "denoiser_hidden": [8],
                                "mask_hidden": [8], "signal_hidden": [8], "time_embed": 4})
        report = evaluate(zero_checkpoint(cfg), create_dataset('gmm', 0, 100), 50, RngStream(0, STREAM_EVAL))
        self.assertIsNone(report.mask_auc)
        self.assertIsNone(report.max_abs_cross_corr)

    def test_errors(self):
        other = create_dataset('linear', 0, 200, D=5, k=2, d=1)
        with self.assertRaises(ValueError):
            evaluate(zero_checkpoint(self.cfg), other, 50, RngStream(0, STREAM_EVAL))
        with self.assertRaises(ValueError):
            evaluate(zero_checkpoint(self.cfg), self.dataset, 10, RngStream(0, STREAM_EVAL))


if __name__ == '__main__':
    unittest.main()
