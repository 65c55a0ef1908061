#!/usr/bin/env python3
"""
Tests for the relevance bottleneck
"""

import os
import sys
import unittest
import numpy as np
from scipy import stats

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from relevance_diffusion.core.networks import create_networks
from relevance_diffusion.core.tensor import ParamVector, RngStream, grad_check, STREAM_INIT
from relevance_diffusion.core.vib import (
    XsDistribution, VAR_FLOOR, softplus, clamp_unit, mask_distribution, reparam_sample,
    kl_to_standard_normal, vib_loss, vib_loss_grad
)


def closed_form_zero_kl(D):
    """KL of N(0, ln 2) against N(0, 1), summed over D coordinates"""
    return 0.5 * D * (np.log(2.0) - np.log(np.log(2.0)) - 1.0)


class TestMaskDistribution(unittest.TestCase):
    """Test cases for mask_distribution and the reparameterized sample."""

    def test_mask_scales_input(self):
        mask, dist = mask_distribution([0.5], [0.0], [2.0])
        np.testing.assert_array_equal(mask.mean, [0.5])
        np.testing.assert_array_equal(dist.mean, [1.0])

    def test_mask_is_clamped(self):
        mask, dist = mask_distribution([1.7, -0.3], [0.0, 0.0], [3.0, 1.0])
        np.testing.assert_array_equal(mask.mean, [1.0, 0.0])
        np.testing.assert_array_equal(dist.mean, [3.0, 0.0])

    def test_variance_is_softplus(self):
        _, dist = mask_distribution([0.2], [0.0], [5.0])
        self.assertAlmostEqual(dist.var[0], np.log(2.0), places=12)
        _, dist = mask_distribution([0.2], [1.0], [2.0])
        self.assertAlmostEqual(dist.var[0], np.log1p(np.exp(2.0)), places=12)

    def test_variance_floor(self):
        _, dist = mask_distribution([0.2], [-100.0], [10.0])
        self.assertEqual(dist.var[0], VAR_FLOOR)

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            mask_distribution([0.1, 0.2], [0.0], [1.0, 1.0])

    def test_softplus_is_stable(self):
        self.assertEqual(softplus(np.array([1000.0]))[0], 1000.0)
        self.assertGreater(softplus(np.array([-1000.0]))[0], -1.0)
        np.testing.assert_array_equal(clamp_unit(np.array([-1.0, 0.5, 2.0])), [0.0, 0.5, 1.0])

    def test_reparam_sample(self):
        dist = XsDistribution(mean=np.array([0.0]), var=np.array([4.0]))
        np.testing.assert_array_equal(reparam_sample(dist, [1.5]), [3.0])
        dist = XsDistribution(mean=np.array([0.7, -1.0]), var=np.array([2.0, 3.0]))
        np.testing.assert_array_equal(reparam_sample(dist, [0.0, 0.0]), dist.mean)
        with self.assertRaises(ValueError):
            reparam_sample(dist, [0.0])

    def test_reparam_sample_moments(self):
        dist = XsDistribution(mean=np.array([0.7, -1.2]), var=np.array([3.0, 0.25]))
        n = 100000
        stream = RngStream(13, 0)
        batch = XsDistribution(mean=np.tile(dist.mean, (n, 1)), var=np.tile(dist.var, (n, 1)))
        draws = reparam_sample(batch, stream.normal((n, 2)))
        for j in range(2):
            mean_se = np.sqrt(dist.var[j] / n)
            var_se = dist.var[j] * np.sqrt(2.0 / (n - 1))
            self.assertLess(abs(draws[:, j].mean() - dist.mean[j]), 3 * mean_se)
            self.assertLess(abs(draws[:, j].var(ddof=1) - dist.var[j]), 3 * var_se)


class TestKL(unittest.TestCase):
    """Test cases for the closed-form KL against N(0, I)."""

    def test_identical_gaussians(self):
        dist = XsDistribution(mean=np.zeros(5), var=np.ones(5))
        self.assertEqual(kl_to_standard_normal(dist), 0.0)

    def test_mean_shift(self):
        dist = XsDistribution(mean=np.array([1.0]), var=np.array([1.0]))
        self.assertAlmostEqual(kl_to_standard_normal(dist), 0.5)

    def test_variance_e(self):
        dist = XsDistribution(mean=np.array([0.0]), var=np.array([np.e]))
        self.assertAlmostEqual(kl_to_standard_normal(dist), (np.e - 2.0) / 2.0, places=12)

    def test_batched(self):
        dist = XsDistribution(mean=np.array([[1.0], [0.0]]), var=np.array([[1.0], [1.0]]))
        np.testing.assert_allclose(kl_to_standard_normal(dist), [0.5, 0.0])

    def test_non_positive_variance(self):
        with self.assertRaises(ValueError):
            kl_to_standard_normal(XsDistribution(mean=np.zeros(1), var=np.zeros(1)))

    def test_monte_carlo_agreement(self):
        stream = RngStream(21, 0)
        n = 1000000
        for _ in range(10):
            mu = stream.uniform(-2.0, 2.0, 1)[0]
            var = stream.uniform(0.1, 5.0, 1)[0]
            # Stratified draws: one uniform per quantile bin
            u = (np.arange(n) + stream.uniform(0.0, 1.0, n)) / n
            z = mu + np.sqrt(var) * stats.norm.ppf(u)
            # log q(z) - log p(z) for q = N(mu, var), p = N(0, 1)
            log_ratio = -0.5 * np.log(var) - 0.5 * (z - mu) ** 2 / var + 0.5 * z ** 2
            estimate = float(np.mean(log_ratio))
            exact = kl_to_standard_normal(XsDistribution(mean=np.array([mu]), var=np.array([var])))
            self.assertLess(abs(estimate - exact), 1e-2)

    def test_shrinking_mask_never_raises_kl(self):
        nets = create_networks(4, 1, [8], [8], [8], stream=RngStream(9, STREAM_INIT))
        x = RngStream(9, 0).normal((16, 4))
        mu_raw, xi = nets['phi_mask'].evaluate(x)
        previous = None
        for scale in np.linspace(1.0, 0.0, 11):
            _, dist = mask_distribution(scale * mu_raw, xi, x)
            kl = kl_to_standard_normal(dist)
            if previous is not None:
                self.assertTrue(np.all(kl <= previous + 1e-12))
            previous = kl
        # At zero mask only the variance term is left
        _, dist = mask_distribution(np.zeros_like(mu_raw), xi, x)
        np.testing.assert_allclose(kl_to_standard_normal(dist),
                                   0.5 * np.sum(dist.var - np.log(dist.var) - 1.0, axis=1))


class TestVibLoss(unittest.TestCase):
    """Test cases for the VIB loss and its gradient."""

    def setUp(self):
        self.D = 4
        self.d = 1
        self.zero_nets = create_networks(self.D, self.d, [8], [8], [8])
        self.nets = create_networks(self.D, self.d, [8], [8], [8], stream=RngStream(2, STREAM_INIT))
        stream = RngStream(2, 0)
        self.x = stream.normal((2, self.D))
        self.s = stream.normal((2, self.d))
        self.eta = stream.normal((2, self.D))

    def test_zero_networks_closed_form(self):
        breakdown = vib_loss(self.zero_nets['phi_mask'], self.zero_nets['phi_sig'],
                             np.zeros(self.D), np.zeros(self.d), 10.0, np.zeros(self.D))
        np.testing.assert_array_equal(breakdown.mask.mean, np.zeros(self.D))
        self.assertAlmostEqual(breakdown.kl, closed_form_zero_kl(self.D), places=12)
        self.assertEqual(breakdown.signal_mse, 0.0)

    def test_zero_beta_gives_kl(self):
        breakdown = vib_loss(self.nets['phi_mask'], self.nets['phi_sig'], self.x, self.s, 0.0, self.eta)
        self.assertEqual(breakdown.total, breakdown.kl)

    def test_total_decomposition(self):
        breakdown = vib_loss(self.nets['phi_mask'], self.nets['phi_sig'], self.x, self.s, 7.0, self.eta)
        self.assertAlmostEqual(breakdown.total, breakdown.kl + 3.5 * breakdown.signal_mse, places=12)

    def test_errors(self):
        with self.assertRaises(ValueError):
            vib_loss(self.nets['phi_mask'], self.nets['phi_sig'], self.x, self.s, -1.0, self.eta)
        with self.assertRaises(ValueError):
            vib_loss(self.nets['phi_mask'], self.nets['phi_sig'], self.x, np.zeros((2, 3)), 1.0, self.eta)
        with self.assertRaises(ValueError):
            vib_loss(self.nets['phi_mask'], self.nets['phi_sig'], self.x, self.s, 1.0, self.eta[:, :2])

    def test_gradient(self):
        templates = {'phi_mask': self.nets['phi_mask'].params, 'phi_sig': self.nets['phi_sig'].params}
        stacked = ParamVector.stack(templates)

        def loss(values):
            parts = stacked.replace(values).split(templates)
            breakdown, g_mask, g_sig = vib_loss_grad(self.nets['phi_mask'].with_params(parts['phi_mask']),
                                                     self.nets['phi_sig'].with_params(parts['phi_sig']),
                                                     self.x, self.s, 10.0, self.eta)
            return breakdown.total, np.concatenate([g_mask, g_sig])

        self.assertLess(grad_check(stacked, loss).global_max_rel_err, 1e-5)


if __name__ == '__main__':
    unittest.main()
