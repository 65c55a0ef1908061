#!/usr/bin/env python3
"""
Tests for ancestral sampling
"""

import os
import sys
import unittest
import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from relevance_diffusion.errors import NumericalAbort
from relevance_diffusion.core.networks import DenoiserNet
from relevance_diffusion.core.sampler import (
    ancestral_step, generate, predicted_passthrough_variance, relevance_from_denoiser
)
from relevance_diffusion.core.schedule import Schedule, build_schedule
from relevance_diffusion.core.tensor import RngStream, STREAM_INIT, STREAM_SAMPLE


class TestAncestralStep(unittest.TestCase):
    """Test cases for a single reverse step."""

    def setUp(self):
        self.sched = build_schedule('linear', 10, beta_start=0.01, beta_end=0.2)

    def test_zero_prediction_and_noise(self):
        x_t = np.array([1.0, -2.0])
        out = ancestral_step(x_t, 5, np.zeros(2), self.sched, np.zeros(2))
        np.testing.assert_allclose(out, x_t / np.sqrt(self.sched.alpha(5)), rtol=1e-15)

    def test_last_step_ignores_noise(self):
        x_t = np.array([0.4])
        without = ancestral_step(x_t, 1, np.array([0.2]), self.sched, None)
        with_noise = ancestral_step(x_t, 1, np.array([0.2]), self.sched, np.array([5.0]))
        np.testing.assert_array_equal(without, with_noise)

    def test_hand_evaluated_step(self):
        # Hypothetical table with alpha_t = 0.99 and alpha_bar_t = 0.5 at step 2
        sched = Schedule(T=2, betas=np.array([0.49, 0.01]), alphas=np.array([0.51, 0.99]),
                         alpha_bars=np.array([0.5 / 0.99, 0.5]), sigmas=np.array([0.0, 0.1]))
        out = ancestral_step(np.array([1.0]), 2, np.array([1.0]), sched, np.array([0.0]))
        self.assertAlmostEqual(out[0], (1.0 - 0.01 / np.sqrt(0.5)) / np.sqrt(0.99), places=12)
        self.assertAlmostEqual(out[0], 0.99080, places=4)

    def test_step_range(self):
        with self.assertRaises(ValueError):
            ancestral_step(np.zeros(1), 11, np.zeros(1), self.sched, np.zeros(1))


class TestGenerate(unittest.TestCase):
    """Test cases for the full reverse process."""

    def setUp(self):
        self.zero_net = DenoiserNet(3, [8], 4)

    def test_single_step_rescales_noise(self):
        sched = build_schedule('constant', 1, beta_start=0.1)
        stream = RngStream(5, STREAM_SAMPLE)
        batch = generate(self.zero_net, sched, 4, stream)
        x_T = RngStream(5, STREAM_SAMPLE).derive(0).normal((4, 3))
        np.testing.assert_allclose(batch.w, x_T / np.sqrt(0.9), rtol=1e-15)
        self.assertEqual(batch.w.shape, (4, 3))

    def test_fixed_seed_reproduces(self):
        sched = build_schedule('linear', 20, beta_start=0.01, beta_end=0.2)
        net = self.zero_net.initialized(RngStream(0, STREAM_INIT))
        first = generate(net, sched, 10, RngStream(3, STREAM_SAMPLE))
        second = generate(net, sched, 10, RngStream(3, STREAM_SAMPLE))
        np.testing.assert_array_equal(first.w, second.w)
        third = generate(net, sched, 10, RngStream(4, STREAM_SAMPLE))
        self.assertFalse(np.array_equal(first.w, third.w))

    def test_sidecar(self):
        sched = build_schedule('linear', 50)
        batch = generate(self.zero_net, sched, 2, RngStream(9, STREAM_SAMPLE), mode='ddpm-baseline')
        self.assertEqual(batch.sidecar(), {"seed": 9, "T": 50, "mode": "ddpm-baseline", "n": 2, "D": 3})

    def test_non_finite_names_step(self):
        net = self.zero_net
        blocks = {name: np.zeros(shape) for name, shape in net.params.layout}
        blocks["layer1.bias"] = np.full(3, 1e307)
        net = net.with_params(net.params.replace(net.params.flatten(blocks)))
        sched = build_schedule('linear', 50)
        with self.assertRaises(NumericalAbort) as ctx:
            generate(net, sched, 2, RngStream(0, STREAM_SAMPLE))
        self.assertIn("step", ctx.exception.diagnostics)

    def test_n_must_be_positive(self):
        with self.assertRaises(ValueError):
            generate(self.zero_net, build_schedule('linear', 50), 0, RngStream(0, STREAM_SAMPLE))

    def test_zero_net_matches_predicted_variance(self):
        sched = build_schedule('linear', 50)
        n = 4000
        w = generate(self.zero_net, sched, n, RngStream(1, STREAM_SAMPLE)).w
        v = predicted_passthrough_variance(sched)
        se = v * np.sqrt(2.0 / (n - 1))
        self.assertTrue(np.all(np.abs(np.var(w, axis=0, ddof=1) - v) < 4 * se))
        self.assertTrue(np.all(np.abs(np.mean(w, axis=0)) < 4 * np.sqrt(v / n)))


class TestPassthroughVariance(unittest.TestCase):
    """Test cases for the analytic pass-through variance."""

    def test_single_step(self):
        sched = build_schedule('constant', 1, beta_start=0.1)
        self.assertAlmostEqual(predicted_passthrough_variance(sched), 1.0 / 0.9)

    def test_two_steps(self):
        sched = build_schedule('constant', 2, beta_start=0.5)
        expected = (1.0 / 0.5 + sched.sigma(2) ** 2) / 0.5
        self.assertAlmostEqual(predicted_passthrough_variance(sched), expected)

    def test_exceeds_one(self):
        self.assertGreater(predicted_passthrough_variance(build_schedule('linear', 200)), 1.0)


class TestDenoiserRelevance(unittest.TestCase):
    """Test cases for relevance_from_denoiser."""

    def test_zero_net_scores_zero(self):
        net = DenoiserNet(3, [8], 4)
        scores = relevance_from_denoiser(net, build_schedule('linear', 50), 100, RngStream(0, 0))
        np.testing.assert_array_equal(scores, np.zeros(3))

    def test_scores_are_non_negative(self):
        net = DenoiserNet(3, [8], 4).initialized(RngStream(2, STREAM_INIT))
        x0 = RngStream(2, 0).normal((20, 3))
        scores = relevance_from_denoiser(net, build_schedule('linear', 50), 100, RngStream(0, 0), x0=x0)
        self.assertEqual(scores.shape, (3,))
        self.assertTrue(np.all(scores >= 0))
        with self.assertRaises(ValueError):
            relevance_from_denoiser(net, build_schedule('linear', 50), 0, RngStream(0, 0))


if __name__ == '__main__':
    unittest.main()
