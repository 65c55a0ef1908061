#!/usr/bin/env python3
"""
Tests for the denoiser, mask encoder and signal decoder networks
"""

import os
import sys
import unittest
import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from relevance_diffusion.core.networks import (
    TimeEmbedding, MLP, DenoiserNet, MaskEncoderNet, SignalDecoderNet,
    create_networks, get_available_networks, denoiser_eval, mask_encoder_eval, signal_decoder_eval
)
from relevance_diffusion.core.tensor import ParamVector, RngStream, grad_check, init_params, STREAM_INIT


class TestTimeEmbedding(unittest.TestCase):
    """Test cases for the sinusoidal step embedding."""

    def test_shape_and_values(self):
        embed = TimeEmbedding(4)
        out = embed(np.array([0.0, 3.0]))
        self.assertEqual(out.shape, (2, 4))
        np.testing.assert_allclose(out[0], [0.0, 0.0, 1.0, 1.0])
        np.testing.assert_allclose(out[1], [np.sin(3.0), np.sin(0.03), np.cos(3.0), np.cos(0.03)])

    def test_width_must_be_even(self):
        with self.assertRaises(ValueError):
            TimeEmbedding(3)
        with self.assertRaises(ValueError):
            TimeEmbedding(0)


class TestMLP(unittest.TestCase):
    """Test cases for the MLP building block."""

    def test_layout(self):
        mlp = MLP(3, [5, 4], 2)
        self.assertEqual(mlp.layout, [
            ("layer0.weight", (3, 5)), ("layer0.bias", (5,)),
            ("layer1.weight", (5, 4)), ("layer1.bias", (4,)),
            ("layer2.weight", (4, 2)), ("layer2.bias", (2,)),
        ])

    def test_backward_input_gradient(self):
        mlp = MLP(3, [4], 2)
        stream = RngStream(1, STREAM_INIT)
        params = init_params(stream, mlp.layout)
        inputs = stream.normal((5, 3))

        out, cache = mlp.forward(params, inputs)
        _, grad_inputs = mlp.backward(params, cache, 2.0 * out)

        h = 1e-6
        numeric = np.zeros_like(inputs)
        for i in range(inputs.shape[0]):
            for j in range(inputs.shape[1]):
                plus, minus = inputs.copy(), inputs.copy()
                plus[i, j] += h
                minus[i, j] -= h
                f_plus = np.sum(mlp.forward(params, plus)[0] ** 2)
                f_minus = np.sum(mlp.forward(params, minus)[0] ** 2)
                numeric[i, j] = (f_plus - f_minus) / (2 * h)
        np.testing.assert_allclose(grad_inputs, numeric, rtol=1e-6, atol=1e-8)


class TestNetworks(unittest.TestCase):
    """Test cases for the three task networks."""

    def setUp(self):
        self.D = 4
        self.d = 2
        self.nets = create_networks(self.D, self.d, [8], [8], [8], time_embed=4)
        self.x = RngStream(0, 0).normal((3, self.D))

    def test_zero_params_give_zero_outputs(self):
        np.testing.assert_array_equal(denoiser_eval(self.nets['theta'], self.x, 5), np.zeros((3, self.D)))
        mu_raw, xi = mask_encoder_eval(self.nets['phi_mask'], self.x[0])
        np.testing.assert_array_equal(mu_raw, np.zeros(self.D))
        np.testing.assert_array_equal(xi, np.zeros(self.D))
        np.testing.assert_array_equal(signal_decoder_eval(self.nets['phi_sig'], self.x[0]), np.zeros(self.d))

    def test_single_and_batched_inputs(self):
        nets = create_networks(self.D, self.d, [8], [8], [8], time_embed=4, stream=RngStream(0, STREAM_INIT))
        theta = nets['theta']
        batched = theta.evaluate(self.x, np.array([1, 2, 3]))
        single = theta.evaluate(self.x[1], 2)
        self.assertEqual(single.shape, (self.D,))
        np.testing.assert_allclose(single, batched[1], rtol=1e-12)

    def test_outputs_are_deterministic(self):
        nets = create_networks(self.D, self.d, stream=RngStream(9, STREAM_INIT))
        first = nets['phi_sig'].evaluate(self.x)
        second = nets['phi_sig'].evaluate(self.x)
        np.testing.assert_array_equal(first, second)

    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            self.nets['theta'].evaluate(np.zeros(self.D + 1), 1)
        with self.assertRaises(ValueError):
            self.nets['phi_mask'].evaluate(np.zeros((2, self.D - 1)))
        with self.assertRaises(ValueError):
            self.nets['phi_sig'].evaluate(np.zeros((2, 2, self.D)))

    def test_layout_mismatch(self):
        other = MaskEncoderNet(self.D, [6])
        with self.assertRaises(ValueError):
            self.nets['phi_mask'].with_params(other.params)

    def test_initialization_uses_separate_streams(self):
        nets = create_networks(self.D, self.d, [8], [8], [8], time_embed=4, stream=RngStream(0, STREAM_INIT))
        again = create_networks(self.D, self.d, [8], [8], [8], time_embed=4, stream=RngStream(0, STREAM_INIT))
        for key in nets:
            self.assertEqual(nets[key].params, again[key].params)
            self.assertTrue(np.any(nets[key].params.values != 0))
        self.assertIsInstance(nets['theta'], DenoiserNet)
        self.assertIsInstance(nets['phi_mask'], MaskEncoderNet)
        self.assertIsInstance(nets['phi_sig'], SignalDecoderNet)

    def test_registry(self):
        available = get_available_networks()
        self.assertEqual(set(available), {'denoiser', 'mask_encoder', 'signal_decoder'})
        for kind, cls in available.items():
            self.assertEqual(cls.kind, kind)

    def test_arch_round_trip(self):
        nets = create_networks(self.D, self.d, [8, 5], [7], [6], time_embed=4, stream=RngStream(0, STREAM_INIT))
        for net in nets.values():
            rebuilt = net.__class__(params=net.params, **net.arch())
            np.testing.assert_array_equal(rebuilt.params.values, net.params.values)

    def _check(self, net, loss_of_outputs):
        def loss(values):
            current = net.with_params(ParamVector(values, net.params.layout))
            value, grad = loss_of_outputs(current)
            return value, grad
        return grad_check(net.params, loss, h=1e-5)

    def test_denoiser_gradient(self):
        theta = create_networks(self.D, self.d, [8], [8], [8], time_embed=4,
                                stream=RngStream(3, STREAM_INIT))['theta']
        t = np.array([1, 4, 9])

        def loss(net):
            out, cache = net.forward(self.x, t)
            return float(np.sum(out ** 2)), net.backward(cache, 2.0 * out)

        self.assertLess(self._check(theta, loss).global_max_rel_err, 1e-5)

    def test_signal_decoder_gradient(self):
        sig = create_networks(self.D, self.d, [8], [8], [8], stream=RngStream(4, STREAM_INIT))['phi_sig']
        target = RngStream(4, 1).normal((3, self.d))

        def loss(net):
            out, cache = net.forward(self.x)
            grad, _ = net.backward(cache, 2.0 * (out - target))
            return float(np.sum((out - target) ** 2)), grad

        self.assertLess(self._check(sig, loss).global_max_rel_err, 1e-5)

    def test_mask_encoder_gradient(self):
        mask = create_networks(self.D, self.d, [8], [8], [8], stream=RngStream(5, STREAM_INIT))['phi_mask']

        def loss(net):
            out, cache = net.forward(self.x)
            mu_raw, xi = out[:, :self.D], out[:, self.D:]
            value = float(np.sum(mu_raw ** 2) + np.sum(np.sin(xi)))
            return value, net.backward(cache, 2.0 * mu_raw, np.cos(xi))

        self.assertLess(self._check(mask, loss).global_max_rel_err, 1e-5)


if __name__ == '__main__':
    unittest.main()
