#!/usr/bin/env python3
"""
Function approximators: noise predictor, mask encoder and signal decoder

All three are tanh MLPs over flat ParamVectors with hand-written
reverse-mode gradients.
"""

from abc import ABC, abstractmethod

import numpy as np

from relevance_diffusion.core.tensor import ParamVector, init_params


class TimeEmbedding:
    """Sinusoidal embedding [sin(w_j t), cos(w_j t)] with w_j = 10000^(-2j/width)"""

    def __init__(self, width=16):
        if width < 2 or width % 2:
            raise ValueError(f"Time embedding width must be a positive even number, got {width}")
        self.width = int(width)
        j = np.arange(self.width // 2)
        self.frequencies = 10000.0 ** (-2.0 * j / self.width)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        angles = t[..., None] * self.frequencies
        return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)


class MLP:
    """Layer sizes, layout and forward/backward passes of a tanh MLP with identity output"""

    def __init__(self, in_dim, hidden, out_dim):
        self.sizes = [int(in_dim)] + [int(h) for h in hidden] + [int(out_dim)]
        if min(self.sizes) < 1:
            raise ValueError(f"Layer sizes must be positive, got {self.sizes}")

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    @property
    def layout(self):
        layout = []
        for i in range(self.n_layers):
            layout.append((f"layer{i}.weight", (self.sizes[i], self.sizes[i + 1])))
            layout.append((f"layer{i}.bias", (self.sizes[i + 1],)))
        return layout

    def forward(self, params, inputs):
        """
        Evaluate the network on a batch

        Args:
            params: ParamVector with this MLP's layout
            inputs: Array of shape (B, in_dim)

        Returns:
            outputs: Array of shape (B, out_dim)
            cache: Layer inputs needed by `backward`
        """
        activation = inputs
        cache = [inputs]
        for i in range(self.n_layers):
            z = activation @ params.block(f"layer{i}.weight") + params.block(f"layer{i}.bias")
            if i < self.n_layers - 1:
                activation = np.tanh(z)
                cache.append(activation)
            else:
                activation = z
        return activation, cache

    def backward(self, params, cache, grad_outputs):
        """
        Backpropagate d(loss)/d(outputs)

        Returns:
            grad_params: Flat gradient array in layout order
            grad_inputs: d(loss)/d(inputs), shape (B, in_dim)
        """
        grads = {}
        delta = grad_outputs
        for i in reversed(range(self.n_layers)):
            layer_input = cache[i]
            weight = params.block(f"layer{i}.weight")
            # Affine layer: z = input @ W + b
            grads[f"layer{i}.weight"] = layer_input.T @ delta
            grads[f"layer{i}.bias"] = delta.sum(axis=0)
            # Back to this layer's input
            delta = delta @ weight.T
            if i > 0:
                # layer_input is the tanh output of the previous layer
                delta = delta * (1.0 - layer_input ** 2)
        return params.flatten(grads), delta


class FeedForwardNet(ABC):
    """Base class binding an MLP architecture to its parameters"""

    kind = None

    def __init__(self, mlp, params=None):
        self.mlp = mlp
        if params is None:
            params = ParamVector(np.zeros(sum(int(np.prod(s)) for _, s in mlp.layout)), mlp.layout)
        if params.layout != tuple((n, tuple(s)) for n, s in mlp.layout):
            raise ValueError(f"{self.__class__.__name__}: parameter layout does not match architecture")
        self.params = params

    @abstractmethod
    def arch(self):
        """Return the constructor keyword arguments describing this architecture"""
        pass

    @property
    def name(self):
        return self.__class__.__name__

    def with_params(self, params):
        """Same architecture, different parameters"""
        return self.__class__(params=params, **self.arch())

    def initialized(self, stream):
        """Same architecture with Glorot-uniform weights drawn from `stream`"""
        return self.with_params(init_params(stream, self.mlp.layout))

    def _check_features(self, x, width, label):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (1, 2) or x.shape[-1] != width:
            raise ValueError(f"{self.name}: {label} must have trailing dimension {width}, got shape {x.shape}")
        return x

    def _run(self, inputs, single):
        outputs, _ = self.mlp.forward(self.params, inputs)
        return outputs[0] if single else outputs


class DenoiserNet(FeedForwardNet):
    """Noise predictor eps_theta(x_t, t) on concat(x_t, time embedding)"""

    kind = 'denoiser'

    def __init__(self, D, hidden=(64, 64), time_embed=16, params=None):
        self.D = int(D)
        self.hidden = [int(h) for h in hidden]
        self.embedding = TimeEmbedding(time_embed)
        super().__init__(MLP(self.D + self.embedding.width, self.hidden, self.D), params)

    def arch(self):
        return {"D": self.D, "hidden": list(self.hidden), "time_embed": self.embedding.width}

    def network_input(self, x_t, t):
        x_t = self._check_features(x_t, self.D, "x_t")
        single = x_t.ndim == 1
        x_t = np.atleast_2d(x_t)
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (x_t.shape[0],))
        return np.concatenate([x_t, self.embedding(t)], axis=1), single

    def forward(self, x_t, t):
        inputs, _ = self.network_input(x_t, t)
        return self.mlp.forward(self.params, inputs)

    def backward(self, cache, grad_outputs):
        grad_params, _ = self.mlp.backward(self.params, cache, grad_outputs)
        return grad_params

    def evaluate(self, x_t, t):
        inputs, single = self.network_input(x_t, t)
        return self._run(inputs, single)


class MaskEncoderNet(FeedForwardNet):
    """Shared-trunk encoder returning (raw mask mean, mask logit), each D wide"""

    kind = 'mask_encoder'

    def __init__(self, D, hidden=(64, 64), params=None):
        self.D = int(D)
        self.hidden = [int(h) for h in hidden]
        super().__init__(MLP(self.D, self.hidden, 2 * self.D), params)

    def arch(self):
        return {"D": self.D, "hidden": list(self.hidden)}

    def forward(self, x):
        x = np.atleast_2d(self._check_features(x, self.D, "x"))
        return self.mlp.forward(self.params, x)

    def backward(self, cache, grad_mu_raw, grad_xi):
        grad_params, _ = self.mlp.backward(self.params, cache, np.concatenate([grad_mu_raw, grad_xi], axis=1))
        return grad_params

    def evaluate(self, x):
        x = self._check_features(x, self.D, "x")
        out = self._run(np.atleast_2d(x), x.ndim == 1)
        return out[..., :self.D], out[..., self.D:]


class SignalDecoderNet(FeedForwardNet):
    """Decoder mean mu_S(x_s) of the unit-variance Gaussian q(S | X_S)"""

    kind = 'signal_decoder'

    def __init__(self, D, d, hidden=(64, 64), params=None):
        self.D = int(D)
        self.d = int(d)
        self.hidden = [int(h) for h in hidden]
        super().__init__(MLP(self.D, self.hidden, self.d), params)

    def arch(self):
        return {"D": self.D, "d": self.d, "hidden": list(self.hidden)}

    def forward(self, x_s):
        x_s = np.atleast_2d(self._check_features(x_s, self.D, "x_s"))
        return self.mlp.forward(self.params, x_s)

    def backward(self, cache, grad_outputs):
        return self.mlp.backward(self.params, cache, grad_outputs)

    def evaluate(self, x_s):
        x_s = self._check_features(x_s, self.D, "x_s")
        return self._run(np.atleast_2d(x_s), x_s.ndim == 1)


def get_available_networks():
    """Return a dictionary of network kinds"""
    return {
        'denoiser': DenoiserNet,
        'mask_encoder': MaskEncoderNet,
        'signal_decoder': SignalDecoderNet,
    }


def create_networks(D, d, denoiser_hidden=(64, 64), mask_hidden=(64, 64), signal_hidden=(64, 64),
                    time_embed=16, stream=None):
    """
    Build the three networks, Glorot-initialized from `stream` (all-zero if None)

    Returns:
        dict with keys 'theta', 'phi_mask', 'phi_sig'
    """
    nets = {
        'theta': DenoiserNet(D, denoiser_hidden, time_embed),
        'phi_mask': MaskEncoderNet(D, mask_hidden),
        'phi_sig': SignalDecoderNet(D, d, signal_hidden),
    }
    if stream is not None:
        nets = {key: net.initialized(stream.derive(i)) for i, (key, net) in enumerate(nets.items())}
    return nets


def denoiser_eval(net, x_t, t):
    """Predicted noise for x_t at step t"""
    return net.evaluate(x_t, t)


def mask_encoder_eval(net, x):
    """Raw mask mean and mask logit for x (no clamping)"""
    return net.evaluate(x)


def signal_decoder_eval(net, x_s):
    """Signal mean predicted from the bottleneck sample x_s"""
    return net.evaluate(x_s)
