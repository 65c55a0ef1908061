#!/usr/bin/env python3
"""
Adam over named ParamVectors
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerState:
    """First/second moment accumulators per parameter group, plus the update counter"""
    step: int = 0
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params):
        """Fresh state for a {group: ParamVector} mapping"""
        return cls(
            step=0,
            first={key: np.zeros(p.size) for key, p in params.items()},
            second={key: np.zeros(p.size) for key, p in params.items()},
        )

    def to_dict(self):
        return {
            "step": int(self.step),
            "first": {key: [float(v) for v in arr] for key, arr in self.first.items()},
            "second": {key: [float(v) for v in arr] for key, arr in self.second.items()},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            step=int(data["step"]),
            first={key: np.asarray(v, dtype=np.float64) for key, v in data["first"].items()},
            second={key: np.asarray(v, dtype=np.float64) for key, v in data["second"].items()},
        )


class Adam:
    """Adam with bias correction; no weight decay, no schedule"""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def update(self, params, grads, state):
        """
        Apply one update to the groups present in `grads`

        Args:
            params: {group: ParamVector}
            grads: {group: flat gradient array}; groups without a gradient are left alone
            state: OptimizerState

        Returns:
            (new values per updated group, new OptimizerState)
        """
        step = state.step + 1
        first = dict(state.first)
        second = dict(state.second)
        new_values = {}
        for key, grad in grads.items():
            if first[key].shape != grad.shape:
                raise ValueError(f"Gradient for '{key}' has shape {grad.shape}, expected {first[key].shape}")
            m = self.beta1 * first[key] + (1.0 - self.beta1) * grad
            v = self.beta2 * second[key] + (1.0 - self.beta2) * grad ** 2
            m_hat = m / (1.0 - self.beta1 ** step)
            v_hat = v / (1.0 - self.beta2 ** step)
            new_values[key] = params[key].values - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            first[key] = m
            second[key] = v
        return new_values, OptimizerState(step=step, first=first, second=second)
