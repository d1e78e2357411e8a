"""Bias-corrected Adam shared by the contrastive trainer and the classifier head."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@dataclass
class OptimizerState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


@numba.njit(cache=True)
def _adam_kernel(p, g, m, v, beta1, beta2, step_size, inv_sqrt_bc2, eps):
    # one fused pass; p, g, m, v are contiguous and the same size
    for i in range(p.size):
        gi = g[i]
        mi = beta1 * m[i] + (1.0 - beta1) * gi
        vi = beta2 * v[i] + (1.0 - beta2) * (gi * gi)
        m[i] = mi
        v[i] = vi
        p[i] -= step_size * mi / (np.sqrt(vi) * inv_sqrt_bc2 + eps)


class Adam:
    """Adam over a fixed list of float64 arrays, updated in place.

    m(t) = b1 m + (1 - b1) g
    v(t) = b2 v + (1 - b2) g^2
    p   -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        for p in self.params:
            if p.dtype != np.float64 or not p.flags.c_contiguous:
                raise TypeError("Adam parameters must be C-contiguous float64 arrays")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.states = [OptimizerState(np.zeros_like(p), np.zeros_like(p)) for p in self.params]

    @property
    def t(self):
        return self.states[0].t if self.states else 0

    def step(self, grads):
        for p, g, st in zip(self.params, grads, self.states):
            st.t += 1
            g = np.ascontiguousarray(g, dtype=np.float64)
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            _adam_kernel(
                p.reshape(-1), g.reshape(-1), st.m.reshape(-1), st.v.reshape(-1),
                self.beta1, self.beta2,
                self.lr / (1.0 - self.beta1 ** st.t),
                1.0 / np.sqrt(1.0 - self.beta2 ** st.t),
                self.eps,
            )
