"""Adam optimizer, updating parameter arrays in place."""

from typing import List, Sequence

import numpy as np

from ..errors import DivergenceError


class Adam:
    """Adam with bias correction.

    m and v mirror the parameter shapes; epsilon is added outside the square
    root: p -= lr * m_hat / (sqrt(v_hat) + eps).
    """

    def __init__(self, params: Sequence[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params: List[np.ndarray] = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameter list")
        for idx, g in enumerate(grads):
            if not np.all(np.isfinite(g)):
                bad = int(np.sum(~np.isfinite(g)))
                raise DivergenceError(
                    f"non-finite gradient in parameter {idx} "
                    f"(shape {g.shape}, {bad} bad entries) at step {self.step_count + 1}")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)
