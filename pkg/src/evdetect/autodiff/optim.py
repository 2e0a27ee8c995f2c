"""Adam optimizer with bias correction."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def adam_step(
    values: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float = 1e-3,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> None:
    """One in-place Adam update; `step` is the 1-based update count."""
    if grad.shape != values.shape or m.shape != values.shape or v.shape != values.shape:
        raise ValueError(
            f"shape mismatch: values {values.shape}, grad {grad.shape}, m {m.shape}, v {v.shape}"
        )
    beta1, beta2 = betas
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**step)
    v_hat = v / (1.0 - beta2**step)
    values -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Keeps per-parameter first/second moment state across steps."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self.state = {
            name: (np.zeros_like(p.values), np.zeros_like(p.values)) for name, p in params.items()
        }

    def step(self) -> None:
        self.step_count += 1
        for name, param in self.params.items():
            if param.grad is None:
                continue
            m, v = self.state[name]
            adam_step(
                param.values, param.grad, m, v, self.step_count,
                lr=self.lr, betas=self.betas, eps=self.eps,
            )

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()
