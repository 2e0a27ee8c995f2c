"""Shared test helpers: finite-difference gradient checking."""

from __future__ import annotations

import numpy as np
import pytest

from evdetect.autodiff.tensor import Tensor


def numeric_gradient(fn, tensor: Tensor, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar-valued fn wrt tensor.values."""
    flat = tensor.values.ravel()
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        original = flat[i]
        h = step * max(abs(original), 1.0)
        flat[i] = original + h
        plus = fn().item()
        flat[i] = original - h
        minus = fn().item()
        flat[i] = original
        grad[i] = (plus - minus) / (2.0 * h)
    return grad.reshape(tensor.values.shape)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((np.abs(analytic - numeric) / scale).max())


def check_gradients(fn, tensors: list[Tensor], rtol: float = 1e-3, step: float = 1e-5) -> float:
    """Compare fn's backward against central differences for each tensor."""
    for t in tensors:
        t.zero_grad()
    loss = fn()
    loss.backward()
    worst = 0.0
    for t in tensors:
        assert t.grad is not None, "no gradient reached a requires_grad leaf"
        numeric = numeric_gradient(fn, t, step=step)
        worst = max(worst, max_relative_error(t.grad, numeric))
    assert worst < rtol, f"gradient mismatch: max relative error {worst} >= {rtol}"
    return worst


def scalar_from(tensor: Tensor, weights: np.ndarray | None = None) -> Tensor:
    """Deterministic scalar readout of a tensor, differentiable for tests."""
    w = np.ones_like(tensor.values) if weights is None else weights
    value = float((tensor.values * w).sum())
    result = Tensor(np.asarray(value), parents=(tensor,))
    result.backward_fn = lambda g: tensor.accumulate_grad(w * g)
    return result


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
