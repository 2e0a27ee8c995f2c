"""Differentiable ops over Tensors: conv1d, activations, batchnorm, plumbing.

All ops use "same" zero padding and preserve the input dtype. Gradients are
recorded only while gradients are enabled and some input requires them.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .tensor import Tensor

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def _tracing(*tensors: Tensor) -> bool:
    return _grad_enabled and any(t.requires_grad for t in tensors)


def same_pad_amounts(length: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """(out_len, pad_left, pad_right) for "same" conv: out_len = ceil(L / stride)."""
    out_len = -(-length // stride)
    total = max((out_len - 1) * stride + kernel - length, 0)
    left = total // 2
    return out_len, left, total - left


def conv1d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, groups: int = 1) -> Tensor:
    """Cross-correlation with zero "same" padding; output length ceil(L/stride).

    groups > 1 splits in/out channels into independent groups (groups equal to
    the channel count gives a depthwise convolution).
    """
    xv, wv, bv = x.values, weight.values, bias.values
    if xv.ndim != 3 or wv.ndim != 3:
        raise ValueError(f"conv1d expects [B,Ci,L] and [Co,Ci/groups,K], got {xv.shape} and {wv.shape}")
    in_channels, out_channels = xv.shape[1], wv.shape[0]
    if groups < 1 or in_channels % groups or out_channels % groups:
        raise ValueError(f"groups={groups} must divide {in_channels} in and {out_channels} out channels")
    if wv.shape[1] != in_channels // groups:
        raise ValueError(f"channel mismatch: input has {in_channels}, weight expects {wv.shape[1] * groups}")
    if bv.shape != (out_channels,):
        raise ValueError(f"bias shape {bv.shape} does not match {out_channels} output channels")
    if xv.dtype != wv.dtype or xv.dtype != bv.dtype:
        raise ValueError("conv1d inputs must share a dtype")
    if stride < 1:
        raise ValueError("stride must be >= 1")

    batch, _, length = xv.shape
    kernel = wv.shape[2]
    _, pad_left, pad_right = same_pad_amounts(length, kernel, stride)
    x_pad = np.ascontiguousarray(np.pad(xv, ((0, 0), (0, 0), (pad_left, pad_right))))
    wv = np.ascontiguousarray(wv)
    bv = np.ascontiguousarray(bv)

    ci_g = in_channels // groups
    co_g = out_channels // groups
    if groups == 1:
        out = kernels.conv1d_forward(x_pad, wv, bv, stride)
    else:
        out_len = (x_pad.shape[2] - kernel) // stride + 1
        out = np.empty((batch, out_channels, out_len), dtype=xv.dtype)
        for g_idx in range(groups):
            xi = np.ascontiguousarray(x_pad[:, g_idx * ci_g : (g_idx + 1) * ci_g])
            out[:, g_idx * co_g : (g_idx + 1) * co_g] = kernels.conv1d_forward(
                xi, wv[g_idx * co_g : (g_idx + 1) * co_g], bv[g_idx * co_g : (g_idx + 1) * co_g], stride
            )

    if not _tracing(x, weight, bias):
        return Tensor(out)

    result = Tensor(out, parents=(x, weight, bias))

    def backward_fn(g: np.ndarray) -> None:
        g = np.ascontiguousarray(g, dtype=out.dtype)
        padded_len = x_pad.shape[2]
        need_input = x.requires_grad
        need_weight = weight.requires_grad or bias.requires_grad
        grad_pad = np.zeros_like(x_pad) if need_input else None
        grad_w_full = np.zeros_like(wv) if need_weight else None
        grad_b_full = np.zeros_like(bv) if need_weight else None
        for g_idx in range(groups):
            co_sl = slice(g_idx * co_g, (g_idx + 1) * co_g)
            ci_sl = slice(g_idx * ci_g, (g_idx + 1) * ci_g)
            g_slice = np.ascontiguousarray(g[:, co_sl]) if groups > 1 else g
            if need_weight:
                xi = np.ascontiguousarray(x_pad[:, ci_sl]) if groups > 1 else x_pad
                grad_w, grad_b = kernels.conv1d_grad_weight(g_slice, xi, stride, kernel)
                grad_w_full[co_sl] = grad_w
                grad_b_full[co_sl] = grad_b
            if need_input:
                grad_pad[:, ci_sl] += kernels.conv1d_grad_input(g_slice, wv[co_sl], stride, padded_len)
        if need_weight:
            weight.accumulate_grad(grad_w_full)
            bias.accumulate_grad(grad_b_full)
        if need_input:
            x.accumulate_grad(grad_pad[:, :, pad_left : pad_left + length])

    result.backward_fn = backward_fn
    return result


def elu(x: Tensor) -> Tensor:
    xv = x.values
    expx = np.exp(np.minimum(xv, 0.0))
    out = np.where(xv > 0, xv, expx - 1.0)
    if not _tracing(x):
        return Tensor(out)
    result = Tensor(out, parents=(x,))
    result.backward_fn = lambda g: x.accumulate_grad(g * np.where(xv > 0, 1.0, expx))
    return result


def sigmoid_values(x: np.ndarray) -> np.ndarray:
    """Overflow-free logistic function on raw arrays."""
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x: Tensor) -> Tensor:
    s = sigmoid_values(x.values)
    if not _tracing(x):
        return Tensor(s)
    result = Tensor(s, parents=(x,))
    result.backward_fn = lambda g: x.accumulate_grad(g * s * (1.0 - s))
    return result


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    out = a.values + b.values
    if not _tracing(a, b):
        return Tensor(out)
    result = Tensor(out, parents=(a, b))

    def backward_fn(g: np.ndarray) -> None:
        a.accumulate_grad(g)
        b.accumulate_grad(g)

    result.backward_fn = backward_fn
    return result


def scale(x: Tensor, factor: float) -> Tensor:
    out = x.values * factor
    if not _tracing(x):
        return Tensor(out)
    result = Tensor(out, parents=(x,))
    result.backward_fn = lambda g: x.accumulate_grad(g * factor)
    return result


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(f"cannot concatenate channels of {a.shape} and {b.shape}")
    out = np.concatenate([a.values, b.values], axis=1)
    if not _tracing(a, b):
        return Tensor(out)
    result = Tensor(out, parents=(a, b))
    split = a.shape[1]

    def backward_fn(g: np.ndarray) -> None:
        a.accumulate_grad(g[:, :split, :])
        b.accumulate_grad(g[:, split:, :])

    result.backward_fn = backward_fn
    return result


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Repeat every time sample `factor` times."""
    if factor < 1:
        raise ValueError("upsample factor must be >= 1")
    out = np.repeat(x.values, factor, axis=2)
    if not _tracing(x):
        return Tensor(out)
    result = Tensor(out, parents=(x,))
    batch, ch, length = x.shape
    result.backward_fn = lambda g: x.accumulate_grad(g.reshape(batch, ch, length, factor).sum(axis=3))
    return result


def squeeze_channel(x: Tensor) -> Tensor:
    """[B, 1, L] -> [B, L]."""
    if x.ndim != 3 or x.shape[1] != 1:
        raise ValueError(f"expected [B, 1, L], got {x.shape}")
    out = x.values[:, 0, :]
    if not _tracing(x):
        return Tensor(out)
    result = Tensor(out, parents=(x,))
    result.backward_fn = lambda g: x.accumulate_grad(g[:, np.newaxis, :])
    return result


@dataclass
class BatchNormState:
    """Running statistics buffer, updated in training mode (momentum 0.1)."""

    running_mean: np.ndarray
    running_var: np.ndarray

    @classmethod
    def create(cls, channels: int, dtype=np.float64) -> "BatchNormState":
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype))


def batchnorm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState,
    train: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    xv = x.values
    if xv.ndim != 3:
        raise ValueError(f"batchnorm1d expects [B, C, L], got {xv.shape}")
    channels = xv.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ValueError("gamma/beta must have one entry per channel")

    if train:
        mean = xv.mean(axis=(0, 2))
        var = xv.var(axis=(0, 2))
        state.running_mean *= 1.0 - momentum
        state.running_mean += momentum * mean
        state.running_var *= 1.0 - momentum
        state.running_var += momentum * var
    else:
        mean = state.running_mean.astype(xv.dtype)
        var = state.running_var.astype(xv.dtype)

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xv - mean[np.newaxis, :, np.newaxis]) * inv_std[np.newaxis, :, np.newaxis]
    out = gamma.values[np.newaxis, :, np.newaxis] * xhat + beta.values[np.newaxis, :, np.newaxis]

    if not _tracing(x, gamma, beta):
        return Tensor(out)
    result = Tensor(out, parents=(x, gamma, beta))
    count = xv.shape[0] * xv.shape[2]

    def backward_fn(g: np.ndarray) -> None:
        gamma.accumulate_grad((g * xhat).sum(axis=(0, 2)))
        beta.accumulate_grad(g.sum(axis=(0, 2)))
        if not x.requires_grad:
            return
        dxhat = g * gamma.values[np.newaxis, :, np.newaxis]
        if train:
            sum_dxhat = dxhat.sum(axis=(0, 2), keepdims=True)
            sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
            dx = (inv_std[np.newaxis, :, np.newaxis] / count) * (
                count * dxhat - sum_dxhat - xhat * sum_dxhat_xhat
            )
        else:
            dx = dxhat * inv_std[np.newaxis, :, np.newaxis]
        x.accumulate_grad(dx)

    result.backward_fn = backward_fn
    return result


def dropout(x: Tensor, rate: float, rng: np.random.Generator, train: bool) -> Tensor:
    if not train or rate <= 0.0:
        return x
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    mask = (rng.uniform(size=x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    out = x.values * mask
    if not _tracing(x):
        return Tensor(out)
    result = Tensor(out, parents=(x,))
    result.backward_fn = lambda g: x.accumulate_grad(g * mask)
    return result
