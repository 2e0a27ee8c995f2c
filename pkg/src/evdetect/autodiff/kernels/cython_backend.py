"""Adapter giving the compiled kernels the same signatures as numpy_backend."""

from __future__ import annotations

import numpy as np

from . import _convcy


def conv1d_forward(x_pad: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    batch = x_pad.shape[0]
    out_len = (x_pad.shape[2] - weight.shape[2]) // stride + 1
    out = np.empty((batch, weight.shape[0], out_len), dtype=x_pad.dtype)
    _convcy.conv1d_forward(x_pad, weight, bias, stride, out)
    return out


def conv1d_grad_input(
    grad_out: np.ndarray, weight: np.ndarray, stride: int, padded_length: int
) -> np.ndarray:
    grad_pad = np.zeros((grad_out.shape[0], weight.shape[1], padded_length), dtype=grad_out.dtype)
    _convcy.conv1d_grad_input(grad_out, weight, stride, grad_pad)
    return grad_pad


def conv1d_grad_weight(
    grad_out: np.ndarray, x_pad: np.ndarray, stride: int, kernel: int
) -> tuple[np.ndarray, np.ndarray]:
    grad_w = np.zeros((grad_out.shape[1], x_pad.shape[1], kernel), dtype=grad_out.dtype)
    grad_b = np.zeros(grad_out.shape[1], dtype=grad_out.dtype)
    _convcy.conv1d_grad_weight(grad_out, x_pad, stride, grad_w, grad_b)
    return grad_w, grad_b
