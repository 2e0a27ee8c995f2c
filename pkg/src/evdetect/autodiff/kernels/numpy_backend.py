"""Pure-numpy convolution kernels (im2col views + BLAS matmul)."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows(x_pad: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    # [B, Ci, Lo, K] strided view of the padded input
    return sliding_window_view(x_pad, kernel, axis=2)[:, :, ::stride, :]


def conv1d_forward(x_pad: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    windows = _windows(x_pad, weight.shape[2], stride)
    out = np.tensordot(windows, weight, axes=([1, 3], [1, 2]))  # [B, Lo, Co]
    out += bias
    return np.ascontiguousarray(out.transpose(0, 2, 1))


def conv1d_grad_input(
    grad_out: np.ndarray, weight: np.ndarray, stride: int, padded_length: int
) -> np.ndarray:
    batch, _, out_len = grad_out.shape
    in_channels, kernel = weight.shape[1], weight.shape[2]
    grad_pad = np.zeros((batch, in_channels, padded_length), dtype=grad_out.dtype)
    for k in range(kernel):
        contrib = np.tensordot(grad_out, weight[:, :, k], axes=([1], [0]))  # [B, Lo, Ci]
        grad_pad[:, :, k : k + out_len * stride : stride] += contrib.transpose(0, 2, 1)
    return grad_pad


def conv1d_grad_weight(
    grad_out: np.ndarray, x_pad: np.ndarray, stride: int, kernel: int
) -> tuple[np.ndarray, np.ndarray]:
    windows = _windows(x_pad, kernel, stride)
    grad_w = np.tensordot(grad_out, windows, axes=([0, 2], [0, 2]))  # [Co, Ci, K]
    grad_b = grad_out.sum(axis=(0, 2))
    return grad_w, grad_b
