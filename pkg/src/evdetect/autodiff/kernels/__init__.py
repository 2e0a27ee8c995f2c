"""Convolution kernel backends, selected at import time.

The compiled Cython kernels are preferred when the extension built; the
pure-numpy fallback is always available. Override with EVDETECT_BACKEND
({"cython", "numpy"}) or set_backend().
"""

from __future__ import annotations

import os
import warnings

from . import numpy_backend

_BACKENDS = {"numpy": numpy_backend}

try:
    from . import cython_backend

    _BACKENDS["cython"] = cython_backend
except ImportError:
    cython_backend = None

_active = "cython" if "cython" in _BACKENDS else "numpy"

_requested = os.environ.get("EVDETECT_BACKEND", "").strip().lower()
if _requested:
    if _requested in _BACKENDS:
        _active = _requested
    else:
        warnings.warn(
            f"EVDETECT_BACKEND={_requested!r} unavailable, using {_active!r}", stacklevel=1
        )


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def backend_name() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


def conv1d_forward(x_pad, weight, bias, stride):
    return _BACKENDS[_active].conv1d_forward(x_pad, weight, bias, stride)


def conv1d_grad_input(grad_out, weight, stride, padded_length):
    return _BACKENDS[_active].conv1d_grad_input(grad_out, weight, stride, padded_length)


def conv1d_grad_weight(grad_out, x_pad, stride, kernel):
    return _BACKENDS[_active].conv1d_grad_weight(grad_out, x_pad, stride, kernel)
