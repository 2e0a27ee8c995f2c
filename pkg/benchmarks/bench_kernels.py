#!/usr/bin/env python3
"""Benchmark the compiled conv kernels against the numpy fallback.

Runs forward, input-gradient, and weight-gradient kernels on shapes taken
from the default backbone's hot layers, plus a full tiny-model training step.

Usage: python benchmarks/bench_kernels.py [--repeats N] [--dtype float32|float64]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from evdetect.autodiff import kernels
from evdetect.simulate import SimConfig, generate
from evdetect.training import TrainConfig, train_event
from evdetect.unet import build, tiny_config

# (batch, in_ch, out_ch, kernel, length, stride) for the layers that dominate
SHAPES = [
    ("stage0 20s@256Hz", 16, 1, 32, 20, 5120, 1),
    ("stage1 down x4", 16, 32, 64, 20, 5120, 4),
    ("stage2 down x4", 16, 64, 64, 15, 1280, 4),
    ("decoder 16x", 16, 128, 64, 15, 320, 1),
    ("head", 16, 64, 1, 7, 320, 1),
]


def time_kernel(fn, repeats: int) -> float:
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_shapes(dtype: str, repeats: int) -> None:
    rng = np.random.default_rng(0)
    np_dtype = np.float32 if dtype == "float32" else np.float64
    print(f"\nper-kernel timings ({dtype}, mean of {repeats} runs, ms)")
    header = f"{'layer':>18} {'op':>12}" + "".join(f"{b:>12}" for b in kernels.available_backends())
    print(header)
    for name, batch, ci, co, k, length, stride in SHAPES:
        x = np.ascontiguousarray(rng.standard_normal((batch, ci, length)).astype(np_dtype))
        w = np.ascontiguousarray(rng.standard_normal((co, ci, k)).astype(np_dtype))
        b = np.ascontiguousarray(rng.standard_normal(co).astype(np_dtype))
        out_len = (length - k) // stride + 1
        g = np.ascontiguousarray(rng.standard_normal((batch, co, out_len)).astype(np_dtype))
        ops = {
            "forward": lambda be: be.conv1d_forward(x, w, b, stride),
            "grad_input": lambda be: be.conv1d_grad_input(g, w, stride, length),
            "grad_weight": lambda be: be.conv1d_grad_weight(g, x, stride, k),
        }
        for op_name, op in ops.items():
            row = f"{name:>18} {op_name:>12}"
            for backend in kernels.available_backends():
                kernels.set_backend(backend)
                module = kernels._BACKENDS[backend]
                row += f"{time_kernel(lambda: op(module), repeats) * 1e3:>12.3f}"
            print(row)


def bench_training(dtype: str) -> None:
    print(f"\nfull tiny-model training epoch ({dtype}, 64 windows, batch 16)")
    data = generate(SimConfig(n_segments=64, seed=0, event_prob=0.5)).records
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        model = build(tiny_config(dtype=dtype), seed=0)
        cfg = TrainConfig(epochs=1, batch_size=16, seed=0)
        start = time.perf_counter()
        train_event(model, data, cfg)
        print(f"  {backend:>8}: {time.perf_counter() - start:.3f} s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    args = parser.parse_args()
    print(f"available backends: {kernels.available_backends()} (default {kernels.backend_name()})")
    original = kernels.backend_name()
    try:
        bench_shapes(args.dtype, args.repeats)
        bench_training(args.dtype)
    finally:
        kernels.set_backend(original)


if __name__ == "__main__":
    main()
