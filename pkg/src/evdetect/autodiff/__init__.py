"""Minimal reverse-mode autodiff: tensors, 1D conv ops, Adam, checkpoints."""

from . import kernels, ops
from .optim import Adam, adam_step
from .serialize import load_checkpoint, save_checkpoint
from .tensor import Tensor

__all__ = [
    "Tensor",
    "ops",
    "kernels",
    "Adam",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
]
