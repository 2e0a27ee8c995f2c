"""Training objectives.

The center head trains with a focal loss whose false-alarm weight decays with
the Gaussian target value; the duration head trains with 1 - min/max of the
predicted and target durations at center points; the epoch baseline trains
with (optionally label-smoothed) binary cross-entropy. All log-sigmoid terms
run through an overflow-free softplus so forward and backward stay finite for
logits of any magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import ops
from .autodiff.tensor import Tensor

_DURATION_EPS = 1e-6


@dataclass(frozen=True)
class LossConfig:
    alpha_c: float = 0.1
    alpha: float = 2.0
    beta: float = 4.0
    lambda_d: float = 5.0
    label_smoothing: float = 0.1

    def __post_init__(self) -> None:
        if min(self.alpha_c, self.alpha, self.beta, self.lambda_d) < 0:
            raise ValueError("loss hyperparameters must be non-negative")
        if not 0.0 <= self.label_smoothing < 0.5:
            raise ValueError("label_smoothing must be in [0, 0.5)")


def stable_softplus(x):
    """log(1 + e^x) computed as log(e^-|x| + 1) + max(x, 0); never overflows."""
    x = np.asarray(x, dtype=np.float64) if not isinstance(x, np.ndarray) else x
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def _as_batch(values: np.ndarray) -> np.ndarray:
    return values[np.newaxis, :] if values.ndim == 1 else values


def focal_center_loss(logits: Tensor, center_target: np.ndarray, n_events, cfg: LossConfig | None = None) -> Tensor:
    """Focal loss on the center heatmap, averaged over windows.

    Points where the target is exactly 1 are positives; everywhere else the
    penalty is down-weighted by (1 - target)^beta so near-center false alarms
    cost less than far-field ones. Each window is normalized by its event
    count (floored at 1).
    """
    cfg = cfg or LossConfig()
    lv = _as_batch(logits.values)
    target = _as_batch(np.asarray(center_target, dtype=lv.dtype))
    if lv.shape != target.shape:
        raise ValueError(f"logits {lv.shape} and target {target.shape} differ")
    if target.min() < 0.0 or target.max() > 1.0:
        raise ValueError("center target values must lie in [0, 1]")

    batch = lv.shape[0]
    counts = np.maximum(np.broadcast_to(np.asarray(n_events, dtype=lv.dtype), (batch,)), 1.0)

    s = ops.sigmoid_values(lv)
    softplus = stable_softplus(lv).astype(lv.dtype)
    log_s = lv - softplus
    log_1ms = -softplus
    pos = target == 1.0

    one_minus_s = 1.0 - s
    pos_term = (1.0 - cfg.alpha_c) * one_minus_s**cfg.alpha * log_s
    neg_term = cfg.alpha_c * (1.0 - target) ** cfg.beta * s**cfg.alpha * log_1ms
    per_point = np.where(pos, pos_term, neg_term)
    per_window = -per_point.sum(axis=1) / counts
    value = per_window.mean()

    result = Tensor(np.asarray(value, dtype=lv.dtype), parents=(logits,))

    def backward_fn(g: np.ndarray) -> None:
        if not logits.requires_grad:
            return
        dpos = (1.0 - cfg.alpha_c) * one_minus_s**cfg.alpha * (one_minus_s - cfg.alpha * s * log_s)
        dneg = cfg.alpha_c * (1.0 - target) ** cfg.beta * s**cfg.alpha * (
            cfg.alpha * one_minus_s * log_1ms - s
        )
        grad = -np.where(pos, dpos, dneg) / counts[:, np.newaxis] / batch
        grad = grad * float(g)
        logits.accumulate_grad(grad.reshape(logits.shape))

    result.backward_fn = backward_fn
    return result


def iou_duration_loss(
    duration_pred: Tensor,
    duration_target: np.ndarray,
    center_mask: np.ndarray,
    n_events,
) -> Tensor:
    """1 - mean interval overlap ratio at center points.

    With the prediction and target sharing a center, IoU of the implied
    intervals reduces to min/max of the two durations; predictions are only
    read (and only receive gradient) at center-mask points. Windows with no
    events contribute 0.
    """
    pv = _as_batch(duration_pred.values)
    target = _as_batch(np.asarray(duration_target, dtype=pv.dtype))
    mask = _as_batch(np.asarray(center_mask, dtype=bool))
    if pv.shape != target.shape or pv.shape != mask.shape:
        raise ValueError("duration prediction, target, and mask shapes differ")

    batch = pv.shape[0]
    counts = np.broadcast_to(np.asarray(n_events, dtype=pv.dtype), (batch,)).astype(pv.dtype)

    clipped = np.clip(pv, _DURATION_EPS, 1.0)
    ratio = np.where(mask, np.minimum(clipped, target) / np.maximum(clipped, target), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_window = np.where(counts > 0, 1.0 - ratio.sum(axis=1) / np.maximum(counts, 1.0), 0.0)
    value = per_window.mean()

    result = Tensor(np.asarray(value, dtype=pv.dtype), parents=(duration_pred,))

    def backward_fn(g: np.ndarray) -> None:
        if not duration_pred.requires_grad:
            return
        dratio = np.zeros_like(pv)
        below = mask & (clipped < target)
        above = mask & (clipped > target)
        dratio[below] = 1.0 / target[below]
        dratio[above] = -target[above] / clipped[above] ** 2
        # no gradient where the clip is active
        dratio[(pv < _DURATION_EPS) | (pv > 1.0)] = 0.0
        scale = np.where(counts > 0, 1.0 / np.maximum(counts, 1.0), 0.0)
        grad = -dratio * scale[:, np.newaxis] / batch * float(g)
        duration_pred.accumulate_grad(grad.reshape(duration_pred.shape))

    result.backward_fn = backward_fn
    return result


def combined_loss(
    center_logits: Tensor,
    duration_logits: Tensor,
    center_target: np.ndarray,
    duration_target: np.ndarray,
    center_mask: np.ndarray,
    n_events,
    cfg: LossConfig | None = None,
) -> tuple[Tensor, float, float]:
    """Center loss + lambda_d * duration loss; returns (total, center, duration)."""
    cfg = cfg or LossConfig()
    loss_c = focal_center_loss(center_logits, center_target, n_events, cfg)
    duration_pred = ops.sigmoid(duration_logits)
    loss_d = iou_duration_loss(duration_pred, duration_target, center_mask, n_events)
    total = ops.add(loss_c, ops.scale(loss_d, cfg.lambda_d))
    return total, loss_c.item(), loss_d.item()


def epoch_bce(logits: Tensor, labels: np.ndarray, smoothing: float = 0.0) -> Tensor:
    """Mean binary cross-entropy with labels smoothed to {s, 1-s}."""
    lv = logits.values
    labels = np.asarray(labels)
    if lv.shape != labels.shape:
        raise ValueError(f"logits {lv.shape} and labels {labels.shape} differ")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1 before smoothing")
    if not 0.0 <= smoothing < 0.5:
        raise ValueError("smoothing must be in [0, 0.5)")

    targets = labels * (1.0 - smoothing) + (1.0 - labels) * smoothing
    targets = targets.astype(lv.dtype)
    value = (stable_softplus(lv) - targets * lv).mean()

    result = Tensor(np.asarray(value, dtype=lv.dtype), parents=(logits,))

    def backward_fn(g: np.ndarray) -> None:
        if not logits.requires_grad:
            return
        grad = (ops.sigmoid_values(lv) - targets) / lv.size * float(g)
        logits.accumulate_grad(grad.astype(lv.dtype))

    result.backward_fn = backward_fn
    return result
