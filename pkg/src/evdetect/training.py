"""Training loops and batched prediction for both model flavors.

Records are cut into fixed windows; events whose center falls inside a
window become that window's regression targets, while epoch labels rasterize
every overlapping event's support onto the output grid. Runs are fully
seeded: window shuffling, dropout, and parameter init all derive from config
seeds, so repeated runs produce bit-identical checkpoints.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Adam, ops
from .codec import DecodeConfig, TargetPair, decode, encode
from .core import Event, EventList, SignalRecord, TimeGrid
from .losses import LossConfig, combined_loss, epoch_bce
from .postproc import epoch_pipeline
from .unet import BackboneConfig, ModelOutput, UNet1d, tiny_config


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    window_s: float = 20.0
    window_stride_s: float | None = None  # defaults to window_s (non-overlapping)
    batch_size: int = 16
    epochs: int = 30
    lr: float = 1e-3
    seed: int = 0
    max_duration_s: float = 8.0
    loss: LossConfig = field(default_factory=LossConfig)
    backbone: BackboneConfig = field(default_factory=tiny_config)


@dataclass
class Window:
    record_id: str
    start_s: float
    samples: np.ndarray  # [C, Lw]
    events: EventList  # centers inside the window, in window-local time
    support_events: EventList  # overlapping events clipped to the window


def make_windows(records: list[SignalRecord], window_s: float, stride_s: float | None = None) -> list[Window]:
    """Tile each record into windows; see module docstring for the event rules."""
    stride_s = window_s if stride_s is None else stride_s
    windows: list[Window] = []
    for record in records:
        win_n = int(round(window_s * record.fs))
        stride_n = max(int(round(stride_s * record.fs)), 1)
        if win_n > record.length:
            raise ValueError(
                f"window of {window_s} s exceeds record {record.id!r} ({record.duration_s} s)"
            )
        for start in range(0, record.length - win_n + 1, stride_n):
            start_s = start / record.fs
            end_s = start_s + win_n / record.fs
            inside = [
                Event(ev.center - start_s, ev.duration, ev.confidence)
                for ev in record.annotations
                if start_s <= ev.center < end_s
            ]
            support = []
            for ev in record.annotations:
                lo = max(ev.start, start_s)
                hi = min(ev.stop, end_s)
                if hi - lo > 0:
                    support.append(
                        Event((lo + hi) / 2.0 - start_s, hi - lo, ev.confidence)
                    )
            windows.append(
                Window(
                    record_id=record.id,
                    start_s=start_s,
                    samples=record.samples[:, start : start + win_n],
                    events=EventList(inside),
                    support_events=EventList(support),
                )
            )
    return windows


def rasterize_support(events: EventList, grid: TimeGrid) -> np.ndarray:
    """1 where the grid cell's center time lies inside any event."""
    labels = np.zeros(grid.length, dtype=np.float64)
    centers = (np.arange(grid.length) + 0.5) / grid.fs_out
    for ev in events:
        labels[(centers >= ev.start) & (centers < ev.stop)] = 1.0
    return labels


@dataclass
class _EventBatchTargets:
    center: np.ndarray
    duration: np.ndarray
    mask: np.ndarray
    n_events: np.ndarray


def _event_targets(windows: list[Window], grid: TimeGrid, max_duration_s: float) -> _EventBatchTargets:
    n = len(windows)
    center = np.zeros((n, grid.length))
    duration = np.zeros((n, grid.length))
    mask = np.zeros((n, grid.length), dtype=bool)
    n_events = np.zeros(n)
    for i, window in enumerate(windows):
        pair: TargetPair = encode(window.events, grid, max_duration_s)
        center[i] = pair.center
        duration[i] = pair.duration
        mask[i, pair.center_mask] = True
        n_events[i] = len(window.events)
    return _EventBatchTargets(center, duration, mask, n_events)


@dataclass
class TrainResult:
    trace: list[dict]
    model: UNet1d


def _check_setup(model: UNet1d, records: list[SignalRecord], cfg: TrainConfig) -> tuple[float, int]:
    if not records:
        raise ValueError("no records to train on")
    fs = records[0].fs
    if any(r.fs != fs for r in records):
        raise ValueError("records must share a sampling rate")
    win_n = int(round(cfg.window_s * fs))
    if win_n % model.total_downsample:
        raise ValueError(
            f"window of {win_n} samples is not divisible by the model stride {model.total_downsample}"
        )
    return fs, win_n


def _run_epochs(model: UNet1d, inputs: np.ndarray, loss_of_batch, cfg: TrainConfig) -> list[dict]:
    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(model.parameters(), lr=cfg.lr)
    n = inputs.shape[0]
    trace: list[dict] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        totals = {"loss": 0.0, "loss_center": 0.0, "loss_duration": 0.0}
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, parts = loss_of_batch(model, inputs[idx], idx, rng)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss {value} at epoch {epoch}, batch offset {lo} "
                    f"(parts: {parts}); lower the learning rate or check the data"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            weight = len(idx)
            totals["loss"] += value * weight
            for key, part in parts.items():
                totals[key] += part * weight
        entry = {"epoch": epoch, "loss": totals["loss"] / n}
        if totals["loss_center"] or totals["loss_duration"]:
            entry["loss_center"] = totals["loss_center"] / n
            entry["loss_duration"] = totals["loss_duration"] / n
        trace.append(entry)
    return trace


def train_event(model: UNet1d, records: list[SignalRecord], cfg: TrainConfig) -> TrainResult:
    """Train the center/duration model with the combined loss."""
    if model.config.head != "event":
        raise ValueError("train_event requires a model with the event head")
    fs, win_n = _check_setup(model, records, cfg)
    windows = make_windows(records, cfg.window_s, cfg.window_stride_s)
    grid = TimeGrid(fs / model.output_stride, win_n // model.output_stride)
    targets = _event_targets(windows, grid, cfg.max_duration_s)
    inputs = np.stack([w.samples for w in windows]).astype(model._np_dtype)

    def loss_of_batch(model, batch, idx, rng):
        out: ModelOutput = model.forward(batch, train=True, rng=rng)
        total, lc, ld = combined_loss(
            out.center_logits,
            out.duration_logits,
            targets.center[idx],
            targets.duration[idx],
            targets.mask[idx],
            targets.n_events[idx],
            cfg.loss,
        )
        return total, {"loss_center": lc, "loss_duration": ld}

    trace = _run_epochs(model, inputs, loss_of_batch, cfg)
    return TrainResult(trace=trace, model=model)


def train_epoch_baseline(model: UNet1d, records: list[SignalRecord], cfg: TrainConfig) -> TrainResult:
    """Train the single-output model with binary cross-entropy per output sample."""
    if model.config.head != "epoch":
        raise ValueError("train_epoch_baseline requires a model with the epoch head")
    fs, win_n = _check_setup(model, records, cfg)
    windows = make_windows(records, cfg.window_s, cfg.window_stride_s)
    grid = TimeGrid(fs / model.output_stride, win_n // model.output_stride)
    labels = np.stack([rasterize_support(w.support_events, grid) for w in windows])
    inputs = np.stack([w.samples for w in windows]).astype(model._np_dtype)

    def loss_of_batch(model, batch, idx, rng):
        out: ModelOutput = model.forward(batch, train=True, rng=rng)
        loss = epoch_bce(out.logits, labels[idx], smoothing=cfg.loss.label_smoothing)
        return loss, {}

    trace = _run_epochs(model, inputs, loss_of_batch, cfg)
    return TrainResult(trace=trace, model=model)


def predict_outputs(model: UNet1d, records: list[SignalRecord]) -> list[dict]:
    """Eval-mode forward per record; zero-pads to the model stride and trims.

    Returns one dict per record holding the output grid and either
    (center, duration) arrays or epoch probabilities.
    """
    results = []
    for record in records:
        x = record.samples.astype(model._np_dtype)
        length = x.shape[1]
        stride = model.total_downsample
        padded_len = -(-length // stride) * stride
        if padded_len != length:
            x = np.pad(x, ((0, 0), (0, padded_len - length)))
        keep = -(-length // model.output_stride)
        grid = TimeGrid(record.fs / model.output_stride, keep)
        with ops.no_grad():
            out = model.forward(x[np.newaxis], train=False)
        if model.config.head == "event":
            results.append(
                {
                    "id": record.id,
                    "grid": grid,
                    "center": out.center[0, :keep],
                    "duration": out.duration[0, :keep],
                }
            )
        else:
            results.append({"id": record.id, "grid": grid, "probabilities": out.probabilities[0, :keep]})
    return results


def predict_events(
    model: UNet1d,
    records: list[SignalRecord],
    decode_cfg: DecodeConfig | None = None,
    scheme: str = "none",
    theta: float = 0.5,
    median_width_s: float = 1.0,
    element_s: float = 1.0,
) -> list[EventList]:
    """Forward plus decoding: peak decoding for the event head, thresholded
    run extraction (with the chosen post-processing scheme) for the epoch head."""
    outputs = predict_outputs(model, records)
    events = []
    for out in outputs:
        if model.config.head == "event":
            cfg = decode_cfg or DecodeConfig()
            events.append(decode(out["center"], out["duration"], out["grid"], cfg))
        else:
            events.append(
                epoch_pipeline(
                    out["probabilities"], theta, scheme, out["grid"],
                    median_width_s=median_width_s, element_s=element_s,
                )
            )
    return events


def write_trace_csv(trace: list[dict], path: str | Path) -> None:
    if not trace:
        return
    fields = list(trace[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in trace:
            writer.writerow(row)
