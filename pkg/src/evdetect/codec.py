"""Encoding events into center/duration target signals and decoding them back.

The center target is a per-event Gaussian bump (sigma = 0.5 * duration / 6,
in output samples) combined across events by elementwise max, with the sample
nearest each center forced to exactly 1. The duration target holds the
duration normalized by a fixed maximum, defined only at center samples.
Decoding finds confidence-thresholded center peaks under a time-window
non-maximum suppression and reads the duration signal at each peak.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Event, EventList, TimeGrid, seconds_to_index


@dataclass
class TargetPair:
    """Aligned center/duration target sequences on a TimeGrid."""

    center: np.ndarray
    duration: np.ndarray
    center_mask: np.ndarray  # sorted indices where center == 1

    @property
    def n_events(self) -> int:
        return len(self.center_mask)


@dataclass(frozen=True)
class DecodeConfig:
    confidence_threshold: float = 0.5
    nms_window_s: float = 1.0
    max_duration_s: float = 8.0

    def __post_init__(self) -> None:
        if self.max_duration_s <= 0:
            raise ValueError("max_duration_s must be positive")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must be in [0, 1]")


def encode(events: EventList, grid: TimeGrid, max_duration_s: float) -> TargetPair:
    """Build center/duration targets for all events on the grid.

    Durations beyond max_duration_s are clamped to a normalized value of 1.0
    with a warning. If two centers snap to the same grid sample, the later
    event (in center order) keeps that duration slot.
    """
    if grid.length <= 0:
        raise ValueError("cannot encode onto an empty grid")
    if max_duration_s <= 0:
        raise ValueError("max_duration_s must be positive")

    center = np.zeros(grid.length, dtype=np.float64)
    duration = np.zeros(grid.length, dtype=np.float64)
    mask: list[int] = []
    idx = np.arange(grid.length, dtype=np.float64)

    for event in events:
        i_star = seconds_to_index(event.center, grid)
        dur_samples = event.duration * grid.fs_out
        sigma = 0.5 * dur_samples / 6.0
        bump = np.exp(-((idx - i_star) ** 2) / (2.0 * sigma**2))
        np.maximum(center, bump, out=center)
        center[i_star] = 1.0

        dur_norm = event.duration / max_duration_s
        if dur_norm > 1.0:
            warnings.warn(
                f"event duration {event.duration:.3f} s exceeds max_duration_s={max_duration_s}; "
                "duration target clamped to 1.0",
                stacklevel=2,
            )
            dur_norm = 1.0
        duration[i_star] = dur_norm
        mask.append(i_star)

    return TargetPair(center=center, duration=duration, center_mask=np.unique(np.asarray(mask, dtype=int)))


def find_peaks(values: np.ndarray, fs_out: float, nms_window_s: float) -> np.ndarray:
    """Indices of local maxima that also win their +-window/2 neighborhood.

    Ties go to the earliest index, both between immediate neighbors (the
    leading sample of a flat plateau is the candidate) and inside the NMS
    window. Boundary samples only need to beat the neighbors they have.
    """
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n == 0:
        return np.empty(0, dtype=int)
    half = int(round(nms_window_s / 2.0 * fs_out))

    # compress equal-value plateaus into runs; a run is a candidate when it
    # beats both neighboring runs (one-sided at the boundaries), and its
    # first sample carries the peak
    run_starts = np.concatenate([[0], np.nonzero(np.diff(x) != 0)[0] + 1])
    run_values = x[run_starts]
    if len(run_values) < 2:
        return np.empty(0, dtype=int)
    beats_prev = np.ones(len(run_values), dtype=bool)
    beats_prev[1:] = run_values[1:] > run_values[:-1]
    beats_next = np.ones(len(run_values), dtype=bool)
    beats_next[:-1] = run_values[:-1] > run_values[1:]
    candidates = run_starts[beats_prev & beats_next]

    kept = []
    for i in candidates:
        lo = max(i - half, 0)
        window = x[lo : min(i + half + 1, n)]
        top = window.max()
        if top > x[i]:
            continue
        if lo + int(np.argmax(window == top)) == i:
            kept.append(i)
    return np.asarray(kept, dtype=int)


def decode(
    center_pred: np.ndarray,
    duration_pred: np.ndarray,
    grid: TimeGrid,
    cfg: DecodeConfig,
) -> EventList:
    """Turn center/duration output signals into an EventList.

    Each kept peak i becomes an event centered at i / fs_out with duration
    duration_pred[i] * max_duration_s and the peak value as confidence;
    zero-duration peaks are dropped.
    """
    center_pred = np.asarray(center_pred)
    duration_pred = np.asarray(duration_pred)
    if len(center_pred) != grid.length or len(duration_pred) != grid.length:
        raise ValueError(
            f"prediction lengths {len(center_pred)}/{len(duration_pred)} do not match grid length {grid.length}"
        )
    events = []
    for i in find_peaks(center_pred, grid.fs_out, cfg.nms_window_s):
        confidence = float(center_pred[i])
        if confidence <= cfg.confidence_threshold:
            continue
        duration = float(duration_pred[i]) * cfg.max_duration_s
        if duration <= 0.0:
            continue
        events.append(Event(center=i / grid.fs_out, duration=duration, confidence=confidence))
    return EventList(events)


@dataclass
class RoundtripReport:
    n_input: int
    n_decoded: int
    # (center offset, duration offset) in seconds per input event, nearest decode
    offsets: list[tuple[float, float]] = field(default_factory=list)

    @property
    def merged_or_lost(self) -> int:
        return self.n_input - self.n_decoded


def roundtrip_check(events: EventList, grid: TimeGrid, cfg: DecodeConfig) -> RoundtripReport:
    """Encode then decode, pairing each input event with the nearest decode."""
    pair = encode(events, grid, cfg.max_duration_s)
    decoded = decode(pair.center, pair.duration, grid, cfg)
    report = RoundtripReport(n_input=len(events), n_decoded=len(decoded))
    for original in events:
        if len(decoded) == 0:
            break
        nearest = min(decoded, key=lambda d: abs(d.center - original.center))
        report.offsets.append(
            (nearest.center - original.center, nearest.duration - original.duration)
        )
    return report
