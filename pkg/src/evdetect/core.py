"""Core domain types: events, annotated signal records, and time grids.

Events are stored as (center, duration); (start, stop) is a derived view.
All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class Event:
    """One annotated or predicted interval.

    center and duration are in seconds; confidence is 1.0 for ground truth
    and a relative score in [0, 1] for predictions.
    """

    center: float
    duration: float
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValueError(f"event duration must be > 0, got {self.duration}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")

    @property
    def start(self) -> float:
        return self.center - self.duration / 2.0

    @property
    def stop(self) -> float:
        return self.center + self.duration / 2.0


def event_from_bounds(start: float, stop: float, confidence: float = 1.0) -> Event:
    """Build an Event from (start, stop) times in seconds."""
    if not stop > start:
        raise ValueError(f"stop must be greater than start, got [{start}, {stop}]")
    return Event(center=(start + stop) / 2.0, duration=stop - start, confidence=confidence)


def interval_iou(a: Event, b: Event) -> float:
    """Intersection-over-union of two intervals on the real line.

    Returns 0 for disjoint or boundary-touching intervals. For events
    sharing a center this reduces to min(duration) / max(duration).
    """
    inter = min(a.stop, b.stop) - max(a.start, b.start)
    if inter <= 0.0:
        return 0.0
    union = max(a.stop, b.stop) - min(a.start, b.start)
    return inter / union


class EventList:
    """Immutable sequence of events, sorted by center (ties by duration)."""

    __slots__ = ("_events",)

    def __init__(self, events: Sequence[Event] = ()):
        object.__setattr__(self, "_events", tuple(sorted(events, key=lambda e: (e.center, e.duration))))

    @property
    def events(self) -> tuple[Event, ...]:
        return self._events

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __getitem__(self, i):
        return self._events[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, EventList) and self._events == other._events

    def __repr__(self) -> str:
        return f"EventList({list(self._events)!r})"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sample grid at the model output rate (input rate / stride)."""

    fs_out: float
    length: int

    def __post_init__(self) -> None:
        if self.fs_out <= 0:
            raise ValueError("fs_out must be positive")
        if self.length < 0:
            raise ValueError("length must be non-negative")

    @property
    def duration_s(self) -> float:
        return self.length / self.fs_out

    def times(self) -> np.ndarray:
        return np.arange(self.length) / self.fs_out


def seconds_to_index(t: float, grid: TimeGrid) -> int:
    """Nearest grid index for time t, clamped to [0, length - 1].

    Rejects times outside the recording.
    """
    if t < 0 or t > grid.duration_s:
        raise ValueError(f"time {t} s outside the recording [0, {grid.duration_s}] s")
    idx = int(round(t * grid.fs_out))
    return min(max(idx, 0), grid.length - 1)


@dataclass(frozen=True)
class SignalRecord:
    """A sampled 1D (optionally multi-channel) signal with annotations.

    samples has shape (channels, length); all channels share the length.
    """

    samples: np.ndarray
    fs: float
    annotations: EventList = field(default_factory=EventList)
    id: str = ""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples)
        if samples.ndim == 1:
            samples = samples[np.newaxis, :]
        if samples.ndim != 2:
            raise ValueError(f"samples must be 1D or (channels, length), got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        dur = self.duration_s
        for ev in self.annotations:
            if ev.start < -1e-9 or ev.stop > dur + 1e-9:
                raise ValueError(
                    f"annotation [{ev.start:.6f}, {ev.stop:.6f}] s outside record of {dur:.6f} s"
                )

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.length / self.fs
