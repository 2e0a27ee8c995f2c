"""Synthetic dataset generation: burst events mixed into a pulse-train background.

Each 20 s segment gets, with some probability, one or two annotated noise
bursts of random duration and SNR, plus occasional shorter distractor bursts
that carry no annotation. SNR treats the burst as the noise term: the scale
factor makes background power / scaled-burst power hit the requested dB value
over the event support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Event, EventList, SignalRecord


@dataclass(frozen=True)
class SimConfig:
    fs: float = 256.0
    segment_s: float = 20.0
    stride_s: float = 5.0
    n_segments: int = 200
    event_prob: float = 0.2
    n_events_choices: tuple[int, ...] = (1, 2)
    dur_range_s: tuple[float, float] = (1.0, 6.7)
    snr_db_range: tuple[float, float] = (-6.0, 6.0)
    distractor_prob: float = 0.3
    distractor_dur_range_s: tuple[float, float] = (0.5, 1.0)
    taper: float = 0.5
    placement_attempts: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.event_prob <= 1.0:
            raise ValueError("event_prob must be in [0, 1]")
        lo, hi = self.dur_range_s
        if not 0.0 < lo <= hi < self.segment_s:
            raise ValueError(f"dur_range_s {self.dur_range_s} must lie within (0, segment_s)")
        if max(self.n_events_choices) * hi > self.segment_s:
            raise ValueError(
                f"{max(self.n_events_choices)} events of up to {hi} s cannot fit "
                f"without overlap in a {self.segment_s} s segment"
            )


@dataclass
class SimDataset:
    records: list[SignalRecord]
    # per-record insertion details (drawn SNR, scale) keyed by record id
    meta: dict[str, list[dict]] = field(default_factory=dict)


def _moving_average(x: np.ndarray, width: int) -> np.ndarray:
    width = max(int(width), 1)
    if width == 1:
        return x
    return np.convolve(x, np.ones(width) / width, mode="same")


def synth_background(n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Quasi-periodic pulse train plus low-amplitude broadband noise and wander.

    The fundamental is drawn from 0.8-1.5 Hz per call, with jittered pulse
    timing and amplitude. Baseline wander (band-limited random walk, the same
    spectral family as the burst events) rides underneath, so weak events
    grade into the background instead of standing clear of a flat floor.
    Output is standardized to zero mean, unit variance.
    """
    if n <= 0:
        raise ValueError(f"sample count must be positive, got {n}")
    f0 = rng.uniform(0.8, 1.5)
    # biphasic pulse kernel, ~40 ms wide
    half = max(int(round(0.02 * fs)), 1)
    tk = np.arange(-2 * half, 2 * half + 1) / max(half, 1)
    kernel = (1.0 - tk**2) * np.exp(-0.5 * tk**2)

    x = np.zeros(n, dtype=np.float64)
    t = rng.uniform(0.0, 1.0 / f0)
    while t * fs < n:
        idx = int(round(t * fs))
        amp = rng.uniform(0.8, 1.2)
        lo = max(idx - 2 * half, 0)
        hi = min(idx + 2 * half + 1, n)
        x[lo:hi] += amp * kernel[lo - (idx - 2 * half) : hi - (idx - 2 * half)]
        t += (1.0 / f0) * rng.uniform(0.95, 1.05)

    std = x.std()
    if std > 1e-12:
        x /= std

    wander = np.cumsum(rng.standard_normal(n))
    wander -= _moving_average(wander, max(n // 8, 3))
    wander = _moving_average(wander, max(n // 64, 1))
    wander_std = wander.std()
    if wander_std > 1e-12:
        x += 0.22 * wander / wander_std

    x += 0.1 * rng.standard_normal(n)
    x -= x.mean()
    std = x.std()
    if std > 1e-12:
        x /= std
    return x


def synth_artefact(n: int, rng: np.random.Generator) -> np.ndarray:
    """Band-limited random-walk burst, standardized to zero mean, unit variance.

    A slow random envelope with deep quiet dips modulates the walk, so bursts
    wax and wane instead of holding a constant level throughout.
    """
    if n <= 0:
        raise ValueError(f"sample count must be positive, got {n}")
    walk = np.cumsum(rng.standard_normal(n))
    trend = _moving_average(walk, max(n // 8, 3))
    x = _moving_average(walk - trend, max(n // 64, 1))

    envelope = _moving_average(rng.standard_normal(n), max(n // 8, 4))
    span = envelope.max() - envelope.min()
    if span > 1e-12:
        envelope = (envelope - envelope.min()) / span
    else:
        envelope = np.ones(n)
    x *= 0.12 + 0.88 * envelope**1.5

    x -= x.mean()
    std = x.std()
    if std > 1e-12:
        x /= std
    else:
        x = rng.standard_normal(n)
        x -= x.mean()
        if x.std() > 1e-12:
            x /= x.std()
    return x


def tukey_window(n: int, taper: float = 0.5) -> np.ndarray:
    """Tapered cosine window: flat 1.0 midsection, cosine tapers, endpoints 0."""
    if n < 2:
        raise ValueError(f"window needs at least 2 points, got {n}")
    if not 0.0 <= taper <= 1.0:
        raise ValueError("taper fraction must be in [0, 1]")
    if taper == 0.0:
        return np.ones(n)
    m = taper * (n - 1) / 2.0
    k = np.arange(n, dtype=np.float64)
    w = np.ones(n)
    left = k < m
    w[left] = 0.5 * (1.0 - np.cos(np.pi * k[left] / m))
    return np.minimum(w, w[::-1])


def snr_scale(background_power: float, artefact_power: float, snr_db: float) -> float:
    """Scale factor so background_power / (scale^2 * artefact_power) hits snr_db."""
    if background_power <= 0 or artefact_power <= 0:
        raise ValueError("powers must be positive")
    return float(np.sqrt(background_power / (artefact_power * 10.0 ** (snr_db / 10.0))))


def insert_burst(
    segment: np.ndarray, burst: np.ndarray, start: int, snr_db: float, taper: float = 0.5
) -> float:
    """Mix a Tukey-windowed burst into segment[start:start+len(burst)] in place.

    The scale is computed from the powers over the support before windowing,
    so the pre-window SNR is exact; returns the scale factor used.
    """
    n = len(burst)
    support = segment[start : start + n]
    if len(support) != n:
        raise ValueError("burst does not fit inside the segment")
    scale = snr_scale(float(np.mean(support**2)), float(np.mean(burst**2)), snr_db)
    support += tukey_window(n, taper) * burst * scale
    return scale


def _place_interval(
    rng: np.random.Generator, n: int, dur_n: int, occupied: list[tuple[int, int]], attempts: int
) -> int:
    for _ in range(attempts):
        start = int(rng.integers(0, n - dur_n + 1))
        stop = start + dur_n
        if all(stop <= a or start >= b for a, b in occupied):
            occupied.append((start, stop))
            return start
    raise RuntimeError(f"could not place a {dur_n}-sample burst without overlap after {attempts} attempts")


def _quantized_duration(rng: np.random.Generator, dur_range: tuple[float, float], fs: float) -> int:
    dur_s = rng.uniform(dur_range[0], dur_range[1])
    dur_n = int(round(dur_s * fs))
    lo = int(np.ceil(dur_range[0] * fs))
    hi = max(int(np.floor(dur_range[1] * fs)), lo)
    return min(max(dur_n, lo), hi)


def _make_segment(
    background: np.ndarray, config: SimConfig, rng: np.random.Generator, record_id: str
) -> tuple[SignalRecord, list[dict]]:
    channels, n = background.shape
    segment = background.astype(np.float64, copy=True)
    occupied: list[tuple[int, int]] = []
    events: list[Event] = []
    meta: list[dict] = []

    if rng.uniform() < config.event_prob:
        k = int(rng.choice(np.asarray(config.n_events_choices)))
        for _ in range(k):
            dur_n = _quantized_duration(rng, config.dur_range_s, config.fs)
            start = _place_interval(rng, n, dur_n, occupied, config.placement_attempts)
            snr_db = rng.uniform(config.snr_db_range[0], config.snr_db_range[1])
            burst = synth_artefact(dur_n, rng)
            scales = [insert_burst(segment[c], burst, start, snr_db, config.taper) for c in range(channels)]
            events.append(Event(center=(start + dur_n / 2.0) / config.fs, duration=dur_n / config.fs))
            meta.append(
                {
                    "onset_s": start / config.fs,
                    "duration_s": dur_n / config.fs,
                    "snr_db": snr_db,
                    "scale": scales[0],
                    "kind": "target",
                }
            )

    if rng.uniform() < config.distractor_prob:
        dur_n = _quantized_duration(rng, config.distractor_dur_range_s, config.fs)
        try:
            start = _place_interval(rng, n, dur_n, occupied, config.placement_attempts)
        except RuntimeError:
            start = None
        if start is not None:
            snr_db = rng.uniform(config.snr_db_range[0], config.snr_db_range[1])
            burst = synth_artefact(dur_n, rng)
            for c in range(channels):
                insert_burst(segment[c], burst, start, snr_db, config.taper)
            meta.append(
                {
                    "onset_s": start / config.fs,
                    "duration_s": dur_n / config.fs,
                    "snr_db": snr_db,
                    "kind": "distractor",
                }
            )

    record = SignalRecord(
        samples=segment.astype(np.float32),
        fs=config.fs,
        annotations=EventList(events),
        id=record_id,
    )
    return record, meta


def _file_backgrounds(records: Sequence[SignalRecord], config: SimConfig) -> list[np.ndarray]:
    seg_n = int(round(config.segment_s * config.fs))
    stride_n = max(int(round(config.stride_s * config.fs)), 1)
    segments = []
    for record in records:
        if record.fs != config.fs:
            raise ValueError(f"record {record.id!r} sampled at {record.fs} Hz, config expects {config.fs} Hz")
        for start in range(0, record.length - seg_n + 1, stride_n):
            segments.append(np.asarray(record.samples[:, start : start + seg_n], dtype=np.float64))
    if not segments:
        raise ValueError("no background segments could be cut from the provided records")
    return segments


def generate(config: SimConfig, source: Sequence[SignalRecord] | None = None) -> SimDataset:
    """Generate the simulated dataset.

    With source=None the background is synthesized; otherwise the provided
    records are tiled into segments (stride_s) and used as background. Each
    segment draws from its own RNG stream derived from (seed, segment index),
    so generation is deterministic and parallelizable.
    """
    streams = np.random.SeedSequence(config.seed)
    if source is None:
        n_segments = config.n_segments
        seg_n = int(round(config.segment_s * config.fs))
        backgrounds = None
    else:
        backgrounds = _file_backgrounds(source, config)
        n_segments = len(backgrounds)

    records: list[SignalRecord] = []
    meta: dict[str, list[dict]] = {}
    for i, child in enumerate(streams.spawn(n_segments)):
        rng = np.random.default_rng(child)
        if backgrounds is None:
            background = synth_background(seg_n, config.fs, rng)[np.newaxis, :]
        else:
            background = backgrounds[i]
        record_id = f"seg{i:05d}"
        record, record_meta = _make_segment(background, config, rng, record_id)
        records.append(record)
        meta[record_id] = record_meta
    return SimDataset(records=records, meta=meta)
