"""Epoch-output post-processing: thresholding, median filter, binary morphology.

Morphology treats the sequence as zero-extended to an infinite domain: a flat
structuring element is slid over the padded signal, so closing can bridge
holes right up to the sequence edges. The median filter replicates edge
values instead.
"""

from __future__ import annotations

import numpy as np

from .core import Event, EventList, TimeGrid


def threshold(probabilities: np.ndarray, theta: float) -> np.ndarray:
    """1 where p > theta, else 0."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {theta}")
    return (np.asarray(probabilities) > theta).astype(np.int8)


def median_filter(binary: np.ndarray, width_s: float, fs_out: float) -> np.ndarray:
    """Sliding binary median with edge replication; width rounds up to odd."""
    x = np.asarray(binary)
    if x.size == 0:
        raise ValueError("median_filter needs a non-empty sequence")
    width = max(int(np.ceil(width_s * fs_out)), 1)
    if width % 2 == 0:
        width += 1
    if width == 1:
        return x.astype(np.int8)
    half = width // 2
    padded = np.pad(x.astype(np.int8), half, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, width)
    # binary median == majority vote
    return (windows.sum(axis=1) * 2 > width).astype(np.int8)


def _dilate_padded(padded: np.ndarray, element: int, origin: int) -> np.ndarray:
    out = np.zeros_like(padded)
    n = len(padded)
    for j in range(element):
        shift = j - origin
        src_lo, src_hi = max(-shift, 0), min(n - shift, n)
        np.maximum(out[src_lo:src_hi], padded[src_lo + shift : src_hi + shift], out=out[src_lo:src_hi])
    return out


def _erode_padded(padded: np.ndarray, element: int, origin: int) -> np.ndarray:
    out = np.ones_like(padded)
    n = len(padded)
    for j in range(element):
        shift = j - origin
        shifted = np.zeros_like(padded)
        src_lo, src_hi = max(-shift, 0), min(n - shift, n)
        shifted[src_lo:src_hi] = padded[src_lo + shift : src_hi + shift]
        np.minimum(out, shifted, out=out)
    return out


def _morphology(binary: np.ndarray, element_samples: int, close: bool) -> np.ndarray:
    x = np.asarray(binary).astype(np.int8)
    element = int(element_samples)
    if element < 1:
        raise ValueError("structuring element must have at least 1 sample")
    if x.size == 0 or element == 1:
        return x.copy()
    # the second op uses the reflected element (matters for even sizes):
    # that pairing makes closing/opening idempotent and ex-/anti-extensive
    origin = (element - 1) // 2
    reflected = element - 1 - origin
    pad = element
    padded = np.pad(x, pad)
    if close:
        result = _erode_padded(_dilate_padded(padded, element, origin), element, reflected)
    else:
        result = _dilate_padded(_erode_padded(padded, element, origin), element, reflected)
    return result[pad : pad + x.size]


def binary_closing(binary: np.ndarray, element_samples: int) -> np.ndarray:
    """Dilation then erosion with a flat element: fills holes narrower than it."""
    return _morphology(binary, element_samples, close=True)


def binary_opening(binary: np.ndarray, element_samples: int) -> np.ndarray:
    """Erosion then dilation with a flat element: removes runs narrower than it."""
    return _morphology(binary, element_samples, close=False)


def runs_to_events(binary: np.ndarray, grid: TimeGrid, probabilities: np.ndarray) -> EventList:
    """Each maximal run of 1s over [i, j] becomes an event spanning
    [i / fs_out, (j + 1) / fs_out], with the mean probability as confidence."""
    x = np.asarray(binary)
    probabilities = np.asarray(probabilities)
    if len(x) != len(probabilities):
        raise ValueError(f"binary length {len(x)} != probabilities length {len(probabilities)}")
    if len(x) != grid.length:
        raise ValueError(f"sequence length {len(x)} != grid length {grid.length}")
    padded = np.concatenate([[0], (x > 0).astype(np.int8), [0]])
    edges = np.diff(padded)
    starts = np.nonzero(edges == 1)[0]
    stops = np.nonzero(edges == -1)[0]
    events = []
    for i, j in zip(starts, stops):
        confidence = float(np.clip(probabilities[i:j].mean(), 0.0, 1.0))
        events.append(
            Event(
                center=(i + j) / 2.0 / grid.fs_out,
                duration=(j - i) / grid.fs_out,
                confidence=confidence,
            )
        )
    return EventList(events)


SCHEMES = ("none", "median", "morphology")


def epoch_pipeline(
    probabilities: np.ndarray,
    theta: float,
    scheme: str,
    grid: TimeGrid,
    median_width_s: float = 1.0,
    element_s: float = 1.0,
) -> EventList:
    """Threshold, optionally clean up, then convert runs to events.

    scheme "none" is bare threshold+runs; "median" applies a sliding median;
    "morphology" applies closing (bridge holes) then opening (drop short runs).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    mask = threshold(probabilities, theta)
    if scheme == "median":
        mask = median_filter(mask, median_width_s, grid.fs_out)
    elif scheme == "morphology":
        element = max(int(round(element_s * grid.fs_out)), 1)
        mask = binary_opening(binary_closing(mask, element), element)
    return runs_to_events(mask, grid, probabilities)
