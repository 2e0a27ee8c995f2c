"""Event-level scoring: IoU matching, PR/F1, operating-point sweeps, errors.

Matching is greedy in descending prediction confidence: each prediction takes
the unmatched truth it overlaps most (any positive IoU). Pairs at or above
the IoU threshold are true positives; matched pairs below it are tallied
separately (the truth still counts as missed); predictions left without any
pair are false positives. Counts pool across records before precision/recall
(micro-averaging).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Event, EventList, interval_iou


@dataclass
class MatchReport:
    pairs: list[tuple[int, int, float]] = field(default_factory=list)  # (pred idx, truth idx, IoU)
    tp: int = 0
    fp: int = 0
    fn: int = 0
    sub_threshold_overlap: int = 0

    def merge(self, other: "MatchReport") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.sub_threshold_overlap += other.sub_threshold_overlap


def match(predictions: EventList, truths: EventList, tau: float) -> MatchReport:
    """Greedy confidence-descending matching at IoU threshold tau."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]")
    report = MatchReport()
    order = sorted(
        range(len(predictions)),
        key=lambda i: (-predictions[i].confidence, predictions[i].center, predictions[i].duration),
    )
    taken = np.zeros(len(truths), dtype=bool)
    for pred_idx in order:
        best_iou, best_truth = 0.0, -1
        for truth_idx, truth in enumerate(truths):
            if taken[truth_idx]:
                continue
            iou = interval_iou(predictions[pred_idx], truth)
            if iou > best_iou:  # ties keep the earlier truth
                best_iou, best_truth = iou, truth_idx
        if best_truth < 0:
            report.fp += 1
            continue
        taken[best_truth] = True
        report.pairs.append((pred_idx, best_truth, best_iou))
        if best_iou >= tau:
            report.tp += 1
        else:
            report.sub_threshold_overlap += 1
    report.fn = len(truths) - report.tp
    return report


def prf(report: MatchReport) -> tuple[float, float, float]:
    """(precision, recall, F1); zeros when undefined."""
    precision = report.tp / (report.tp + report.fp) if (report.tp + report.fp) else 0.0
    recall = report.tp / (report.tp + report.fn) if (report.tp + report.fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return precision, recall, f1


@dataclass
class OperatingPoint:
    threshold: float
    precision: float
    recall: float
    f1: float


@dataclass
class PRCurve:
    """Operating points ordered by strictly decreasing threshold."""

    points: list[OperatingPoint]

    def best_f1(self) -> OperatingPoint:
        return max(self.points, key=lambda p: p.f1)

    def recalls(self) -> np.ndarray:
        return np.asarray([p.recall for p in self.points])


def default_thresholds(n: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def sweep(
    outputs: Sequence,
    truths: Sequence[EventList],
    decode_fn: Callable[[object, float], EventList],
    tau: float,
    thresholds: Sequence[float] | None = None,
) -> PRCurve:
    """Decode every record at each threshold and micro-average the matches.

    outputs[i] is whatever decode_fn understands for record i (center/duration
    signals for the event decoder, probabilities for the epoch pipelines).
    """
    if len(outputs) != len(truths):
        raise ValueError("outputs and truths must align")
    if len(outputs) == 0:
        raise ValueError("cannot sweep an empty dataset")
    grid_values = default_thresholds() if thresholds is None else np.asarray(thresholds, dtype=float)
    if np.any(grid_values < 0) or np.any(grid_values > 1):
        raise ValueError("thresholds must lie in [0, 1]")
    grid_values = np.unique(grid_values)[::-1]  # strictly decreasing

    points = []
    for theta in grid_values:
        pooled = MatchReport()
        for output, truth in zip(outputs, truths):
            pooled.merge(match(decode_fn(output, float(theta)), truth, tau))
        precision, recall, f1 = prf(pooled)
        points.append(OperatingPoint(float(theta), precision, recall, f1))
    return PRCurve(points=points)


def precision_at_recall(curve: PRCurve, recall_levels: Sequence[float]) -> dict[float, float | None]:
    """Best precision among operating points reaching each recall level.

    None marks levels no operating point reaches ("no detection").
    """
    result: dict[float, float | None] = {}
    for level in recall_levels:
        eligible = [p.precision for p in curve.points if p.recall >= level]
        result[float(level)] = max(eligible) if eligible else None
    return result


@dataclass
class ErrorStats:
    values: np.ndarray

    @property
    def median(self) -> float | None:
        return float(np.median(self.values)) if self.values.size else None

    @property
    def iqr(self) -> float | None:
        if not self.values.size:
            return None
        q1, q3 = np.percentile(self.values, [25, 75])
        return float(q3 - q1)


def center_duration_errors(
    report: MatchReport, predictions: EventList, truths: EventList
) -> tuple[ErrorStats, ErrorStats]:
    """Relative center offsets and duration errors over all positive-IoU pairs.

    Both are normalized by the truth duration; positive center offsets mean
    the prediction sits later in time than the truth.
    """
    center_offsets = []
    duration_errors = []
    for pred_idx, truth_idx, iou in report.pairs:
        if iou <= 0:
            continue
        pred, truth = predictions[pred_idx], truths[truth_idx]
        center_offsets.append((pred.center - truth.center) / truth.duration)
        duration_errors.append((pred.duration - truth.duration) / truth.duration)
    return ErrorStats(np.asarray(center_offsets)), ErrorStats(np.asarray(duration_errors))


def optimal_tp_count(predictions: EventList, truths: EventList, tau: float) -> int:
    """Exhaustive maximum one-to-one TP count at threshold tau (test oracle).

    Enumerates assignments recursively; only feasible for small instances.
    """
    iou = np.array([[interval_iou(p, t) for t in truths] for p in predictions])
    n_pred, n_truth = len(predictions), len(truths)

    def best_from(pred_idx: int, used: int) -> int:
        if pred_idx == n_pred:
            return 0
        best = best_from(pred_idx + 1, used)  # leave this prediction unmatched
        for truth_idx in range(n_truth):
            if used & (1 << truth_idx) or iou[pred_idx, truth_idx] < tau or iou[pred_idx, truth_idx] <= 0:
                continue
            best = max(best, 1 + best_from(pred_idx + 1, used | (1 << truth_idx)))
        return best

    return best_from(0, 0)
