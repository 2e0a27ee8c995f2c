"""End-to-end comparison protocol: train both model flavors on one generated
dataset, sweep operating points on a held-out test set, and score every
scheme at the requested IoU thresholds."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .codec import DecodeConfig, decode
from .postproc import SCHEMES, epoch_pipeline
from .scoring import MatchReport, OperatingPoint, PRCurve, default_thresholds, match, prf
from .simulate import SimConfig, generate
from .training import TrainConfig, train_epoch_baseline, train_event, predict_outputs
from .unet import build


@dataclass
class ComparisonResult:
    # scheme name -> {tau -> PRCurve}; schemes: event, epoch-none, epoch-median, epoch-morph
    curves: dict[str, dict[float, PRCurve]]
    traces: dict[str, list[dict]]
    models: dict[str, object] = field(default_factory=dict)

    def best(self, scheme: str, tau: float) -> OperatingPoint:
        return self.curves[scheme][tau].best_f1()


EPOCH_SCHEME_NAMES = {f"epoch-{s}" if s != "morphology" else "epoch-morph": s for s in SCHEMES}
ALL_SCHEMES = ("event",) + tuple(EPOCH_SCHEME_NAMES)


def event_decode_fn(decode_cfg: DecodeConfig):
    def fn(output: dict, theta: float):
        cfg = replace(decode_cfg, confidence_threshold=theta)
        return decode(output["center"], output["duration"], output["grid"], cfg)

    return fn


def epoch_decode_fn(scheme: str, median_width_s: float = 1.0, element_s: float = 1.0):
    def fn(output: dict, theta: float):
        return epoch_pipeline(
            output["probabilities"], theta, scheme, output["grid"],
            median_width_s=median_width_s, element_s=element_s,
        )

    return fn


def sweep_multi_tau(
    outputs,
    truths,
    decode_fn,
    taus: tuple[float, ...],
    thresholds: np.ndarray,
) -> dict[float, PRCurve]:
    """Like scoring.sweep but decodes once per threshold and scores every tau."""
    grid_values = np.unique(np.asarray(thresholds, dtype=float))[::-1]
    points: dict[float, list[OperatingPoint]] = {tau: [] for tau in taus}
    for theta in grid_values:
        decoded = [decode_fn(output, float(theta)) for output in outputs]
        for tau in taus:
            pooled = MatchReport()
            for events, truth in zip(decoded, truths):
                pooled.merge(match(events, truth, tau))
            precision, recall, f1 = prf(pooled)
            points[tau].append(OperatingPoint(float(theta), precision, recall, f1))
    return {tau: PRCurve(points=points[tau]) for tau in taus}


def run_comparison(
    sim_cfg: SimConfig,
    train_cfg: TrainConfig,
    decode_cfg: DecodeConfig,
    taus: tuple[float, ...] = (0.25, 0.75),
    test_segments: int = 200,
    test_seed_offset: int = 1000,
    median_width_s: float = 1.0,
    element_s: float = 1.0,
    thresholds: np.ndarray | None = None,
    keep_models: bool = False,
) -> ComparisonResult:
    """Generate train/test data and compare all four schemes.

    The test set uses a disjoint seed so no waveform is shared with training.
    """
    train_data = generate(sim_cfg)
    test_cfg = replace(sim_cfg, seed=sim_cfg.seed + test_seed_offset, n_segments=test_segments)
    test_data = generate(test_cfg)
    truths = [record.annotations for record in test_data.records]

    if thresholds is None:
        thresholds = default_thresholds()

    curves: dict[str, dict[float, PRCurve]] = {}
    traces: dict[str, list[dict]] = {}
    models: dict[str, object] = {}

    event_model = build(replace(train_cfg.backbone, head="event"), seed=train_cfg.seed)
    result = train_event(event_model, train_data.records, train_cfg)
    traces["event"] = result.trace
    outputs = predict_outputs(event_model, test_data.records)
    curves["event"] = sweep_multi_tau(outputs, truths, event_decode_fn(decode_cfg), taus, thresholds)
    if keep_models:
        models["event"] = event_model

    epoch_model = build(replace(train_cfg.backbone, head="epoch"), seed=train_cfg.seed)
    result = train_epoch_baseline(epoch_model, train_data.records, train_cfg)
    outputs = predict_outputs(epoch_model, test_data.records)
    for name, scheme in EPOCH_SCHEME_NAMES.items():
        traces[name] = result.trace
        decode_fn = epoch_decode_fn(scheme, median_width_s, element_s)
        curves[name] = sweep_multi_tau(outputs, truths, decode_fn, taus, thresholds)
    if keep_models:
        models["epoch"] = epoch_model

    return ComparisonResult(curves=curves, traces=traces, models=models)
