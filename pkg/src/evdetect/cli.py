"""Command-line entry point: simulate, train, predict, evaluate, sweep.

Every subcommand reads one JSON config file with per-module sections (flags
override file values), writes its outputs into --out, and drops a
run_manifest.json recording the command, resolved config, seed, versions,
and timestamps. Failures exit non-zero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io
from .codec import DecodeConfig
from .core import EventList
from .experiment import ALL_SCHEMES, epoch_decode_fn, event_decode_fn, run_comparison
from .losses import LossConfig
from .scoring import (
    MatchReport,
    PRCurve,
    center_duration_errors,
    default_thresholds,
    match,
    precision_at_recall,
    prf,
    sweep as sweep_curve,
)
from .simulate import SimConfig, generate
from .training import TrainConfig, predict_outputs, train_epoch_baseline, train_event, write_trace_csv
from .unet import BackboneConfig, build, config_from_dict
from .autodiff import load_checkpoint, save_checkpoint


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _sim_config(cfg: dict, seed: int | None) -> SimConfig:
    section = dict(cfg.get("sim", {}))
    for key in ("n_events_choices", "dur_range_s", "snr_db_range", "distractor_dur_range_s"):
        if key in section:
            section[key] = tuple(section[key])
    if seed is not None:
        section["seed"] = seed
    return SimConfig(**section)


def _backbone_config(cfg: dict, head: str) -> BackboneConfig:
    section = dict(cfg.get("backbone", {"preset": "tiny"}))
    section["head"] = head
    return config_from_dict(section)


def _train_config(cfg: dict, backbone: BackboneConfig, seed: int | None) -> TrainConfig:
    section = dict(cfg.get("train", {}))
    loss = LossConfig(**cfg.get("loss", {}))
    if seed is not None:
        section["seed"] = seed
    return TrainConfig(**section, loss=loss, backbone=backbone)


def _decode_config(cfg: dict, train_cfg: TrainConfig | None = None) -> DecodeConfig:
    section = dict(cfg.get("decode", {}))
    if train_cfg is not None:
        section.setdefault("max_duration_s", train_cfg.max_duration_s)
    return DecodeConfig(**section)


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_manifest(out_dir: Path, command: list[str], resolved: dict, seed, started: float) -> None:
    manifest = {
        "command": command,
        "config": _jsonable(resolved),
        "seed": seed,
        "versions": {
            "evdetect": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    (out_dir / "run_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def cmd_simulate(args, command: list[str]) -> None:
    started = time.time()
    cfg = _load_config(args.config)
    sim_cfg = _sim_config(cfg, args.seed)
    dataset = generate(sim_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.save_dataset(dataset.records, out, extra_manifest={"config": _jsonable(sim_cfg), "events": dataset.meta})
    write_manifest(out, command, {"sim": sim_cfg}, sim_cfg.seed, started)
    print(f"wrote {len(dataset.records)} records to {out}")


def _scheme_head(scheme: str) -> str:
    return "event" if scheme == "event" else "epoch"


def cmd_train(args, command: list[str]) -> None:
    started = time.time()
    cfg = _load_config(args.config)
    backbone = _backbone_config(cfg, _scheme_head(args.scheme))
    train_cfg = _train_config(cfg, backbone, args.seed)
    records = io.load_dataset(args.data)
    model = build(backbone, seed=train_cfg.seed)
    if backbone.head == "event":
        result = train_event(model, records, train_cfg)
    else:
        result = train_epoch_baseline(model, records, train_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"backbone": _jsonable(backbone), "train": _jsonable(train_cfg)}
    save_checkpoint(out / "checkpoint.ckpt", model.state_arrays(), meta=meta)
    write_trace_csv(result.trace, out / "loss_trace.csv")
    (out / "resolved_config.json").write_text(json.dumps(_jsonable(train_cfg), indent=2) + "\n")
    write_manifest(out, command, {"train": train_cfg}, train_cfg.seed, started)
    print(f"trained {backbone.head} model for {train_cfg.epochs} epochs; final loss {result.trace[-1]['loss']:.6f}")


def _rebuild_model(checkpoint_path: str):
    state, meta = load_checkpoint(checkpoint_path)
    if "backbone" not in meta:
        raise ValueError(f"{checkpoint_path} has no backbone description in its header")
    backbone = config_from_dict(meta["backbone"])
    model = build(backbone)
    model.load_state(state)
    return model, meta


def cmd_predict(args, command: list[str]) -> None:
    started = time.time()
    cfg = _load_config(args.config)
    model, meta = _rebuild_model(args.checkpoint)
    records = io.load_dataset(args.data)
    decode_cfg = _decode_config(cfg)
    post = cfg.get("postproc", {})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    outputs = predict_outputs(model, records)
    scheme = args.scheme
    for record, output in zip(records, outputs):
        if model.config.head == "event":
            events = event_decode_fn(decode_cfg)(output, decode_cfg.confidence_threshold)
        else:
            events = epoch_decode_fn(
                scheme.removeprefix("epoch-").replace("morph", "morphology"),
                post.get("median_width_s", 1.0),
                post.get("element_s", 1.0),
            )(output, args.theta)
        io.write_annotations(events, out / f"{record.id}.events.json", include_confidence=True)
    write_manifest(out, command, {"decode": decode_cfg, "scheme": scheme}, None, started)
    print(f"wrote predictions for {len(records)} records to {out}")


def _annotation_pairs(pred: Path, truth: Path) -> list[tuple[EventList, EventList]]:
    if pred.is_file() and truth.is_file():
        return [(io.read_annotations(pred), io.read_annotations(truth))]
    if pred.is_dir() and truth.is_dir():
        pairs = []
        for pred_file in sorted(pred.glob("*.events.json")):
            truth_file = truth / pred_file.name
            if truth_file.exists():
                pairs.append((io.read_annotations(pred_file), io.read_annotations(truth_file)))
        if not pairs:
            raise ValueError(f"no matching *.events.json names between {pred} and {truth}")
        return pairs
    raise ValueError("--pred and --truth must both be files or both be directories")


def cmd_evaluate(args, command: list[str]) -> None:
    started = time.time()
    tau = args.iou_threshold
    pairs = _annotation_pairs(Path(args.pred), Path(args.truth))

    pooled_tp = pooled_fp = pooled_fn = pooled_sub = 0
    center_offsets: list[float] = []
    duration_errors: list[float] = []
    for predictions, truths in pairs:
        report = match(predictions, truths, tau)
        pooled_tp += report.tp
        pooled_fp += report.fp
        pooled_fn += report.fn
        pooled_sub += report.sub_threshold_overlap
        offsets, errors = center_duration_errors(report, predictions, truths)
        center_offsets.extend(offsets.values.tolist())
        duration_errors.extend(errors.values.tolist())

    pooled = MatchReport(tp=pooled_tp, fp=pooled_fp, fn=pooled_fn, sub_threshold_overlap=pooled_sub)
    precision, recall, f1 = prf(pooled)

    def confidence_filter(events: EventList, theta: float) -> EventList:
        return EventList([e for e in events if e.confidence > theta])

    curve = sweep_curve(
        [p for p, _ in pairs], [t for _, t in pairs], confidence_filter, tau, default_thresholds()
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def stats(values: list[float]) -> dict:
        arr = np.asarray(values)
        return {
            "values": values,
            "median": float(np.median(arr)) if arr.size else None,
            "iqr": float(np.subtract(*np.percentile(arr, [75, 25]))) if arr.size else None,
        }

    metrics = {
        "iou_threshold": tau,
        "tp": pooled_tp,
        "fp": pooled_fp,
        "fn": pooled_fn,
        "sub_threshold_overlap": pooled_sub,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "center_offsets": stats(center_offsets),
        "duration_errors": stats(duration_errors),
    }
    if args.recall_levels:
        levels = [float(v) for v in args.recall_levels.split(",")]
        metrics["precision_at_recall"] = {
            str(level): value for level, value in precision_at_recall(curve, levels).items()
        }
    (out / "metrics.json").write_text(json.dumps(_jsonable(metrics), indent=2) + "\n")
    _write_curve_csv(curve, out / "pr_curve.csv")
    write_manifest(out, command, {"iou_threshold": tau}, None, started)
    print(f"precision {precision:.4f}, recall {recall:.4f}, F1 {f1:.4f} at IoU {tau}")


def _write_curve_csv(curve: PRCurve, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall", "f1"])
        for p in curve.points:
            writer.writerow([repr(p.threshold), repr(p.precision), repr(p.recall), repr(p.f1)])


def cmd_sweep(args, command: list[str]) -> None:
    started = time.time()
    cfg = _load_config(args.config)
    sim_cfg = _sim_config(cfg, args.seed)
    backbone = _backbone_config(cfg, "event")
    train_cfg = _train_config(cfg, backbone, args.seed)
    decode_cfg = _decode_config(cfg, train_cfg)
    sweep_section = cfg.get("sweep", {})
    post = cfg.get("postproc", {})
    taus = tuple(sweep_section.get("iou_thresholds", [0.25, 0.75]))
    if args.iou_threshold is not None:
        taus = (args.iou_threshold,)

    result = run_comparison(
        sim_cfg,
        train_cfg,
        decode_cfg,
        taus=taus,
        test_segments=sweep_section.get("test_segments", 200),
        test_seed_offset=sweep_section.get("test_seed_offset", 1000),
        median_width_s=post.get("median_width_s", 1.0),
        element_s=post.get("element_s", 1.0),
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iou_threshold", "scheme", "best_threshold", "precision", "recall", "best_f1"])
        for tau in taus:
            for scheme in ALL_SCHEMES:
                point = result.best(scheme, tau)
                writer.writerow(
                    [repr(float(tau)), scheme, repr(point.threshold), repr(point.precision),
                     repr(point.recall), repr(point.f1)]
                )
    for tau in taus:
        for scheme in ALL_SCHEMES:
            _write_curve_csv(result.curves[scheme][tau], out / f"pr_curve_{scheme}_iou{tau}.csv")
    for scheme, trace in result.traces.items():
        write_trace_csv(trace, out / f"loss_trace_{scheme}.csv")
    write_manifest(
        out, command,
        {"sim": sim_cfg, "train": train_cfg, "decode": decode_cfg, "iou_thresholds": list(taus)},
        sim_cfg.seed, started,
    )
    for tau in taus:
        summary = ", ".join(f"{s}={result.best(s, tau).f1:.3f}" for s in ALL_SCHEMES)
        print(f"best F1 at IoU {tau}: {summary}")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evdetect", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("train", help="train a model on a dataset directory")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--scheme", default="event", choices=list(ALL_SCHEMES))
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="decode events from a trained checkpoint")
    p.add_argument("--config")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme", default="epoch-none", choices=[s for s in ALL_SCHEMES if s != "event"],
                   help="post-processing for epoch-head checkpoints")
    p.add_argument("--theta", type=float, default=0.5, help="epoch threshold")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("evaluate", help="score prediction files against truth files")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.add_argument("--recall-levels", help="comma-separated recall levels for precision lookup")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("sweep", help="train both approaches and compare best F1")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--iou-threshold", type=float)
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args, ["evdetect"] + argv)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        error = {"error": type(exc).__name__, "message": str(exc), "command": ["evdetect"] + argv}
        print(json.dumps(error), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
