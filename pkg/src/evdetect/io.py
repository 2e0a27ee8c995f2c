"""File formats: annotation JSON, raw float32 signals with JSON sidecars, CSV.

Annotation files are a JSON array of {onset_s, duration_s} records (plus an
optional confidence field on predictions). Signal files are raw little-endian
32-bit floats, channel-major, described by a sidecar {fs, channels, length, id}.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import Event, EventList, SignalRecord


def write_annotations(events: EventList, path: str | Path, include_confidence: bool = False) -> None:
    rows = []
    for ev in events:
        row = {"onset_s": ev.start, "duration_s": ev.duration}
        if include_confidence:
            row["confidence"] = ev.confidence
        rows.append(row)
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")


def read_annotations(path: str | Path) -> EventList:
    rows = json.loads(Path(path).read_text())
    if not isinstance(rows, list):
        raise ValueError(f"annotation file {path} must contain a JSON array")
    events = []
    for row in rows:
        onset = float(row["onset_s"])
        duration = float(row["duration_s"])
        confidence = float(row.get("confidence", 1.0))
        events.append(Event(center=onset + duration / 2.0, duration=duration, confidence=confidence))
    return EventList(events)


def write_record(record: SignalRecord, signal_path: str | Path, sidecar_path: str | Path) -> None:
    """Write raw channel-major little-endian float32 plus its JSON sidecar."""
    data = np.ascontiguousarray(record.samples, dtype="<f4")
    Path(signal_path).write_bytes(data.tobytes())
    sidecar = {
        "fs": record.fs,
        "channels": record.channels,
        "length": record.length,
        "id": record.id,
    }
    Path(sidecar_path).write_text(json.dumps(sidecar, indent=2) + "\n")


def read_record(
    signal_path: str | Path,
    sidecar_path: str | Path,
    annotations: EventList | None = None,
) -> SignalRecord:
    sidecar = json.loads(Path(sidecar_path).read_text())
    channels = int(sidecar["channels"])
    length = int(sidecar["length"])
    raw = Path(signal_path).read_bytes()
    expected = channels * length * 4
    if len(raw) != expected:
        raise ValueError(f"{signal_path}: expected {expected} bytes, found {len(raw)}")
    samples = np.frombuffer(raw, dtype="<f4").reshape(channels, length)
    return SignalRecord(
        samples=samples,
        fs=float(sidecar["fs"]),
        annotations=annotations if annotations is not None else EventList(),
        id=str(sidecar.get("id", "")),
    )


def read_csv_record(path: str | Path, fs: float, record_id: str = "") -> SignalRecord:
    """Read a signal from CSV with a header row and one column per channel."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: CSV has a header but no samples")
    samples = np.asarray(rows, dtype=np.float32).T
    return SignalRecord(samples=samples, fs=fs, id=record_id or Path(path).stem)


def save_dataset(records: list[SignalRecord], out_dir: str | Path, extra_manifest: dict | None = None) -> dict:
    """Write records + annotations into a directory and return the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for record in records:
        signal_name = f"{record.id}.f32"
        sidecar_name = f"{record.id}.json"
        ann_name = f"{record.id}.events.json"
        write_record(record, out / signal_name, out / sidecar_name)
        write_annotations(record.annotations, out / ann_name)
        entries.append(
            {
                "id": record.id,
                "signal": signal_name,
                "sidecar": sidecar_name,
                "annotations": ann_name,
            }
        )
    manifest = {"records": entries}
    if extra_manifest:
        manifest.update(extra_manifest)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_dataset(data_dir: str | Path) -> list[SignalRecord]:
    """Load every record listed in a dataset directory's manifest."""
    data = Path(data_dir)
    manifest_path = data / "manifest.json"
    if manifest_path.exists():
        entries = json.loads(manifest_path.read_text())["records"]
    else:
        entries = [
            {"id": p.stem, "signal": p.name, "sidecar": f"{p.stem}.json", "annotations": f"{p.stem}.events.json"}
            for p in sorted(data.glob("*.f32"))
        ]
    records = []
    for entry in entries:
        ann_path = data / entry["annotations"]
        annotations = read_annotations(ann_path) if ann_path.exists() else EventList()
        records.append(read_record(data / entry["signal"], data / entry["sidecar"], annotations))
    return records
