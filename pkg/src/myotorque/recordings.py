"""Reading and writing recordings as CSV files plus JSON manifests.

Layout of a session directory:

    session.json               index: generator spec + take manifest files
    take_v<vel>_t<idx>.json    take manifest: joint, velocity, data and
                               calibration file names with their rates
    take_v<vel>_t<idx>_hi.csv  high-rate channels (time, angle, torque, EMG)
    take_v<vel>_t<idx>_fmg.csv FMG channels at their own rate
    calibration_standing.csv   relaxed FMG channels at the FMG rate
    calibration_angle.csv      initial-pose angle at the high rate

Channels recorded at different rates live in separate files; within one
file every channel shares the time column, which must be strictly
increasing and uniform to within a part per million. Floats are written
with 17 significant digits, so a write/read cycle reproduces every
float64 value bit for bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, InvalidSpec, MissingChannel
from .synthgen import SessionSpec, SyntheticSession
from .timeseries import MultiChannelRecording, TimeSeries, Unit

_FORMAT_VERSION = 1
TIME_COLUMN = "time_s"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _unit_for_label(label: str) -> Unit:
    if label == "angle_deg":
        return Unit.DEGREES
    if label == "torque_nm":
        return Unit.NEWTON_METERS
    if label.startswith("emg_"):
        return Unit.VOLTS
    if label.startswith("fmg_"):
        return Unit.NORMALIZED_FORCE
    return Unit.DIMENSIONLESS


def _column_rank(label: str) -> tuple[int, str]:
    if label == "angle_deg":
        return (0, label)
    if label == "torque_nm":
        return (1, label)
    if label.startswith("emg_"):
        return (2, label)
    if label.startswith("fmg_"):
        return (3, label)
    return (4, label)


def write_recording_csv(recording: MultiChannelRecording, path) -> None:
    """One CSV with a shared time column; all channels must share the grid."""
    labels = sorted(recording.labels(), key=_column_rank)
    if not labels:
        raise DataError("recording has no channels to write")
    first = recording[labels[0]]
    for label in labels[1:]:
        ch = recording[label]
        if (
            ch.sample_rate_hz != first.sample_rate_hz
            or ch.start_time_s != first.start_time_s
            or len(ch) != len(first)
        ):
            raise DataError(
                f"channel {label!r} is not on the same grid as {labels[0]!r}; "
                "write it to a separate file"
            )
    times = first.times
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([TIME_COLUMN] + labels)
        columns = [recording[l].values for l in labels]
        for i in range(len(first)):
            writer.writerow([_fmt(times[i])] + [_fmt(col[i]) for col in columns])


def read_recording_csv(
    path, sample_rate_hz: float | None = None, meta: dict | None = None
) -> MultiChannelRecording:
    """Inverse of :func:`write_recording_csv`.

    The sample rate comes from the caller (normally the manifest); when
    omitted it is inferred from the median time step.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != TIME_COLUMN:
                raise DataError(
                    f"{path}: first column must be {TIME_COLUMN!r}, "
                    f"got {header[0] if header else 'nothing'!r}"
                )
            rows = [[float(cell) for cell in row] for row in reader if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric cell: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    if data.shape[1] != len(header):
        raise DataError(f"{path}: ragged rows")
    times = data[:, 0]
    if len(times) > 1:
        steps = np.diff(times)
        if np.any(steps <= 0):
            raise DataError(f"{path}: time column must be strictly increasing")
        mid = float(np.median(steps))
        if float(np.max(steps) - np.min(steps)) > 1e-6 * mid:
            raise DataError(
                f"{path}: sample interval varies by more than one part per "
                "million; resample before writing"
            )
    if sample_rate_hz is None:
        if len(times) < 2:
            raise DataError(f"{path}: cannot infer sample rate from one row")
        sample_rate_hz = 1.0 / float(np.median(np.diff(times)))
    channels = {
        label: TimeSeries(
            label=label,
            unit=_unit_for_label(label),
            sample_rate_hz=sample_rate_hz,
            start_time_s=float(times[0]),
            values=data[:, j],
        )
        for j, label in enumerate(header[1:], start=1)
    }
    return MultiChannelRecording(channels=channels, meta=dict(meta or {}))


@dataclass
class LoadedTake:
    velocity_deg_s: float
    take_index: int
    recording: MultiChannelRecording


@dataclass
class LoadedSession:
    spec: SessionSpec
    standing: MultiChannelRecording
    initial_angle: TimeSeries
    takes: list[LoadedTake]


def _take_stem(velocity_deg_s: float, take_index: int) -> str:
    return f"take_v{int(round(velocity_deg_s)):03d}_t{take_index}"


def write_session(session: SyntheticSession, out_dir) -> Path:
    """Write a full session (manifests, calibration, every take) to a directory.

    Each take gets its own manifest naming the joint, nominal velocity, and
    the data and calibration files with their sample rates; session.json is
    just an index over those manifests plus the generator spec.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = session.spec

    standing_file = "calibration_standing.csv"
    angle_file = "calibration_angle.csv"
    write_recording_csv(session.standing, out / standing_file)
    write_recording_csv(
        MultiChannelRecording(channels={"angle_deg": session.initial_angle}, meta={}),
        out / angle_file,
    )

    manifest_files = []
    for take in session.takes:
        stem = _take_stem(take.velocity_deg_s, take.take_index)
        hi_labels = [
            l for l in take.recording.labels() if not l.startswith("fmg_")
        ]
        fmg_labels = [l for l in take.recording.labels() if l.startswith("fmg_")]
        hi = MultiChannelRecording(
            channels={l: take.recording[l] for l in hi_labels}, meta={}
        )
        fmg = MultiChannelRecording(
            channels={l: take.recording[l] for l in fmg_labels}, meta={}
        )
        write_recording_csv(hi, out / f"{stem}_hi.csv")
        write_recording_csv(fmg, out / f"{stem}_fmg.csv")
        take_manifest = {
            "format_version": _FORMAT_VERSION,
            "joint": spec.joint.value,
            "velocity_deg_s": take.velocity_deg_s,
            "take_index": take.take_index,
            "high_rate_file": f"{stem}_hi.csv",
            "high_rate_hz": spec.high_rate_hz,
            "fmg_file": f"{stem}_fmg.csv",
            "fmg_rate_hz": spec.fmg_rate_hz,
            "calibration": {
                "standing_file": standing_file,
                "initial_angle_file": angle_file,
            },
        }
        (out / f"{stem}.json").write_text(json.dumps(take_manifest, indent=2) + "\n")
        manifest_files.append(f"{stem}.json")

    index = {
        "format_version": _FORMAT_VERSION,
        "joint": spec.joint.value,
        "spec": spec.to_dict(),
        "takes": manifest_files,
    }
    (out / "session.json").write_text(json.dumps(index, indent=2) + "\n")
    return out


def _read_json(path: Path) -> dict:
    try:
        loaded = json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise InvalidSpec(f"{path}: expected a JSON object")
    version = loaded.get("format_version")
    if version != _FORMAT_VERSION:
        raise InvalidSpec(f"{path}: unsupported format version {version!r}")
    return loaded


def load_take(manifest_path) -> LoadedTake:
    """Read one take manifest and the data files it points at."""
    path = Path(manifest_path)
    manifest = _read_json(path)
    root = path.parent
    try:
        joint = str(manifest["joint"])
        velocity = float(manifest["velocity_deg_s"])
        index = int(manifest["take_index"])
        hi = read_recording_csv(
            root / manifest["high_rate_file"], float(manifest["high_rate_hz"])
        )
        fmg = read_recording_csv(
            root / manifest["fmg_file"], float(manifest["fmg_rate_hz"])
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidSpec(f"{path}: bad take manifest: {exc}") from exc
    overlap = set(hi.labels()) & set(fmg.labels())
    if overlap:
        raise DataError(
            f"{path}: take files repeat channels {sorted(overlap)}; "
            "labels must be unique"
        )
    merged = MultiChannelRecording(
        channels={**hi.channels, **fmg.channels},
        meta={"joint": joint, "velocity_deg_s": velocity, "take_index": index},
    )
    return LoadedTake(
        velocity_deg_s=velocity, take_index=index, recording=merged
    )


def load_session(session_dir) -> LoadedSession:
    """Read a session directory back into memory via its take manifests."""
    root = Path(session_dir)
    index = _read_json(root / "session.json")
    try:
        spec = SessionSpec.from_dict(index["spec"])
        manifest_files = list(index["takes"])
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidSpec(f"{root / 'session.json'}: bad index: {exc}") from exc
    if not manifest_files:
        raise InvalidSpec(f"{root / 'session.json'}: session lists no takes")

    takes = []
    calibration_ref = None
    for name in manifest_files:
        manifest_path = root / name
        manifest = _read_json(manifest_path)
        if manifest.get("joint") != spec.joint.value:
            raise DataError(
                f"{manifest_path}: take records joint {manifest.get('joint')!r} "
                f"but the session is for {spec.joint.value!r}"
            )
        cal = manifest.get("calibration")
        if calibration_ref is None:
            calibration_ref = cal
        elif cal != calibration_ref:
            raise DataError(
                f"{manifest_path}: takes disagree on calibration files"
            )
        takes.append(load_take(manifest_path))

    try:
        standing = read_recording_csv(
            root / calibration_ref["standing_file"],
            spec.fmg_rate_hz,
            {"kind": "standing"},
        )
        angle_rec = read_recording_csv(
            root / calibration_ref["initial_angle_file"], spec.high_rate_hz
        )
    except (KeyError, TypeError) as exc:
        raise InvalidSpec(f"session calibration entry is malformed: {exc}") from exc
    if "angle_deg" not in angle_rec:
        raise MissingChannel(
            f"{calibration_ref['initial_angle_file']} lacks an 'angle_deg' column"
        )
    return LoadedSession(
        spec=spec,
        standing=standing,
        initial_angle=angle_rec["angle_deg"],
        takes=takes,
    )
