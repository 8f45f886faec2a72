"""Persistence for recordings, feature sets, models, actuator parameters and reports.

Layout of a dataset directory::

    manifest.jsonl        header record, then one record per recording
    audio/rec_00000.wav   32-bit IEEE-float mono RIFF/WAVE
"""
import json
import logging
import os
import warnings
from pathlib import Path
from typing import Any, BinaryIO, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field
from scipy.io import wavfile

from src.config.settings import SAMPLE_RATE_HZ
from src.models.domain import (
    AblationResult,
    ActuatorModel,
    ActuatorState,
    EvalReport,
    ExternalNoise,
    FeatureSet,
    ModelKind,
    Recording,
    SampleLabels,
    SensorModel,
    SvcDiagnostics,
    Waveform,
    stimulus_from_dict,
)
from src.utils.errors import CorruptAudio, IoFailure, MissingAudio, SchemaMismatch, UnsupportedRate

logger = logging.getLogger("dataset_io")

SCHEMA_VERSION = 1
MODEL_FORMAT_VERSION = 1
FEATURES_FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"
AUDIO_DIR = "audio"

PathLike = Union[str, os.PathLike]


class ManifestEntry(BaseModel):
    path: str
    sample_rate_hz: int
    n_samples: int
    actuator_id: str
    state: ActuatorState
    stimulus: Optional[Dict[str, Any]] = None
    noise_realization_seed: int
    volume_fraction: float
    environment: Optional[ExternalNoise] = None
    neighbors: int = 0


class Manifest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    defaults: Dict[str, Any] = Field(default_factory=dict)
    entries: List[ManifestEntry] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Audio
# ---------------------------------------------------------------------------
def write_wav(path: Union[PathLike, BinaryIO], waveform: Waveform) -> None:
    """Write ``waveform`` as 32-bit float WAV to a path or an open binary file"""
    if waveform.sample_rate_hz <= 0:
        raise UnsupportedRate(f"sample rate must be positive, got {waveform.sample_rate_hz}")
    try:
        wavfile.write(path if hasattr(path, "write") else str(path), waveform.sample_rate_hz, waveform.samples.astype(np.float32))
    except (OSError, ValueError) as e:
        raise IoFailure(f"could not write {path}: {e}") from e


def read_wav(path: PathLike, expected_samples: Optional[int] = None) -> Waveform:
    path = Path(path)
    if not path.exists():
        raise MissingAudio(str(path))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            rate, data = wavfile.read(str(path))
    except (ValueError, OSError, EOFError, wavfile.WavFileWarning) as e:
        raise CorruptAudio(str(path), f"corrupt audio file {path}: {e}") from e
    if data.ndim != 1 or data.dtype != np.float32:
        raise CorruptAudio(str(path), f"{path} is not mono 32-bit float audio")
    if expected_samples is not None and data.size != expected_samples:
        raise CorruptAudio(str(path), f"{path} holds {data.size} samples, manifest says {expected_samples}")
    if data.size == 0:
        raise CorruptAudio(str(path), f"{path} holds no samples")
    try:
        return Waveform(samples=data.astype(np.float64), sample_rate_hz=int(rate))
    except ValueError as e:
        raise CorruptAudio(str(path), f"{path}: {e}") from e


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------
def write_dataset(
    recordings: Sequence[Recording],
    directory: PathLike,
    actuators: Optional[Sequence[ActuatorModel]] = None,
) -> Manifest:
    """Write one WAV per recording plus manifest.jsonl; returns the manifest"""
    root = Path(directory)
    try:
        (root / AUDIO_DIR).mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create dataset directory {root}: {e}") from e

    defaults: Dict[str, Any] = {"sample_rate_hz": SAMPLE_RATE_HZ, "audio_format": "wav-float32-mono"}
    if actuators:
        defaults["actuators"] = {m.actuator_id: m.model_dump(mode="json") for m in actuators}
    manifest = Manifest(defaults=defaults)

    for index, recording in enumerate(recordings):
        relative = f"{AUDIO_DIR}/rec_{index:05d}.wav"
        write_wav(root / relative, recording.waveform)
        manifest.entries.append(
            ManifestEntry(
                path=relative,
                sample_rate_hz=recording.waveform.sample_rate_hz,
                n_samples=len(recording.waveform),
                actuator_id=recording.actuator_id,
                state=recording.state,
                stimulus=recording.stimulus.model_dump(mode="json") if recording.stimulus is not None else None,
                noise_realization_seed=recording.noise_realization_seed,
                volume_fraction=recording.volume_fraction,
                environment=recording.environment,
                neighbors=recording.neighbors,
            )
        )

    lines = [json.dumps({"record": "header", "schema_version": manifest.schema_version, "defaults": defaults})]
    lines += [json.dumps({"record": "recording", **entry.model_dump(mode="json")}) for entry in manifest.entries]
    try:
        (root / MANIFEST_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write manifest in {root}: {e}") from e

    logger.info(f"Wrote {len(manifest.entries)} recordings to {root}")
    return manifest


def read_manifest(directory: PathLike) -> Manifest:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise IoFailure(f"no {MANIFEST_NAME} in {directory}")
    try:
        records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaMismatch(f"unreadable manifest {path}: {e}") from e

    if not records or records[0].get("record") != "header":
        raise SchemaMismatch(f"manifest {path} has no header record")
    header = records[0]
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"manifest schema version {header.get('schema_version')!r} is not supported (expected {SCHEMA_VERSION})"
        )
    try:
        entries = [ManifestEntry.model_validate({k: v for k, v in r.items() if k != "record"}) for r in records[1:]]
    except ValueError as e:
        raise SchemaMismatch(f"invalid manifest entry in {path}: {e}") from e
    paths = [e.path for e in entries]
    if len(set(paths)) != len(paths):
        raise SchemaMismatch(f"manifest {path} references the same audio file twice")
    return Manifest(schema_version=header["schema_version"], defaults=header.get("defaults", {}), entries=entries)


def read_dataset(directory: PathLike) -> List[Recording]:
    """Rebuild recordings in manifest order"""
    root = Path(directory)
    manifest = read_manifest(root)
    recordings = []
    for entry in manifest.entries:
        audio_path = root / entry.path
        if not audio_path.exists():
            raise MissingAudio(entry.path)
        waveform = read_wav(audio_path, expected_samples=entry.n_samples)
        recordings.append(
            Recording(
                waveform=waveform,
                state=entry.state,
                actuator_id=entry.actuator_id,
                stimulus=stimulus_from_dict(entry.stimulus) if entry.stimulus is not None else None,
                noise_realization_seed=entry.noise_realization_seed,
                environment=entry.environment,
                neighbors=entry.neighbors,
            )
        )
    logger.info(f"Read {len(recordings)} recordings from {root}")
    return recordings


# ---------------------------------------------------------------------------
# Actuator parameters
# ---------------------------------------------------------------------------
def save_actuator(model: ActuatorModel, path: PathLike) -> None:
    try:
        Path(path).write_text(yaml.safe_dump(model.model_dump(mode="json"), sort_keys=False), encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def load_actuator(path: PathLike) -> ActuatorModel:
    try:
        document = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as e:
        raise IoFailure(f"cannot read actuator parameters {path}: {e}") from e
    try:
        return ActuatorModel.model_validate(document)
    except ValueError as e:
        raise SchemaMismatch(f"invalid actuator parameters in {path}: {e}") from e


# ---------------------------------------------------------------------------
# Feature sets
# ---------------------------------------------------------------------------
def write_features(data: FeatureSet, path: PathLike) -> None:
    header = {
        "format_version": FEATURES_FORMAT_VERSION,
        "bin_hz": data.bin_hz,
        "first_bin_hz": data.first_bin_hz,
        "sample_rate_hz": data.sample_rate_hz,
        "labels": [labels.model_dump(mode="json") for labels in data.labels],
    }
    try:
        with open(path, "wb") as f:
            np.savez(f, header=np.array(json.dumps(header)), matrix=data.matrix)
    except OSError as e:
        raise IoFailure(f"cannot write features to {path}: {e}") from e


def read_features(path: PathLike) -> FeatureSet:
    try:
        with np.load(path, allow_pickle=False) as npz:
            header = json.loads(str(npz["header"]))
            matrix = npz["matrix"]
    except (OSError, ValueError, KeyError) as e:
        raise IoFailure(f"cannot read features from {path}: {e}") from e
    if header.get("format_version") != FEATURES_FORMAT_VERSION:
        raise SchemaMismatch(f"feature file format {header.get('format_version')!r} is not supported")
    return FeatureSet(
        matrix=matrix,
        labels=[SampleLabels.model_validate(labels) for labels in header["labels"]],
        bin_hz=header["bin_hz"],
        first_bin_hz=header["first_bin_hz"],
        sample_rate_hz=header["sample_rate_hz"],
    )


# ---------------------------------------------------------------------------
# Sensor models
# ---------------------------------------------------------------------------
_MODEL_ARRAYS = ("train_x", "weights", "biases", "scaler_mean", "scaler_scale")


def save_model(model: SensorModel, path: PathLike) -> None:
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind.value,
        "target": model.target,
        "feature_dim": model.feature_dim,
        "hyperparams": model.hyperparams,
        "train_y": model.train_y,
        "classes": model.classes,
        "diagnostics": model.diagnostics.model_dump(mode="json") if model.diagnostics else None,
        "report": model.report.model_dump(mode="json") if model.report else None,
    }
    arrays = {name: getattr(model, name) for name in _MODEL_ARRAYS if getattr(model, name) is not None}
    try:
        with open(path, "wb") as f:
            np.savez(f, header=np.array(json.dumps(header)), **arrays)
    except OSError as e:
        raise IoFailure(f"cannot write model to {path}: {e}") from e
    logger.info(f"Saved {model.kind.value} model to {path}")


def load_model(path: PathLike) -> SensorModel:
    try:
        with np.load(path, allow_pickle=False) as npz:
            header = json.loads(str(npz["header"]))
            arrays = {name: npz[name] for name in _MODEL_ARRAYS if name in npz.files}
    except (OSError, ValueError, KeyError) as e:
        raise IoFailure(f"cannot read model from {path}: {e}") from e
    if header.get("format_version") != MODEL_FORMAT_VERSION:
        raise SchemaMismatch(f"model format version {header.get('format_version')!r} is not supported")
    return SensorModel(
        kind=ModelKind(header["kind"]),
        target=header["target"],
        feature_dim=header["feature_dim"],
        hyperparams=header["hyperparams"],
        train_y=header["train_y"],
        classes=header["classes"],
        diagnostics=SvcDiagnostics.model_validate(header["diagnostics"]) if header["diagnostics"] else None,
        report=EvalReport.model_validate(header["report"]) if header["report"] else None,
        **arrays,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------
def report_table(report: EvalReport) -> pd.DataFrame:
    if report.task_kind == "regression":
        return pd.DataFrame([{"target": report.target, "n_test": report.n_test, "rmse": report.rmse}])
    rows = []
    for i, name in enumerate(report.classes):
        row = {"class": name, "n_test": report.per_class_counts.get(name, 0), "recall": report.confusion[i][i]}
        row.update({f"pred_{other}": report.confusion[i][j] for j, other in enumerate(report.classes)})
        rows.append(row)
    return pd.DataFrame(rows)


def save_report(report: EvalReport, directory: PathLike, name: str) -> Dict[str, str]:
    """Write <name>.json and a <name>.txt table; returns the written paths"""
    root = Path(directory)
    json_path, text_path = root / f"{name}.json", root / f"{name}.txt"
    table = report_table(report)
    summary = f"ACR: {report.acr:.4f}" if report.task_kind == "classification" else f"RMSE: {report.rmse:.4f}"
    try:
        root.mkdir(parents=True, exist_ok=True)
        json_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        text_path.write_text(
            f"target: {report.target}\n{summary}\nn_test: {report.n_test}\n\n"
            + table.to_string(index=False, float_format=lambda v: f"{v:.4f}")
            + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise IoFailure(f"cannot write report {name} in {root}: {e}") from e
    return {"json": str(json_path), "text": str(text_path)}


def ablation_frame(result: AblationResult) -> pd.DataFrame:
    rows = []
    for cell in result.cells:
        row = {axis: cell.axes.get(axis) for axis in result.axes}
        row["metric"] = cell.metric
        row["score"] = cell.score
        row.update(cell.extra)
        rows.append(row)
    return pd.DataFrame(rows, columns=None if rows else list(result.axes) + ["metric", "score"])


def save_ablation(result: AblationResult, directory: PathLike, name: Optional[str] = None) -> Dict[str, str]:
    """Write <name>.json and a plot-ready <name>.csv"""
    root = Path(directory)
    name = name or result.name
    json_path, csv_path = root / f"{name}.json", root / f"{name}.csv"
    try:
        root.mkdir(parents=True, exist_ok=True)
        json_path.write_text(result.model_dump_json(indent=2), encoding="utf-8")
        ablation_frame(result).to_csv(csv_path, index=False, float_format="%.6f")
    except OSError as e:
        raise IoFailure(f"cannot write ablation {name} in {root}: {e}") from e
    return {"json": str(json_path), "csv": str(csv_path)}
