"""Domain value types shared by the sensing pipeline.

All types are immutable pydantic models. Array-carrying types hold read-only
numpy arrays so a value can be shared between worker threads.
"""
import itertools
from enum import Enum
from typing import Any, Dict, Iterator, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config.settings import (
    BAND_NOISE_DEFAULT_HZ,
    NO_CONTACT,
    NO_MATERIAL,
    SAMPLE_RATE_HZ,
    SINE_DEFAULT_HZ,
    SWEEP_DEFAULT_HZ,
)

Label = Union[str, float, int]


def _frozen_array(value: Any, ndim: Optional[int] = None) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def label_key(label: Label):
    """Sort key giving numeric labels numeric order and strings lexicographic order"""
    if isinstance(label, (int, float, np.integer, np.floating)) and not isinstance(label, bool):
        return (0, float(label), "")
    return (1, 0.0, str(label))


def label_str(label: Label) -> str:
    if isinstance(label, np.generic):
        label = label.item()
    return str(label)


# ---------------------------------------------------------------------------
# Stimuli
# ---------------------------------------------------------------------------
class SoundKind(str, Enum):
    LOG_SWEEP = "LogSweep"
    WHITE_NOISE = "WhiteNoise"
    BAND_NOISE = "BandNoise"
    SINE = "Sine"


class SoundSpec(BaseModel):
    """Parametric description of an active stimulus"""

    model_config = ConfigDict(frozen=True)

    kind: SoundKind
    duration_s: float
    sample_rate_hz: int = SAMPLE_RATE_HZ
    volume: float = 1.0
    seed: int = 0
    f_start_hz: float = SWEEP_DEFAULT_HZ[0]
    f_end_hz: float = SWEEP_DEFAULT_HZ[1]
    band_low_hz: float = BAND_NOISE_DEFAULT_HZ[0]
    band_high_hz: float = BAND_NOISE_DEFAULT_HZ[1]
    sine_freq_hz: float = SINE_DEFAULT_HZ

    @property
    def is_noise(self) -> bool:
        return self.kind in (SoundKind.WHITE_NOISE, SoundKind.BAND_NOISE)


class Impulse(BaseModel):
    """Unit-impulse excitation standing in for a tap transient"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["Impulse"] = "Impulse"
    duration_s: float
    sample_rate_hz: int = SAMPLE_RATE_HZ
    volume: float = 1.0


class Passive(BaseModel):
    """Marker for recordings taken without any stimulus"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["Passive"] = "Passive"
    duration_s: float
    sample_rate_hz: int = SAMPLE_RATE_HZ


Stimulus = Union[SoundSpec, Impulse, Passive]


def stimulus_from_dict(data: Dict[str, Any]) -> Stimulus:
    kind = data.get("kind")
    if kind == "Passive":
        return Passive.model_validate(data)
    if kind == "Impulse":
        return Impulse.model_validate(data)
    return SoundSpec.model_validate(data)


class Waveform(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ
    origin: Optional[Union[SoundSpec, Impulse]] = None

    @field_validator("samples", mode="before")
    @classmethod
    def _freeze_samples(cls, value):
        arr = _frozen_array(value, ndim=1)
        if arr.size < 1:
            raise ValueError("waveform must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("waveform contains non-finite samples")
        if np.max(np.abs(arr)) > 1.0 + 1e-9:
            raise ValueError("waveform samples must lie in [-1, 1]")
        return arr

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples)))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples ** 2)))


# ---------------------------------------------------------------------------
# Virtual actuator
# ---------------------------------------------------------------------------
class ActuatorState(BaseModel):
    model_config = ConfigDict(frozen=True)

    contact_location: Union[str, float] = NO_CONTACT
    contact_force_n: float = 0.0
    inflation_kpa: float = 0.0
    temperature_c: float = 20.0
    material: str = NO_MATERIAL
    pose_id: int = 0

    @property
    def is_continuous(self) -> bool:
        return not isinstance(self.contact_location, str)

    @property
    def has_contact(self) -> bool:
        return self.is_continuous or self.contact_location != NO_CONTACT


class ResonanceMode(BaseModel):
    model_config = ConfigDict(frozen=True)

    center_hz: float
    q_factor: float
    gain: float


class PoseProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    detune_pct: List[float]
    hum_hz: List[float]
    hum_amplitudes: List[float]


class ActuatorModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    actuator_id: str
    sample_rate_hz: int = SAMPLE_RATE_HZ
    resonances: List[ResonanceMode]
    location_shift_hz: Dict[str, List[float]]
    position_shift_hz_per_mm: List[float]
    force_q_coeff: float
    inflation_shift_coeff: float
    temperature_coeff: float
    material_gain_tilt: Dict[str, float]
    material_q_scale: Dict[str, float]
    insulation_db: float
    mic_noise_rms: float
    state_jitter: float
    onset_click_level: float = 0.0
    onset_click_decay_s: float = 5.0e-4
    pose_profiles: Dict[int, PoseProfile] = Field(default_factory=dict)
    pose_noise_scale: float = 1.0
    finger_length_mm: float = 100.0

    @property
    def n_modes(self) -> int:
        return len(self.resonances)


class ExternalNoise(BaseModel):
    """Descriptor of an environment sound reaching the actuator hull"""

    model_config = ConfigDict(frozen=True)

    kind: str = "white"
    level_db: float
    seed: int = 0


class Recording(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    waveform: Waveform
    state: ActuatorState
    actuator_id: str
    stimulus: Optional[Stimulus] = None
    noise_realization_seed: int = 0
    environment: Optional[ExternalNoise] = None
    neighbors: int = 0

    @property
    def volume_fraction(self) -> float:
        if isinstance(self.stimulus, Passive) or self.stimulus is None:
            return 0.0
        return float(self.stimulus.volume)


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------
TARGET_FIELDS = ("location", "force", "inflation", "temperature", "material", "pose_id", "actuator_id")
NUMERIC_TARGETS = ("force", "inflation", "temperature", "pose_id")


class SampleLabels(BaseModel):
    model_config = ConfigDict(frozen=True)

    location: Union[str, float] = NO_CONTACT
    force: float = 0.0
    inflation: float = 0.0
    temperature: float = 20.0
    material: str = NO_MATERIAL
    pose_id: int = 0
    actuator_id: str = ""

    @classmethod
    def from_recording(cls, recording: Recording) -> "SampleLabels":
        state = recording.state
        return cls(
            location=state.contact_location,
            force=state.contact_force_n,
            inflation=state.inflation_kpa,
            temperature=state.temperature_c,
            material=state.material,
            pose_id=state.pose_id,
            actuator_id=recording.actuator_id,
        )

    def get(self, target: str) -> Label:
        return getattr(self, target)


class SpectrumFeature(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    amplitudes: np.ndarray
    bin_hz: float
    first_bin_hz: float
    sample_rate_hz: int

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _freeze_amplitudes(cls, value):
        return _frozen_array(value, ndim=1)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)


class FeatureSet(BaseModel):
    """Feature matrix (one row per sample) plus per-sample labels"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    labels: List[SampleLabels]
    bin_hz: float
    first_bin_hz: float
    sample_rate_hz: int

    @field_validator("matrix", mode="before")
    @classmethod
    def _freeze_matrix(cls, value):
        return _frozen_array(value, ndim=2)

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.matrix.shape[0] != len(self.labels):
            raise ValueError("feature rows and labels differ in length")
        return self

    def __len__(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def features(self) -> List[SpectrumFeature]:
        return [
            SpectrumFeature(
                amplitudes=row,
                bin_hz=self.bin_hz,
                first_bin_hz=self.first_bin_hz,
                sample_rate_hz=self.sample_rate_hz,
            )
            for row in self.matrix
        ]

    def subset(self, indices: Sequence[int]) -> "FeatureSet":
        idx = np.asarray(indices, dtype=np.int64)
        return self.model_copy(update={"matrix": _frozen_array(self.matrix[idx], 2), "labels": [self.labels[i] for i in idx]})

    def with_labels(self, labels: List[SampleLabels]) -> "FeatureSet":
        if len(labels) != len(self):
            raise ValueError("label count does not match feature rows")
        return self.model_copy(update={"labels": list(labels)})

    def targets(self, target: str) -> List[Label]:
        return [labels.get(target) for labels in self.labels]


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------
class ModelKind(str, Enum):
    KNN_CLASSIFIER = "KnnClassifier"
    KNN_REGRESSOR = "KnnRegressor"
    LINEAR_SVC = "LinearSvc"


class ClassDiagnostics(BaseModel):
    label: str
    converged: bool
    epochs: int
    duality_gap: float
    loss_trace: List[float]


class SvcDiagnostics(BaseModel):
    per_class: List[ClassDiagnostics]

    @property
    def converged(self) -> bool:
        return all(c.converged for c in self.per_class)

    @property
    def epochs(self) -> int:
        return max((c.epochs for c in self.per_class), default=0)


class EvalReport(BaseModel):
    target: str
    task_kind: Literal["classification", "regression"]
    classes: List[str] = Field(default_factory=list)
    confusion: List[List[float]] = Field(default_factory=list)
    acr: Optional[float] = None
    rmse: Optional[float] = None
    n_test: int
    per_class_counts: Dict[str, int] = Field(default_factory=dict)
    truths: List[Label] = Field(default_factory=list)
    predictions: List[Label] = Field(default_factory=list)

    @property
    def score(self) -> float:
        return float(self.acr if self.task_kind == "classification" else self.rmse)


class SensorModel(BaseModel):
    """A trained predictor; KNN variants keep their training set, SVC keeps weights"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: ModelKind
    target: str
    feature_dim: int
    hyperparams: Dict[str, Any] = Field(default_factory=dict)
    train_x: Optional[np.ndarray] = None
    train_y: Optional[List[Label]] = None
    classes: Optional[List[Label]] = None
    weights: Optional[np.ndarray] = None
    biases: Optional[np.ndarray] = None
    scaler_mean: Optional[np.ndarray] = None
    scaler_scale: Optional[np.ndarray] = None
    diagnostics: Optional[SvcDiagnostics] = None
    report: Optional[EvalReport] = None

    @field_validator("train_x", "weights", "biases", "scaler_mean", "scaler_scale", mode="before")
    @classmethod
    def _freeze_arrays(cls, value):
        if value is None:
            return None
        return _frozen_array(value)

    @property
    def is_regressor(self) -> bool:
        return self.kind == ModelKind.KNN_REGRESSOR


class ParamGrid(BaseModel):
    method: Literal["knn", "svc"]
    params: Dict[str, List[Any]]

    @field_validator("params")
    @classmethod
    def _non_empty(cls, value):
        if not value:
            raise ValueError("grid needs at least one parameter")
        for name, options in value.items():
            if not options:
                raise ValueError(f"grid parameter '{name}' has no values")
        return value

    def points(self) -> Iterator[Dict[str, Any]]:
        names = list(self.params)
        for combo in itertools.product(*(self.params[n] for n in names)):
            yield dict(zip(names, combo))


class GridCell(BaseModel):
    params: Dict[str, Any]
    mean_score: float
    fold_scores: List[float]


class GridSearchResult(BaseModel):
    best: Dict[str, Any]
    best_score: float
    table: List[GridCell]


# ---------------------------------------------------------------------------
# Ablations
# ---------------------------------------------------------------------------
class AblationCell(BaseModel):
    axes: Dict[str, Any]
    score: float
    metric: str = "acr"
    extra: Dict[str, float] = Field(default_factory=dict)


class AblationResult(BaseModel):
    name: str
    axes: List[str]
    cells: List[AblationCell] = Field(default_factory=list)

    def scores(self) -> List[float]:
        return [cell.score for cell in self.cells]

    def lookup(self, **axes) -> AblationCell:
        for cell in self.cells:
            if all(cell.axes.get(k) == v for k, v in axes.items()):
                return cell
        raise KeyError(f"no ablation cell for {axes}")
