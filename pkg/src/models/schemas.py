from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.config import settings as cfg
from src.models.domain import AblationResult, EvalReport, GridSearchResult, SoundKind, SoundSpec

TaskName = Literal[
    "location6",
    "regression30",
    "force3",
    "material3",
    "temperature",
    "simultaneous700",
    "noise",
    "pose",
    "sound-grid",
    "volume",
    "transfer",
    "interference",
    "grid-search",
]
TASKS: List[str] = list(TaskName.__args__)

SensingMode = Literal["active", "passive", "dynamic"]


class SimulatorConfig(BaseModel):
    """Which virtual actuator to simulate, plus optional overrides of its calibration"""

    actuator_id: str = "A"
    model_seed: int = 0
    jitter: bool = True
    path: Optional[str] = None
    noise_free: bool = False
    insulation_db: Optional[float] = None
    mic_noise_rms: Optional[float] = None
    state_jitter: Optional[float] = None
    onset_click_level: Optional[float] = None
    pose_noise_scale: Optional[float] = None

    model_config = ConfigDict(
        json_schema_extra={"example": {"actuator_id": "A", "model_seed": 0, "insulation_db": 40.0}}
    )


class LearnerConfig(BaseModel):
    method: Literal["knn", "svc"] = "knn"
    k: int = cfg.KNN_DEFAULT_K
    metric: Literal["L1", "L2"] = "L2"
    C: float = cfg.SVC_DEFAULT_C
    tolerance: float = cfg.SVC_TOLERANCE
    max_epochs: int = cfg.SVC_MAX_EPOCHS
    standardize: bool = False

    def params(self, regress: bool = False) -> Dict[str, Any]:
        if self.method == "svc":
            return {
                "method": "svc",
                "C": self.C,
                "tolerance": self.tolerance,
                "max_epochs": self.max_epochs,
                "standardize": self.standardize,
            }
        return {"method": "knn", "k": self.k, "metric": self.metric, "mode": "regress" if regress else "classify"}


class ExperimentConfig(BaseModel):
    """One experiment run, usually loaded from a YAML document"""

    task: TaskName
    seed: int
    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)
    stimulus: Optional[SoundSpec] = None
    mode: SensingMode = "active"
    learner: Optional[LearnerConfig] = None
    split_ratio: float = cfg.DEFAULT_SPLIT_RATIO
    repeats: Optional[int] = None
    normalize: bool = False
    output_dir: Optional[str] = None
    jobs: int = 1
    permutation_control: bool = False

    levels_db: List[float] = Field(default_factory=lambda: list(cfg.NOISE_LEVELS_DB))
    fractions: List[float] = Field(default_factory=lambda: list(cfg.VOLUME_FRACTIONS))
    kinds: List[SoundKind] = Field(default_factory=lambda: list(SoundKind))
    durations_s: List[float] = Field(default_factory=lambda: list(cfg.SOUND_DURATIONS_S))
    n_poses: int = cfg.POSE_COUNT
    combo_sizes: List[int] = Field(default_factory=lambda: list(cfg.POSE_COMBO_SIZES))
    actuator_ids: List[str] = Field(default_factory=lambda: list(cfg.TRANSFER_ACTUATORS))
    neighbors: int = cfg.INTERFERENCE_NEIGHBORS
    folds: int = cfg.DEFAULT_FOLDS
    knn_grid: Dict[str, List[Any]] = Field(default_factory=lambda: dict(cfg.KNN_GRID))
    svc_grid: Dict[str, List[Any]] = Field(default_factory=lambda: dict(cfg.SVC_GRID))

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "task": "location6",
                "seed": 7,
                "simulator": {"actuator_id": "A"},
                "stimulus": {"kind": "LogSweep", "duration_s": 1.0},
                "learner": {"method": "knn", "k": 5, "metric": "L2"},
            }
        }
    )


class ExperimentOutcome(BaseModel):
    task: str
    seed: int
    reports: Dict[str, EvalReport] = Field(default_factory=dict)
    ablations: Dict[str, AblationResult] = Field(default_factory=dict)
    searches: Dict[str, GridSearchResult] = Field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        scores: Dict[str, Any] = {}
        for name, report in self.reports.items():
            scores[name] = {"acr": report.acr} if report.task_kind == "classification" else {"rmse": report.rmse}
        for name, ablation in self.ablations.items():
            scores[name] = [{**cell.axes, cell.metric: cell.score} for cell in ablation.cells]
        return scores


# ---------------------------------------------------------------------------
# HTTP payloads
# ---------------------------------------------------------------------------
class SynthesizeResponse(BaseModel):
    success: bool
    message: str
    kind: Optional[str] = None
    n_samples: Optional[int] = None
    sample_rate_hz: Optional[int] = None
    peak: Optional[float] = None
    rms: Optional[float] = None
    error: Optional[str] = None


class SnrRequest(BaseModel):
    """Simulate an active/passive pair and return their SNR"""

    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)
    stimulus: SoundSpec = Field(
        default_factory=lambda: SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=0.5)
    )
    external_level_db: Optional[float] = None
    seed: int = 0

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "simulator": {"actuator_id": "A"},
                "stimulus": {"kind": "WhiteNoise", "duration_s": 0.5, "volume": 1.0, "seed": 3},
                "external_level_db": 70.0,
                "seed": 11,
            }
        }
    )


class SnrResponse(BaseModel):
    success: bool
    message: str
    snr_db: Optional[float] = None
    error: Optional[str] = None


class ExperimentResponse(BaseModel):
    success: bool
    message: str
    outcome: Optional[ExperimentOutcome] = None
    error: Optional[str] = None
