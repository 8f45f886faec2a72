from functools import lru_cache
from typing import Dict, List

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()

# API configuration
API_PREFIX = "/api/v1"
PROJECT_NAME = "Acoustic Sensing Toolkit"


class Settings(BaseSettings):
    """Runtime settings read from the environment (prefix ACOUSTIC_)"""

    model_config = SettingsConfigDict(env_prefix="ACOUSTIC_", env_file=".env", extra="ignore")

    output_root: str = "runs"
    log_dir: str = "logs"
    log_level: str = "INFO"
    log_to_file: bool = True
    jobs: int = 1
    debug: bool = False


@lru_cache()
def get_settings() -> Settings:
    return Settings()


# ---------------------------------------------------------------------------
# Audio
# ---------------------------------------------------------------------------
SAMPLE_RATE_HZ = 48000
NOISE_REFERENCE_RMS = 3 ** -0.5

SWEEP_DEFAULT_HZ = (20.0, 20000.0)
BAND_NOISE_DEFAULT_HZ = (2000.0, 4000.0)
SINE_DEFAULT_HZ = 2580.0
BANDPASS_ORDER = 2  # butterworth prototype order, the band-pass is twice this

# ---------------------------------------------------------------------------
# Virtual actuator calibration (frozen)
# ---------------------------------------------------------------------------
RESONANCE_CENTERS_HZ: List[float] = [210.0, 480.0, 950.0, 1600.0, 2580.0, 3900.0, 6100.0, 8800.0]
RESONANCE_Q: List[float] = [6.0, 8.0, 10.0, 12.0, 16.0, 14.0, 12.0, 10.0]
RESONANCE_GAINS: List[float] = [0.5, 0.6, 0.7, 0.8, 1.0, 0.75, 0.6, 0.45]

CONTACT_LOCATIONS: List[str] = ["base", "middle", "tip", "left", "right", "top"]
NO_CONTACT = "none"
MATERIALS: List[str] = ["wood", "silicone", "aluminum"]
NO_MATERIAL = "none"

# Relative center shift (percent) per contact location and mode.
LOCATION_SHIFT_PCT: Dict[str, List[float]] = {
    "base":   [+2.0, -3.0, +4.0, -2.5, -3.0, +2.0, -4.0, +3.0],
    "middle": [-3.0, +2.5, -2.0, +4.0, +2.0, -3.5, +3.0, -2.0],
    "tip":    [+4.0, +3.5, -3.5, -2.0, +4.5, +3.0, -2.0, -3.5],
    "left":   [-2.5, -4.0, +3.0, +3.0, -6.0, -2.0, +4.5, +2.5],
    "right":  [+3.5, -2.0, -4.5, +2.0, +8.0, -4.0, -3.0, +4.0],
    "top":    [-4.0, +4.5, +2.5, -4.0, -1.0, +4.5, +2.5, -4.5],
}
POSITION_SHIFT_PER_MM = 3.0e-3
FINGER_LENGTH_MM = 100.0

FORCE_Q_COEFF = 0.15          # relative Q reduction per newton
INFLATION_SHIFT_COEFF = 2.0e-3  # relative center shift per kPa
TEMPERATURE_COEFF = 1.8e-3      # relative center shift per degC above 20 degC
REFERENCE_TEMPERATURE_C = 20.0

MATERIAL_TILT_PIVOT_HZ = 2580.0
MATERIAL_GAIN_TILT_DB: Dict[str, float] = {"wood": 0.0, "silicone": -0.3, "aluminum": 0.3}
MATERIAL_Q_SCALE: Dict[str, float] = {"wood": -0.03, "silicone": 0.0, "aluminum": 0.0}

INSULATION_DB = 40.0
MIC_NOISE_RMS = 1.0e-3
STATE_JITTER = 5.0e-3
ONSET_CLICK_LEVEL = 0.1       # onset click RMS at switch-on, relative to the stimulus peak
ONSET_CLICK_DECAY_S = 5.0e-4
ONSET_CLICK_SPAN_DECAYS = 10
EXTERNAL_FULL_SCALE_DB = 80.0
QUIET_ROOM_DB = 30.0

# Manufacturing spread between actuators: a shared part plus a per-mode part,
# together within +-5 % on centers and +-20 % on gains.
ACTUATOR_CENTER_SCALE_JITTER = 0.035
ACTUATOR_CENTER_MODE_JITTER = 0.015
ACTUATOR_GAIN_LEVEL_JITTER = 0.15
ACTUATOR_GAIN_MODE_JITTER = 0.05

# Robot poses 1..6: orientation pairs (near, far).
POSE_ORIENTATIONS: List[str] = ["top", "left", "right"]
POSE_ORIENTATION_DETUNE_PCT: Dict[str, List[float]] = {
    "top":   [+3.0, -4.0, +3.5, -3.0, +4.0, -3.5, +3.0, -4.0],
    "left":  [-4.0, +3.0, -3.0, +4.0, -3.5, +3.0, -4.5, +3.5],
    "right": [+4.5, +3.5, -4.0, -3.5, -4.5, -3.0, +4.0, +3.0],
}
POSE_FAR_DETUNE_PCT: List[float] = [+0.3, -0.2, +0.25, -0.3, +0.2, -0.25, +0.3, -0.2]
POSE_HUM_BASE_HZ: List[float] = [47.0, 53.0, 61.0, 67.0, 71.0, 79.0]
POSE_HUM_AMPLITUDES: List[float] = [2.0e-3, 1.0e-3, 0.5e-3]

# ---------------------------------------------------------------------------
# Experiment defaults
# ---------------------------------------------------------------------------
DEFAULT_SPLIT_RATIO = 0.6
DEFAULT_REPEATS = 25
DEFAULT_CONTACT_FORCE_N = 1.0
DEFAULT_FOLDS = 5
PERMUTATION_ROUNDS = 10

KNN_DEFAULT_K = 5
SVC_DEFAULT_C = 100.0
SVC_TOLERANCE = 1.0e-3
SVC_MAX_EPOCHS = 1000

REGRESSION_POSITIONS = 30
REGRESSION_SPACING_MM = 3.0
REGRESSION_REPEATS = 5
REGRESSION_K = 3  # training repeats per position under the 3:2 split

FORCE_LEVELS_N: List[float] = [0.5, 1.5, 3.0]
FORCE_SIDES: List[str] = ["left", "right", "top"]
SIMULTANEOUS_FORCES_N: List[float] = [1.0, 3.0]
SIMULTANEOUS_INFLATIONS_KPA: List[float] = [0.0, 30.0]
TEMPERATURE_RANGE_C = (20.0, 95.0)
TEMPERATURE_SAMPLES = 250
TEMPERATURE_TRAIN_RATIO = 2.0 / 3.0

NOISE_LEVELS_DB: List[float] = [50.0, 70.0, 90.0]
VOLUME_FRACTIONS: List[float] = [1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.0]
SOUND_DURATIONS_S: List[float] = [0.005, 0.02, 0.05, 0.5, 1.0]
POSE_COUNT = 6
POSE_COMBO_SIZES: List[int] = [1, 2, 3, 4]
TRANSFER_ACTUATORS: List[str] = ["A", "B", "C", "D", "E"]
TRANSFER_CLASSES: List[str] = ["tip", "middle", "base", "none"]
INTERFERENCE_NEIGHBORS = 3

KNN_GRID = {"k": [1, 2, 3, 5, 10], "metric": ["L1", "L2"]}
SVC_GRID = {"C": [10.0 ** e for e in range(-2, 11)]}
GRID_SEARCH_SWEEP_S = 0.1
