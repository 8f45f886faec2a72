import logging
import os
from importlib import metadata
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.config.settings import SINE_DEFAULT_HZ, get_settings
from src.models.domain import ActuatorState, SoundKind, SoundSpec
from src.utils.errors import AcousticSensingError

logger = logging.getLogger(__name__)

REQUIRED_PACKAGES = ("numpy", "scipy", "scikit-learn", "pandas", "PyYAML")


def validate_output_root(path: Optional[str] = None) -> Tuple[bool, Optional[str]]:
    """
    Validate that the output root exists (or can be created) and is writable

    Returns:
        Tuple of (is_valid, error_message)
    """
    path = path or get_settings().output_root
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        return False, f"Cannot create output root {path}: {e}"
    if not os.access(path, os.W_OK):
        return False, f"Output root {path} is not writable"
    return True, None


def validate_jobs(jobs: int) -> Tuple[bool, Optional[str]]:
    if jobs < 1:
        return False, f"--jobs must be at least 1, got {jobs}"
    cpus = os.cpu_count() or 1
    if jobs > 4 * cpus:
        logger.warning(f"{jobs} workers requested on a machine with {cpus} CPUs")
    return True, None


def check_dependencies() -> Dict[str, Any]:
    """
    Report installed versions of the numerical stack

    Returns:
        Dictionary with package status
    """
    versions, missing = {}, []
    for package in REQUIRED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            missing.append(package)
    if missing:
        return {"success": False, "error": f"Missing packages: {', '.join(missing)}", "versions": versions}
    return {"success": True, "message": "All numerical packages available", "versions": versions}


def check_simulator() -> Dict[str, Any]:
    """
    Run a short sine through the default actuator and confirm the dominant spectral peak

    Returns:
        Dictionary with self-check status
    """
    from src.services.features import amplitude_spectrum
    from src.services.signal_gen import synthesize
    from src.services.virtual_actuator import default_model, modulate, noise_free

    try:
        spec = SoundSpec(kind=SoundKind.SINE, duration_s=0.1, volume=0.5, sine_freq_hz=SINE_DEFAULT_HZ)
        recording = modulate(noise_free(default_model("A")), ActuatorState(), synthesize(spec), seed=0)
        feature = amplitude_spectrum(recording)
        peak_hz = feature.first_bin_hz + int(np.argmax(feature.amplitudes)) * feature.bin_hz
        if abs(peak_hz - SINE_DEFAULT_HZ) > feature.bin_hz:
            return {"success": False, "error": f"Dominant peak at {peak_hz} Hz, expected {SINE_DEFAULT_HZ} Hz"}
        return {"success": True, "message": "Simulator self-check passed", "peak_hz": peak_hz}
    except AcousticSensingError as e:
        logger.error(f"Simulator self-check failed: {e.message}")
        return {"success": False, "error": f"Simulator self-check failed: {e.message}"}
