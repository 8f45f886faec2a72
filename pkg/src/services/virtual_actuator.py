"""Parametric stand-in for a pneumatic actuator with an embedded speaker and microphone.

The actuator's air chamber is modelled as a bank of second-order resonators.
Contact, force, inflation, temperature, material and robot pose move or damp
those resonances; the microphone adds a noise floor, leaked environment sound
and robot hum. The model is a test oracle, not a physical simulation.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import signal

from src.config import settings as cfg
from src.models.domain import (
    ActuatorModel,
    ActuatorState,
    ExternalNoise,
    Passive,
    PoseProfile,
    Recording,
    ResonanceMode,
    SoundKind,
    SoundSpec,
    Stimulus,
    Waveform,
)
from src.services.signal_gen import render, sample_count, synthesize
from src.utils.errors import InvalidExternal, InvalidState, RateMismatch, UnstableFilter, UsageError
from src.utils.seeding import derive_seed, make_rng

logger = logging.getLogger("virtual_actuator")

ExternalSound = Tuple[Waveform, float]


class NeighborSound(BaseModel):
    """A co-speaking neighbour finger: its stimulus leaves through its own resonator bank"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    model: ActuatorModel
    waveform: Waveform


def _pose_profiles() -> dict:
    profiles = {}
    for pose_id in range(1, cfg.POSE_COUNT + 1):
        orientation = cfg.POSE_ORIENTATIONS[(pose_id - 1) // 2]
        detune = np.array(cfg.POSE_ORIENTATION_DETUNE_PCT[orientation])
        if (pose_id - 1) % 2 == 1:
            detune = detune + np.array(cfg.POSE_FAR_DETUNE_PCT)
        base = cfg.POSE_HUM_BASE_HZ[pose_id - 1]
        profiles[pose_id] = PoseProfile(
            detune_pct=detune.tolist(),
            hum_hz=[base * (i + 1) for i in range(len(cfg.POSE_HUM_AMPLITUDES))],
            hum_amplitudes=list(cfg.POSE_HUM_AMPLITUDES),
        )
    return profiles


def default_model(actuator_id: str = "A", seed: int = 0, jitter: bool = True) -> ActuatorModel:
    """Build the calibrated actuator model.

    Distinct ids get distinct manufacturing jitter (centers +-5 %, gains +-20 %).
    Most of it is shared by all modes: one scale on the centers, one level on
    the gains. The same (id, seed) always yields the same model.
    """
    centers = np.array(cfg.RESONANCE_CENTERS_HZ)
    gains = np.array(cfg.RESONANCE_GAINS)
    if jitter:
        rng = make_rng(seed, "actuator", actuator_id)
        scale = rng.uniform(-cfg.ACTUATOR_CENTER_SCALE_JITTER, cfg.ACTUATOR_CENTER_SCALE_JITTER)
        spread = rng.uniform(-cfg.ACTUATOR_CENTER_MODE_JITTER, cfg.ACTUATOR_CENTER_MODE_JITTER, centers.size)
        centers = centers * (1 + scale + spread)
        level = rng.uniform(-cfg.ACTUATOR_GAIN_LEVEL_JITTER, cfg.ACTUATOR_GAIN_LEVEL_JITTER)
        spread = rng.uniform(-cfg.ACTUATOR_GAIN_MODE_JITTER, cfg.ACTUATOR_GAIN_MODE_JITTER, gains.size)
        gains = gains * (1 + level + spread)

    resonances = [
        ResonanceMode(center_hz=float(c), q_factor=float(q), gain=float(g))
        for c, q, g in zip(centers, cfg.RESONANCE_Q, gains)
    ]
    location_shift = {
        loc: (centers * np.array(pct) / 100.0).tolist() for loc, pct in cfg.LOCATION_SHIFT_PCT.items()
    }
    return ActuatorModel(
        actuator_id=actuator_id,
        sample_rate_hz=cfg.SAMPLE_RATE_HZ,
        resonances=resonances,
        location_shift_hz=location_shift,
        position_shift_hz_per_mm=(centers * cfg.POSITION_SHIFT_PER_MM).tolist(),
        force_q_coeff=cfg.FORCE_Q_COEFF,
        inflation_shift_coeff=cfg.INFLATION_SHIFT_COEFF,
        temperature_coeff=cfg.TEMPERATURE_COEFF,
        material_gain_tilt=dict(cfg.MATERIAL_GAIN_TILT_DB),
        material_q_scale=dict(cfg.MATERIAL_Q_SCALE),
        insulation_db=cfg.INSULATION_DB,
        mic_noise_rms=cfg.MIC_NOISE_RMS,
        state_jitter=cfg.STATE_JITTER,
        onset_click_level=cfg.ONSET_CLICK_LEVEL,
        onset_click_decay_s=cfg.ONSET_CLICK_DECAY_S,
        pose_profiles=_pose_profiles(),
        pose_noise_scale=1.0,
        finger_length_mm=cfg.FINGER_LENGTH_MM,
    )


def noise_free(model: ActuatorModel) -> ActuatorModel:
    """Same actuator with mic noise, placement jitter, onset click and pose effects removed"""
    return model.model_copy(
        update={"mic_noise_rms": 0.0, "state_jitter": 0.0, "onset_click_level": 0.0, "pose_noise_scale": 0.0}
    )


def check_state(model: ActuatorModel, state: ActuatorState) -> None:
    if state.contact_force_n < 0:
        raise InvalidState(f"contact force must be >= 0 N, got {state.contact_force_n}")
    if state.inflation_kpa < 0:
        raise InvalidState(f"inflation must be >= 0 kPa, got {state.inflation_kpa}")
    if state.is_continuous:
        if not 0 <= float(state.contact_location) <= model.finger_length_mm:
            raise InvalidState(
                f"contact position {state.contact_location} mm outside [0, {model.finger_length_mm}]"
            )
    elif state.contact_location == cfg.NO_CONTACT:
        if state.contact_force_n != 0 or state.material != cfg.NO_MATERIAL:
            raise InvalidState("a state without contact must have zero force and no material")
    elif state.contact_location not in model.location_shift_hz:
        raise InvalidState(f"unknown contact location '{state.contact_location}'")
    if state.material != cfg.NO_MATERIAL and state.material not in model.material_gain_tilt:
        raise InvalidState(f"unknown material '{state.material}'")
    if state.pose_id < 0 or (state.pose_id > 0 and state.pose_id not in model.pose_profiles):
        raise InvalidState(f"unknown robot pose {state.pose_id}")


def shifted_resonances(
    model: ActuatorModel, state: ActuatorState, jitter: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center frequencies, Q factors and gains of the resonator bank in ``state``"""
    nominal = np.array([m.center_hz for m in model.resonances])
    q = np.array([m.q_factor for m in model.resonances])
    gains = np.array([m.gain for m in model.resonances])

    scale = (
        1
        + model.inflation_shift_coeff * state.inflation_kpa
        + model.temperature_coeff * (state.temperature_c - cfg.REFERENCE_TEMPERATURE_C)
    )
    centers = nominal * scale
    if state.is_continuous:
        centers = centers + np.array(model.position_shift_hz_per_mm) * float(state.contact_location)
    elif state.has_contact:
        centers = centers + np.array(model.location_shift_hz[state.contact_location])

    if state.pose_id > 0 and model.pose_noise_scale > 0:
        detune = np.array(model.pose_profiles[state.pose_id].detune_pct) / 100.0
        centers = centers * (1 + model.pose_noise_scale * detune)
    if jitter is not None:
        centers = centers * (1 + jitter)

    q = q * (1 - model.force_q_coeff * state.contact_force_n)
    if state.has_contact and state.contact_force_n > 0 and state.material in model.material_gain_tilt:
        q = q * (1 + model.material_q_scale.get(state.material, 0.0))
        tilt_db = model.material_gain_tilt[state.material] * np.log10(nominal / cfg.MATERIAL_TILT_PIVOT_HZ)
        gains = gains * 10 ** (tilt_db / 20)

    nyquist = model.sample_rate_hz / 2.0
    if np.any(q <= 0):
        raise UnstableFilter(f"non-positive Q factor in state {state.model_dump()}")
    if np.any(centers <= 0) or np.any(centers >= nyquist):
        raise UnstableFilter(f"resonance center left (0, {nyquist}) Hz in state {state.model_dump()}")
    return centers, q, gains


def band_pass_coefficients(f0: float, q: float, fs: float) -> Tuple[np.ndarray, np.ndarray]:
    """Biquad band-pass with constant 0 dB peak gain"""
    w0 = 2 * math.pi * f0 / fs
    alpha = math.sin(w0) / (2 * q)
    a0 = 1 + alpha
    b = np.array([alpha, 0.0, -alpha]) / a0
    a = np.array([1.0, -2 * math.cos(w0) / a0, (1 - alpha) / a0])
    return b, a


def resonator_bank(x: np.ndarray, centers: np.ndarray, q: np.ndarray, gains: np.ndarray, fs: float) -> np.ndarray:
    out = np.zeros_like(x, dtype=np.float64)
    for f0, qk, gk in zip(centers, q, gains):
        b, a = band_pass_coefficients(float(f0), float(qk), fs)
        out += gk * signal.lfilter(b, a, x)
    return out


def modulate(
    model: ActuatorModel,
    state: ActuatorState,
    stimulus: Union[Waveform, Passive],
    external: Optional[ExternalSound] = None,
    seed: int = 0,
    neighbors: Sequence[NeighborSound] = (),
    environment: Optional[ExternalNoise] = None,
) -> Recording:
    """Record what the actuator's microphone hears while playing ``stimulus`` in ``state``"""
    rate = model.sample_rate_hz
    if stimulus.sample_rate_hz != rate:
        raise RateMismatch(f"stimulus rate {stimulus.sample_rate_hz} Hz != actuator rate {rate} Hz")
    check_state(model, state)

    active = isinstance(stimulus, Waveform)
    n = len(stimulus) if active else sample_count(stimulus.duration_s, rate)
    t = np.arange(n) / rate

    rng = np.random.Generator(np.random.PCG64(seed))
    jitter = rng.normal(0.0, 1.0, model.n_modes) * model.state_jitter
    hum_phases = rng.uniform(0.0, 2 * np.pi, len(cfg.POSE_HUM_AMPLITUDES))
    mic_noise = rng.normal(0.0, 1.0, n) * model.mic_noise_rms

    out = np.zeros(n)
    if active:
        centers, q, gains = shifted_resonances(model, state, jitter if model.state_jitter > 0 else None)
        out += resonator_bank(stimulus.samples, centers, q, gains, rate)

    insulation = 10 ** (-model.insulation_db / 20)
    if external is not None:
        ext_wave, level_db = external
        if ext_wave.sample_rate_hz != rate:
            raise RateMismatch(f"external sound rate {ext_wave.sample_rate_hz} Hz != actuator rate {rate} Hz")
        if len(ext_wave) < n:
            raise InvalidExternal(f"external sound has {len(ext_wave)} samples, stimulus needs {n}")
        ext = ext_wave.samples[:n]
        ext_rms = float(np.sqrt(np.mean(ext ** 2)))
        if ext_rms > 0:
            amplitude = 10 ** ((level_db - cfg.EXTERNAL_FULL_SCALE_DB) / 20)
            out += ext / ext_rms * amplitude * insulation
        if environment is None:
            environment = ExternalNoise(kind="custom", level_db=level_db)

    for neighbor in neighbors:
        if neighbor.waveform.sample_rate_hz != rate:
            raise RateMismatch(f"neighbour stimulus rate {neighbor.waveform.sample_rate_hz} Hz != {rate} Hz")
        if len(neighbor.waveform) < n:
            raise InvalidExternal(f"neighbour stimulus has {len(neighbor.waveform)} samples, need {n}")
        n_centers, n_q, n_gains = shifted_resonances(neighbor.model, ActuatorState())
        out += insulation * resonator_bank(neighbor.waveform.samples[:n], n_centers, n_q, n_gains, rate)

    if state.pose_id > 0 and model.pose_noise_scale > 0:
        profile = model.pose_profiles[state.pose_id]
        for freq, amp, phase in zip(profile.hum_hz, profile.hum_amplitudes, hum_phases):
            out += model.pose_noise_scale * amp * np.sin(2 * np.pi * freq * t + phase)

    out += mic_noise
    if active and model.onset_click_level > 0:
        # speaker switch-on transient, heard directly by the microphone
        span = min(n, math.ceil(cfg.ONSET_CLICK_SPAN_DECAYS * model.onset_click_decay_s * rate))
        burst = rng.normal(0.0, 1.0, span) * np.exp(-t[:span] / model.onset_click_decay_s)
        out[:span] += model.onset_click_level * stimulus.peak * burst
    clipped = int(np.count_nonzero(np.abs(out) > 1.0))
    if clipped:
        logger.warning(f"Microphone clipped {clipped} of {n} samples")
    out = np.clip(out, -1.0, 1.0).astype(np.float32).astype(np.float64)

    if active:
        description: Optional[Stimulus] = stimulus.origin
    else:
        description = stimulus
    return Recording(
        waveform=Waveform(samples=out, sample_rate_hz=rate),
        state=state,
        actuator_id=model.actuator_id,
        stimulus=description,
        noise_realization_seed=seed,
        environment=environment,
        neighbors=len(neighbors),
    )


def recording_seed(seed: int, state_index: int, repeat_index: int) -> int:
    return derive_seed(seed, "recording", state_index, repeat_index)


def external_noise(level_db: float, n_samples: int, seed: int, sample_rate_hz: int = cfg.SAMPLE_RATE_HZ):
    """White environment noise at ``level_db`` as modulate's external input"""
    spec = SoundSpec(
        kind=SoundKind.WHITE_NOISE,
        duration_s=n_samples / sample_rate_hz,
        sample_rate_hz=sample_rate_hz,
        seed=seed,
    )
    return (synthesize(spec), level_db), ExternalNoise(kind="white", level_db=level_db, seed=seed)


def sample_dataset(
    model: ActuatorModel,
    states: Sequence[ActuatorState],
    stimulus_spec: Stimulus,
    repeats: int,
    seed: int,
    external_level_db: Optional[float] = None,
    neighbors: Sequence[NeighborSound] = (),
    jobs: int = 1,
) -> List[Recording]:
    """Record every state ``repeats`` times in a seed-shuffled order.

    The noise seed of recording (i, r) depends only on (seed, i, r), so any
    subset can be regenerated on its own.
    """
    if repeats < 1:
        raise UsageError(f"repeats must be >= 1, got {repeats}")
    stimulus = render(stimulus_spec)
    n = len(stimulus) if isinstance(stimulus, Waveform) else sample_count(stimulus.duration_s, stimulus.sample_rate_hz)

    tasks = [(i, r) for i in range(len(states)) for r in range(repeats)]
    order = make_rng(seed, "order").permutation(len(tasks))
    ordered = [tasks[k] for k in order]

    def record(task: Tuple[int, int]) -> Recording:
        i, r = task
        rec_seed = recording_seed(seed, i, r)
        external, environment = None, None
        if external_level_db is not None:
            external, environment = external_noise(
                external_level_db, n, derive_seed(seed, "external", i, r), model.sample_rate_hz
            )
        return modulate(model, states[i], stimulus, external, rec_seed, neighbors, environment)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            recordings = list(executor.map(record, ordered))
    else:
        recordings = [record(task) for task in ordered]

    logger.info(
        f"Sampled {len(recordings)} recordings ({len(states)} states x {repeats} repeats) "
        f"from actuator {model.actuator_id}"
    )
    return recordings
