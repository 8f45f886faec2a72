import logging
import math
from typing import Union

import numpy as np
from scipy import signal

from src.config.settings import BANDPASS_ORDER, NOISE_REFERENCE_RMS, SAMPLE_RATE_HZ
from src.models.domain import Impulse, Passive, SoundKind, SoundSpec, Stimulus, Waveform
from src.utils.errors import FullScaleExceeded, InvalidBand, InvalidFraction, InvalidSpec

logger = logging.getLogger("signal_gen")


def sample_count(duration_s: float, sample_rate_hz: int) -> int:
    """round(duration x rate), rounding halves up"""
    return int(math.floor(duration_s * sample_rate_hz + 0.5))


def validate_spec(spec: SoundSpec) -> None:
    """Raise InvalidSpec naming the first field that violates the SoundSpec invariants"""
    if spec.sample_rate_hz <= 0:
        raise InvalidSpec("sample_rate_hz", "must be positive")
    nyquist = spec.sample_rate_hz / 2.0
    if not spec.duration_s > 0 or not math.isfinite(spec.duration_s):
        raise InvalidSpec("duration_s", "must be a positive number of seconds")
    if sample_count(spec.duration_s, spec.sample_rate_hz) < 1:
        raise InvalidSpec("duration_s", "shorter than one sample")
    if not 0 < spec.volume <= 1:
        raise InvalidSpec("volume", "must lie in (0, 1]")
    if spec.seed < 0 or spec.seed >= 2 ** 64:
        raise InvalidSpec("seed", "must be a 64-bit unsigned integer")

    if spec.kind == SoundKind.LOG_SWEEP:
        if not 0 < spec.f_start_hz:
            raise InvalidSpec("f_start_hz", "must be positive")
        if not spec.f_start_hz < spec.f_end_hz:
            raise InvalidSpec("f_end_hz", "must exceed f_start_hz")
        if spec.f_end_hz > nyquist:
            raise InvalidSpec("f_end_hz", f"must not exceed Nyquist ({nyquist} Hz)")
    elif spec.kind == SoundKind.BAND_NOISE:
        if not 0 < spec.band_low_hz:
            raise InvalidSpec("band_low_hz", "must be positive")
        if not spec.band_low_hz < spec.band_high_hz:
            raise InvalidSpec("band_high_hz", "must exceed band_low_hz")
        if spec.band_high_hz > nyquist:
            raise InvalidSpec("band_high_hz", f"must not exceed Nyquist ({nyquist} Hz)")
    elif spec.kind == SoundKind.SINE:
        if not 0 < spec.sine_freq_hz <= nyquist:
            raise InvalidSpec("sine_freq_hz", f"must lie in (0, {nyquist}] Hz")


def _white_noise(n: int, volume: float, seed: int) -> np.ndarray:
    """Uniform white noise at RMS exactly volume/sqrt(3).

    The n samples are a seeded shuffle of the stratified levels (2i+1)/n - 1,
    rescaled to the reference RMS; the peak stays below ``volume``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    levels = (2 * rng.permutation(n) + 1) / n - 1.0
    rms = math.sqrt(float(np.mean(levels ** 2)))
    if rms == 0:
        return np.zeros(n)
    return volume * levels * (NOISE_REFERENCE_RMS / rms)


def synthesize(spec: SoundSpec) -> Waveform:
    """Synthesize the stimulus described by ``spec``.

    Identical specs produce bit-identical waveforms. Noise kinds draw from a
    PCG64 generator seeded with ``spec.seed``.
    """
    validate_spec(spec)
    rate = spec.sample_rate_hz
    n = sample_count(spec.duration_s, rate)
    t = np.arange(n) / rate

    if spec.kind == SoundKind.SINE:
        samples = spec.volume * np.sin(2 * np.pi * spec.sine_freq_hz * t)
    elif spec.kind == SoundKind.LOG_SWEEP:
        t_log = spec.duration_s / math.log(spec.f_end_hz / spec.f_start_hz)
        phase = 2 * np.pi * spec.f_start_hz * t_log * np.expm1(t / t_log)
        samples = spec.volume * np.sin(phase)
    elif spec.kind == SoundKind.WHITE_NOISE:
        samples = _white_noise(n, spec.volume, spec.seed)
    else:
        white = _white_noise(n, spec.volume, spec.seed)
        samples = _bandpass(white, spec.band_low_hz, spec.band_high_hz, rate)
        clipped = np.abs(samples) > 1.0
        if np.any(clipped):
            logger.warning(f"Clamped {int(clipped.sum())} of {n} band-noise samples")
            samples = np.clip(samples, -1.0, 1.0)

    return Waveform(samples=samples, sample_rate_hz=rate, origin=spec)


def _bandpass(samples: np.ndarray, low_hz: float, high_hz: float, rate: int) -> np.ndarray:
    nyquist = rate / 2.0
    if high_hz >= nyquist:
        sos = signal.butter(2 * BANDPASS_ORDER, low_hz, btype="highpass", output="sos", fs=rate)
    else:
        sos = signal.butter(BANDPASS_ORDER, [low_hz, high_hz], btype="bandpass", output="sos", fs=rate)
    padlen = min(3 * (2 * sos.shape[0] + 1), len(samples) - 1)
    return signal.sosfiltfilt(sos, samples, padlen=padlen)


def filter_bandpass(w: Waveform, low_hz: float, high_hz: float) -> Waveform:
    """Zero-phase Butterworth band-pass (second-order sections, forward and backward).

    The filter is linear; an output that would leave [-1, 1] raises
    FullScaleExceeded instead of being clipped.
    """
    nyquist = w.sample_rate_hz / 2.0
    if not 0 < low_hz < high_hz <= nyquist:
        raise InvalidBand(f"band [{low_hz}, {high_hz}] Hz must satisfy 0 < low < high <= {nyquist}")

    filtered = _bandpass(w.samples, low_hz, high_hz, w.sample_rate_hz)
    peak = float(np.max(np.abs(filtered))) if filtered.size else 0.0
    if peak > 1.0:
        raise FullScaleExceeded(
            f"band-passed output peaks at {peak:.4f}, above full scale; lower the input level"
        )
    return Waveform(samples=filtered, sample_rate_hz=w.sample_rate_hz)


def scale_volume(w: Waveform, fraction: float) -> Waveform:
    if not 0 < fraction <= 1:
        raise InvalidFraction(f"volume fraction must lie in (0, 1], got {fraction}")
    origin = w.origin
    if origin is not None:
        origin = origin.model_copy(update={"volume": origin.volume * fraction})
    return Waveform(samples=w.samples * fraction, sample_rate_hz=w.sample_rate_hz, origin=origin)


def impulse(duration_s: float, sample_rate_hz: int = SAMPLE_RATE_HZ, volume: float = 1.0) -> Waveform:
    """Unit impulse at t=0 followed by silence"""
    if not 0 < volume <= 1:
        raise InvalidSpec("volume", "must lie in (0, 1]")
    n = sample_count(duration_s, sample_rate_hz)
    if n < 1:
        raise InvalidSpec("duration_s", "shorter than one sample")
    samples = np.zeros(n)
    samples[0] = volume
    origin = Impulse(duration_s=duration_s, sample_rate_hz=sample_rate_hz, volume=volume)
    return Waveform(samples=samples, sample_rate_hz=sample_rate_hz, origin=origin)


def passive(duration_s: float, sample_rate_hz: int = SAMPLE_RATE_HZ) -> Passive:
    if sample_count(duration_s, sample_rate_hz) < 1:
        raise InvalidSpec("duration_s", "shorter than one sample")
    return Passive(duration_s=duration_s, sample_rate_hz=sample_rate_hz)


def render(stimulus: Stimulus) -> Union[Waveform, Passive]:
    """Turn a stimulus description into what the simulator consumes"""
    if isinstance(stimulus, Passive):
        return stimulus
    if isinstance(stimulus, Impulse):
        return impulse(stimulus.duration_s, stimulus.sample_rate_hz, stimulus.volume)
    return synthesize(stimulus)
