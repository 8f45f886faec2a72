import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy import fft

from src.models.domain import FeatureSet, Label, Recording, SampleLabels, SpectrumFeature, Waveform
from src.utils.errors import FeatureError, MixedSampleRates, TargetTooLong, TooShort

logger = logging.getLogger("features")


def trim(recordings: Sequence[Recording], target_len: Optional[int] = None) -> List[Recording]:
    """Truncate every waveform from the end to a common length"""
    if not recordings:
        return []
    rates = {r.waveform.sample_rate_hz for r in recordings}
    if len(rates) > 1:
        raise MixedSampleRates(f"recordings mix sample rates {sorted(rates)}")

    shortest = min(len(r.waveform) for r in recordings)
    if target_len is None:
        target_len = shortest
    elif target_len > shortest:
        raise TargetTooLong(f"target length {target_len} exceeds shortest recording ({shortest} samples)")
    if target_len < 1:
        raise TooShort("target length must be at least one sample")

    trimmed = []
    for r in recordings:
        if len(r.waveform) == target_len:
            trimmed.append(r)
            continue
        wave = Waveform(samples=r.waveform.samples[:target_len], sample_rate_hz=r.waveform.sample_rate_hz)
        trimmed.append(r.model_copy(update={"waveform": wave}))
    return trimmed


def _spectrum(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[-1]
    return np.abs(fft.rfft(samples, axis=-1))[..., 1 : n // 2 + 1] * (2.0 / n)


def amplitude_spectrum(r: Recording) -> SpectrumFeature:
    """One-sided DFT magnitudes at bins 1..N//2, scaled by 2/N, DC dropped"""
    n = len(r.waveform)
    if n < 2:
        raise TooShort(f"need at least 2 samples for a spectrum, got {n}")
    rate = r.waveform.sample_rate_hz
    return SpectrumFeature(
        amplitudes=_spectrum(r.waveform.samples),
        bin_hz=rate / n,
        first_bin_hz=rate / n,
        sample_rate_hz=rate,
    )


def spectrum_energy(feature: SpectrumFeature, dc: float = 0.0, n_samples: Optional[int] = None) -> float:
    """Time-domain energy sum(x**2) recovered from a one-sided amplitude spectrum.

    ``dc`` is the (unscaled) DFT value at bin 0, which the feature drops.
    """
    n = n_samples if n_samples is not None else int(round(feature.sample_rate_hz / feature.bin_hz))
    a = feature.amplitudes
    if n % 2 == 0:
        inner, nyquist = a[:-1], a[-1]
        return float(dc ** 2 / n + n / 2 * np.sum(inner ** 2) + n / 4 * nyquist ** 2)
    return float(dc ** 2 / n + n / 2 * np.sum(a ** 2))


def featurize(recordings: Sequence[Recording], normalize: bool = False, target_len: Optional[int] = None) -> FeatureSet:
    """Trim to a common length, take amplitude spectra, copy labels.

    With ``normalize`` each spectrum is scaled to unit L2 norm.
    """
    if not recordings:
        raise FeatureError("featurize needs at least one recording")
    trimmed = trim(recordings, target_len)
    n = len(trimmed[0].waveform)
    if n < 2:
        raise TooShort(f"need at least 2 samples for a spectrum, got {n}")
    rate = trimmed[0].waveform.sample_rate_hz

    matrix = _spectrum(np.stack([r.waveform.samples for r in trimmed]))
    if normalize:
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        matrix = np.divide(matrix, norms, out=np.zeros_like(matrix), where=norms > 0)

    logger.info(f"Featurized {len(trimmed)} recordings to dimension {matrix.shape[1]} (N={n})")
    return FeatureSet(
        matrix=matrix,
        labels=[SampleLabels.from_recording(r) for r in trimmed],
        bin_hz=rate / n,
        first_bin_hz=rate / n,
        sample_rate_hz=rate,
    )


def feature_matrix(data: FeatureSet) -> np.ndarray:
    return data.matrix


def label_vector(data: FeatureSet, target: str) -> List[Label]:
    return data.targets(target)
