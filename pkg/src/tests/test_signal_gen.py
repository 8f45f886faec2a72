import logging

import numpy as np
import pytest

from src.models.domain import Impulse, Passive, SoundKind, SoundSpec, Waveform
from src.services.signal_gen import (
    filter_bandpass,
    impulse,
    passive,
    render,
    sample_count,
    scale_volume,
    synthesize,
)
from src.utils.errors import FullScaleExceeded, InvalidBand, InvalidFraction, InvalidSpec

logger = logging.getLogger("signal_gen_tests")


def _power_in_band(w: Waveform, low: float, high: float, total: bool = False) -> float:
    """Mean (or summed) squared DFT magnitude over [low, high] Hz"""
    spectrum = np.abs(np.fft.rfft(w.samples)) ** 2
    freqs = np.fft.rfftfreq(len(w), 1 / w.sample_rate_hz)
    mask = (freqs >= low) & (freqs <= high)
    return float(np.sum(spectrum[mask]) if total else np.mean(spectrum[mask]))


def test_sine_matches_closed_form():
    """Test the 2580 Hz sine sample by sample"""
    w = synthesize(SoundSpec(kind=SoundKind.SINE, duration_s=1.0, sine_freq_hz=2580.0))
    k = np.arange(48000)
    assert len(w) == 48000
    np.testing.assert_allclose(w.samples, np.sin(2 * np.pi * 2580 * k / 48000), atol=1e-9)


@pytest.mark.parametrize("kind", list(SoundKind))
def test_five_ms_is_240_samples(kind):
    w = synthesize(SoundSpec(kind=kind, duration_s=0.005))
    assert len(w) == 240


def test_sample_count_rounds_half_up():
    assert sample_count(0.02, 48000) == 960
    assert sample_count(1.0, 44100) == 44100


def test_white_noise_is_deterministic():
    spec = SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=0.02, seed=42)
    first, second = synthesize(spec), synthesize(spec)
    assert np.array_equal(first.samples, second.samples)
    other = synthesize(spec.model_copy(update={"seed": 43}))
    assert not np.array_equal(first.samples, other.samples)


def test_white_noise_is_uniform_and_bounded():
    w = synthesize(SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=1.0, seed=1))
    assert w.peak < 1.0
    assert w.rms == pytest.approx(3 ** -0.5, rel=1e-9)
    counts, _ = np.histogram(w.samples, bins=10, range=(-1, 1))
    assert counts.min() >= 0.9 * counts.max()


@pytest.mark.parametrize("seed", range(20))
def test_short_white_noise_hits_its_rms(seed):
    w = synthesize(SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=0.005, volume=0.25, seed=seed))
    assert len(w) == 240
    assert w.rms == pytest.approx(0.25 / np.sqrt(3), rel=1e-9)
    assert w.peak < 0.25


@pytest.mark.parametrize("kind", [SoundKind.SINE, SoundKind.LOG_SWEEP])
@pytest.mark.parametrize("volume", [1.0, 0.3])
def test_deterministic_kinds_never_exceed_volume(kind, volume):
    w = synthesize(SoundSpec(kind=kind, duration_s=0.05, volume=volume))
    assert w.peak <= volume + 1e-12


def test_sweep_covers_audible_band():
    """Every third-octave band between 30 Hz and 18 kHz carries energy within 40 dB of the loudest"""
    w = synthesize(SoundSpec(kind=SoundKind.LOG_SWEEP, duration_s=1.0))
    centers = []
    fc = 30.0
    while fc * 2 ** (1 / 6) <= 18000:
        centers.append(fc)
        fc *= 2 ** (1 / 3)
    energies = np.array([_power_in_band(w, c * 2 ** (-1 / 6), c * 2 ** (1 / 6), total=True) for c in centers])
    relative_db = 10 * np.log10(energies / energies.max())
    logger.info(f"Weakest third-octave band: {relative_db.min():.1f} dB")
    assert relative_db.min() > -40


def test_band_noise_rejects_out_of_band_energy():
    white = synthesize(SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=1.0, seed=7))
    band = filter_bandpass(white, 2000, 4000)
    passband = _power_in_band(band, 2000, 4000)
    assert 10 * np.log10(passband / _power_in_band(band, 400, 600)) >= 40
    assert 10 * np.log10(passband / _power_in_band(band, 15000, 17000)) >= 40


def test_band_noise_kind_uses_default_band():
    w = synthesize(SoundSpec(kind=SoundKind.BAND_NOISE, duration_s=0.5, seed=3))
    assert w.peak <= 1.0
    assert _power_in_band(w, 2000, 4000) > 1e4 * _power_in_band(w, 400, 600)


def test_sine_in_passband_keeps_its_level():
    sine = synthesize(SoundSpec(kind=SoundKind.SINE, duration_s=0.1, sine_freq_hz=3000.0, volume=0.5))
    filtered = filter_bandpass(sine, 2000, 4000)
    assert abs(20 * np.log10(filtered.rms / sine.rms)) <= 3


def _tone(volume: float, square: bool = False) -> Waveform:
    """300 periods of 3 kHz, starting and ending on a zero crossing"""
    wave = np.sin(2 * np.pi * 3000 * np.arange(4801) / 48000)
    if square:
        wave = np.sign(np.round(wave, 12))
    return Waveform(samples=volume * wave, sample_rate_hz=48000)


def test_bandpass_is_linear():
    """Scaling the input scales the output, even where the output nears full scale"""
    full = filter_bandpass(_tone(0.9), 2000, 4000).samples
    half = filter_bandpass(_tone(0.45), 2000, 4000).samples
    np.testing.assert_allclose(full, 2 * half, atol=1e-12)

    square = filter_bandpass(_tone(0.5, square=True), 2000, 4000)
    # only the 3 kHz fundamental of the square wave is in band: 4/pi of its level, sampled
    fundamental = 0.5 * 0.25 / np.tan(np.pi / 16)
    middle = square.samples[1200:3600]
    assert np.max(np.abs(middle)) == pytest.approx(fundamental, rel=0.02)
    assert np.max(np.abs(middle)) > 0.5


def test_bandpass_refuses_to_clip():
    """A full-scale square wave band-passes to a 1.26 peak: raise, never flatten"""
    with pytest.raises(FullScaleExceeded):
        filter_bandpass(_tone(1.0, square=True), 2000, 4000)


def test_band_noise_is_band_passed_white_noise():
    w = synthesize(SoundSpec(kind=SoundKind.BAND_NOISE, duration_s=0.02, seed=9))
    white = synthesize(SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=0.02, seed=9))
    np.testing.assert_allclose(w.samples, filter_bandpass(white, 2000, 4000).samples, atol=1e-12)


def test_bandpass_of_silence_is_silence():
    zero = Waveform(samples=np.zeros(480), sample_rate_hz=48000)
    assert np.all(filter_bandpass(zero, 2000, 4000).samples == 0)


@pytest.mark.parametrize("band", [(0, 100), (500, 400), (1000, 30000)])
def test_bandpass_rejects_bad_band(band):
    zero = Waveform(samples=np.zeros(480), sample_rate_hz=48000)
    with pytest.raises(InvalidBand):
        filter_bandpass(zero, *band)


def test_scale_volume():
    w = synthesize(SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=0.1, seed=2))
    assert np.array_equal(scale_volume(w, 1.0).samples, w.samples)
    quarter = scale_volume(w, 0.25)
    assert quarter.rms == pytest.approx(0.25 * w.rms, rel=1e-12)
    assert quarter.origin.volume == pytest.approx(0.25)
    with pytest.raises(InvalidFraction):
        scale_volume(w, 0.0)


@pytest.mark.parametrize(
    "field, overrides",
    [
        ("duration_s", {"duration_s": 0.0}),
        ("volume", {"volume": 1.5}),
        ("f_end_hz", {"kind": SoundKind.LOG_SWEEP, "f_start_hz": 500.0, "f_end_hz": 100.0}),
        ("band_high_hz", {"kind": SoundKind.BAND_NOISE, "band_low_hz": 2000.0, "band_high_hz": 30000.0}),
        ("sine_freq_hz", {"kind": SoundKind.SINE, "sine_freq_hz": 25000.0}),
    ],
)
def test_invalid_spec_names_the_field(field, overrides):
    spec = SoundSpec(**{"kind": SoundKind.WHITE_NOISE, "duration_s": 0.01, **overrides})
    with pytest.raises(InvalidSpec) as excinfo:
        synthesize(spec)
    assert excinfo.value.field == field


def test_impulse_and_passive():
    w = impulse(0.01, volume=0.5)
    assert len(w) == 480
    assert w.samples[0] == 0.5 and np.count_nonzero(w.samples) == 1
    assert isinstance(w.origin, Impulse)

    marker = passive(0.01)
    assert render(marker) is marker
    assert isinstance(render(Impulse(duration_s=0.01)), Waveform)
    assert isinstance(marker, Passive)
