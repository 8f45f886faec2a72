import numpy as np
import pytest

from src.models.domain import ActuatorState, Recording, SoundKind, SoundSpec, Waveform
from src.services.features import (
    amplitude_spectrum,
    feature_matrix,
    featurize,
    label_vector,
    spectrum_energy,
    trim,
)
from src.services.signal_gen import synthesize
from src.utils.errors import FeatureError, MixedSampleRates, TargetTooLong, TooShort


def _recording(samples, rate: int = 48000, location: str = "tip") -> Recording:
    state = ActuatorState(contact_location=location, contact_force_n=1.0) if location != "none" else ActuatorState()
    return Recording(waveform=Waveform(samples=np.asarray(samples, dtype=float), sample_rate_hz=rate), state=state, actuator_id="A")


def test_trim_to_shortest():
    trimmed = trim([_recording(np.zeros(48000)), _recording(np.zeros(48010))])
    assert [len(r.waveform) for r in trimmed] == [48000, 48000]


def test_trim_explicit_target():
    recordings = [_recording(np.zeros(960)), _recording(np.zeros(960))]
    assert [len(r.waveform) for r in trim(recordings, 960)] == [960, 960]
    with pytest.raises(TargetTooLong):
        trim([_recording(np.zeros(48000))], 50000)


def test_trim_rejects_mixed_rates():
    with pytest.raises(MixedSampleRates):
        trim([_recording(np.zeros(100)), _recording(np.zeros(100), rate=44100)])


def test_integer_bin_sine_spectrum():
    sine = synthesize(SoundSpec(kind=SoundKind.SINE, duration_s=1.0, sine_freq_hz=2580.0))
    feature = amplitude_spectrum(Recording(waveform=sine, state=ActuatorState(), actuator_id="A"))
    assert feature.dim == 24000
    assert feature.bin_hz == 1.0 and feature.first_bin_hz == 1.0
    peak = 2580 - 1
    assert feature.amplitudes[peak] == pytest.approx(1.0, abs=1e-6)
    others = np.delete(feature.amplitudes, peak)
    assert np.max(others) < 1e-9


def test_zero_waveform_has_zero_spectrum():
    assert np.all(amplitude_spectrum(_recording(np.zeros(480))).amplitudes == 0)


def test_spectrum_needs_two_samples():
    with pytest.raises(TooShort):
        amplitude_spectrum(_recording(np.zeros(1)))


@pytest.mark.parametrize("n", [960, 961])
def test_parseval_energy(n):
    rng = np.random.default_rng(n)
    samples = rng.uniform(-0.5, 0.5, n)
    feature = amplitude_spectrum(_recording(samples))
    dc = float(np.sum(samples))
    assert spectrum_energy(feature, dc=dc, n_samples=n) == pytest.approx(float(np.sum(samples ** 2)), rel=1e-6)


def test_spectrum_is_sign_and_shift_invariant_for_bin_sines():
    n = 960
    t = np.arange(n)
    sine = 0.5 * np.sin(2 * np.pi * 50 * t / n)
    base = amplitude_spectrum(_recording(sine)).amplitudes
    np.testing.assert_allclose(amplitude_spectrum(_recording(-sine)).amplitudes, base, atol=1e-12)
    np.testing.assert_allclose(amplitude_spectrum(_recording(np.roll(sine, 37))).amplitudes, base, atol=1e-12)


def test_featurize_dimensions_and_labels():
    recordings = [_recording(np.zeros(960), location=loc) for loc in ["tip", "base", "none"]]
    data = featurize(recordings)
    assert len(data) == 3 and data.dim == 480
    assert feature_matrix(data).shape == (3, 480)
    assert label_vector(data, "location") == ["tip", "base", "none"]
    assert label_vector(data, "actuator_id") == ["A", "A", "A"]


def test_featurize_trims_mixed_lengths():
    data = featurize([_recording(np.zeros(960)), _recording(np.zeros(48000))])
    assert data.dim == 480
    assert data.bin_hz == pytest.approx(50.0)


def test_featurize_normalize():
    rng = np.random.default_rng(0)
    recordings = [_recording(rng.uniform(-0.5, 0.5, 960)) for _ in range(4)] + [_recording(np.zeros(960))]
    data = featurize(recordings, normalize=True)
    norms = np.linalg.norm(data.matrix, axis=1)
    np.testing.assert_allclose(norms[:4], 1.0)
    assert norms[4] == 0


def test_featurize_empty_list():
    with pytest.raises(FeatureError):
        featurize([])
