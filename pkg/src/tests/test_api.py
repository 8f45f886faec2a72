import logging
from io import BytesIO

import pytest
from fastapi.testclient import TestClient
from scipy.io import wavfile

from src.config.settings import API_PREFIX
from src.main import app

logger = logging.getLogger("api_tests")


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_root(client):
    data = client.get("/").json()
    assert data["docs"] == f"{API_PREFIX}/docs"
    assert client.get("/health").json() == {"status": "healthy"}


def test_health_endpoint(client):
    response = client.get(f"{API_PREFIX}/health/")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_detailed_health_endpoint(client, tmp_path, monkeypatch):
    monkeypatch.setenv("ACOUSTIC_OUTPUT_ROOT", str(tmp_path))
    from src.config.settings import get_settings

    get_settings.cache_clear()
    try:
        data = client.get(f"{API_PREFIX}/health/detailed").json()
    finally:
        monkeypatch.delenv("ACOUSTIC_OUTPUT_ROOT")
        get_settings.cache_clear()
    logger.info(f"Detailed health: {data['checks']}")
    assert data["checks"]["simulator"]["success"]
    assert data["checks"]["simulator"]["peak_hz"] == pytest.approx(2580.0, abs=10.0)
    assert data["checks"]["dependencies"]["success"]
    assert data["status"] == "healthy"


def test_self_check(client):
    response = client.get(f"{API_PREFIX}/health/self-check")
    assert response.status_code == 200
    assert response.json()["details"]["success"]


def test_synthesize_summary(client):
    response = client.post(
        f"{API_PREFIX}/signals/synthesize", json={"kind": "Sine", "duration_s": 0.5, "volume": 0.5}
    )
    assert response.status_code == 200
    data = response.json()
    assert data["n_samples"] == 24000
    assert data["peak"] == pytest.approx(0.5, abs=1e-6)
    assert data["rms"] == pytest.approx(0.5 / 2 ** 0.5, rel=1e-3)


def test_synthesize_wav(client):
    response = client.post(
        f"{API_PREFIX}/signals/synthesize",
        params={"format": "wav"},
        json={"kind": "WhiteNoise", "duration_s": 0.1, "seed": 3},
    )
    assert response.status_code == 200
    assert response.headers["content-type"] == "audio/wav"
    rate, samples = wavfile.read(BytesIO(response.content))
    assert rate == 48000 and samples.size == 4800


@pytest.mark.parametrize(
    "body",
    [
        {"kind": "Sine", "duration_s": 0.1, "sine_freq_hz": 30000.0},
        {"kind": "Sine", "duration_s": 0.0},
        {"kind": "Chirp", "duration_s": 0.1},
    ],
)
def test_synthesize_rejects_invalid_spec(client, body):
    assert client.post(f"{API_PREFIX}/signals/synthesize", json=body).status_code == 422


def test_snr_endpoint(client):
    body = {"stimulus": {"kind": "WhiteNoise", "duration_s": 0.5, "seed": 3}, "seed": 11}
    quiet = client.post(f"{API_PREFIX}/snr", json=body).json()
    assert 35 <= quiet["snr_db"] <= 55

    noisy = client.post(f"{API_PREFIX}/snr", json={**body, "external_level_db": 60.0}).json()
    assert quiet["snr_db"] - noisy["snr_db"] <= 5


def test_snr_of_silent_passive_is_null(client):
    body = {"simulator": {"noise_free": True}, "stimulus": {"kind": "WhiteNoise", "duration_s": 0.05}}
    data = client.post(f"{API_PREFIX}/snr", json=body).json()
    assert data["success"] and data["snr_db"] is None


def test_list_tasks(client):
    tasks = client.get(f"{API_PREFIX}/experiments").json()["data"]["tasks"]
    assert "location6" in tasks and "grid-search" in tasks


def test_unknown_task(client):
    assert client.post(f"{API_PREFIX}/experiments/juggling", json={"seed": 1}).status_code == 404


def test_experiment_config_without_seed(client):
    response = client.post(f"{API_PREFIX}/experiments/location6", json={"repeats": 3})
    assert response.status_code == 422
    assert response.json()["detail"][0]["loc"] == ["seed"]


def test_run_experiment(client, tmp_path):
    body = {
        "seed": 2,
        "repeats": 3,
        "stimulus": {"kind": "WhiteNoise", "duration_s": 0.02, "seed": 1},
        "output_dir": str(tmp_path),
    }
    response = client.post(f"{API_PREFIX}/experiments/location6", json=body)
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["outcome"]["task"] == "location6"
    assert 0.0 <= data["summary"]["location"]["acr"] <= 1.0
    assert str(tmp_path / "location6_summary.json") in data["files"]


def test_experiment_data_error_is_422(client):
    body = {"seed": 1, "repeats": 1, "stimulus": {"kind": "WhiteNoise", "duration_s": 0.02}}
    response = client.post(f"{API_PREFIX}/experiments/location6", json=body)
    assert response.status_code == 422
    assert "at least 2" in response.json()["detail"]
