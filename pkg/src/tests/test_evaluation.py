import math

import numpy as np
import pytest

from src.models.domain import ActuatorState, Recording, SampleLabels, Waveform
from src.services.evaluation import (
    acr,
    evaluate,
    permutation_control,
    permute_labels,
    shuffle_split,
    snr_estimate,
    stratified_split,
)
from src.services.sensor_models import knn_train
from src.tests.helpers import make_features
from src.utils.errors import ClassTooSmall, MissingTarget, RateMismatch, UsageError


def _six_classes(per_class: int = 25):
    labels = [loc for loc in ["base", "middle", "tip", "left", "right", "top"] for _ in range(per_class)]
    return make_features(np.arange(len(labels), dtype=float), labels)


class _Fixed:
    """Predictor returning canned answers"""

    def __init__(self, answers, target="location", is_regressor=False):
        self.answers = answers
        self.target = target
        self.is_regressor = is_regressor

    def predict_many(self, data):
        return list(self.answers) if not callable(self.answers) else [self.answers(l) for l in data.labels]


def test_split_sizes_per_class():
    train, test = stratified_split(_six_classes(), 0.6, seed=3)
    assert len(train) == 90 and len(test) == 60
    for loc in ["base", "middle", "tip", "left", "right", "top"]:
        assert train.targets("location").count(loc) == 15
        assert test.targets("location").count(loc) == 10


def test_split_minimal_classes():
    data = make_features([0.0, 1.0, 2.0, 3.0], ["a", "a", "b", "b"])
    train, test = stratified_split(data, 0.5, seed=0)
    assert sorted(train.targets("location")) == ["a", "b"]
    assert sorted(test.targets("location")) == ["a", "b"]


def test_split_is_deterministic_and_disjoint():
    data = _six_classes()
    first = stratified_split(data, 0.6, seed=8)
    second = stratified_split(data, 0.6, seed=8)
    assert np.array_equal(first[0].matrix, second[0].matrix)
    assert set(first[0].matrix[:, 0]).isdisjoint(first[1].matrix[:, 0])
    other = stratified_split(data, 0.6, seed=9)
    assert not np.array_equal(first[0].matrix, other[0].matrix)


def test_split_errors():
    with pytest.raises(ClassTooSmall):
        stratified_split(make_features([0.0, 1.0, 2.0], ["a", "a", "b"]), 0.5)
    with pytest.raises(UsageError):
        stratified_split(_six_classes(), 1.0)
    with pytest.raises(MissingTarget):
        stratified_split(_six_classes(), 0.5, by="colour")


def test_split_by_several_fields():
    labels = [SampleLabels(location=loc, force=f) for loc in ["tip", "base"] for f in [0.5, 3.0] for _ in range(5)]
    data = make_features(np.arange(20, dtype=float), ["x"] * 20).with_labels(labels)
    train, _ = stratified_split(data, 0.6, seed=1, by=("force", "location"))
    pairs = [(l.location, l.force) for l in train.labels]
    assert all(pairs.count(p) == 3 for p in set(pairs))


def test_shuffle_split():
    data = make_features(np.arange(30, dtype=float), [float(t) for t in range(30)])
    train, test = shuffle_split(data, 2 / 3, seed=4)
    assert len(train) == 20 and len(test) == 10
    assert set(train.matrix[:, 0]).isdisjoint(test.matrix[:, 0])


def test_acr_hand_computed():
    confusion = np.array([[8, 2, 0], [1, 3, 0], [0, 0, 5]])
    assert acr(confusion) == pytest.approx((0.8 + 0.75 + 1.0) / 3)


def test_perfect_predictor():
    data = _six_classes(4)
    report = evaluate(_Fixed(lambda labels: labels.location), data)
    assert report.acr == 1.0
    np.testing.assert_allclose(np.array(report.confusion), np.eye(6))
    assert report.per_class_counts == {name: 4 for name in report.classes}


def test_constant_predictor_scores_chance():
    data = _six_classes(10)
    report = evaluate(_Fixed(["tip"] * len(data)), data)
    assert report.acr == pytest.approx(1 / 6)
    assert np.allclose(np.sum(report.confusion, axis=1), 1.0)


def test_regression_rmse():
    data = make_features(np.arange(10, dtype=float), [float(3 * i) for i in range(10)])
    perfect = evaluate(_Fixed([3.0 * i for i in range(10)], is_regressor=True), data)
    assert perfect.rmse == 0.0
    shifted = evaluate(_Fixed([3.0 * i + 3.0 for i in range(10)], is_regressor=True), data)
    assert shifted.rmse == pytest.approx(3.0)
    assert shifted.task_kind == "regression"


def test_evaluate_with_trained_model():
    data = _six_classes(5)
    model = knn_train(data, "location", k=1)
    assert evaluate(model, data).acr == 1.0


def test_missing_target():
    with pytest.raises(MissingTarget):
        evaluate(_Fixed([], target="colour"), _six_classes(2))


def _recording(samples, rate=48000):
    return Recording(waveform=Waveform(samples=np.asarray(samples, float), sample_rate_hz=rate), state=ActuatorState(), actuator_id="A")


def test_snr_definition():
    rng = np.random.default_rng(0)
    noise = rng.normal(0, 0.01, 48000)
    assert snr_estimate(_recording(noise * 10), _recording(noise)) == pytest.approx(20.0, abs=1e-9)
    assert snr_estimate(_recording(noise), _recording(noise)) == pytest.approx(0.0)


def test_snr_of_constructed_pairs_within_half_db():
    rng = np.random.default_rng(1)
    for ratio_db in [6.0, 20.0, 35.0]:
        signal = rng.normal(0, 0.1, 48000)
        noise = rng.normal(0, 0.1 * 10 ** (-ratio_db / 20), 48000)
        active = _recording(np.clip(signal + noise, -1, 1))
        expected = 10 * np.log10(np.mean((signal + noise) ** 2) / np.mean(noise ** 2))
        assert abs(snr_estimate(active, _recording(noise)) - expected) <= 0.5


def test_snr_edge_cases():
    silent = _recording(np.zeros(100))
    sound = _recording(np.full(100, 0.1))
    assert snr_estimate(sound, silent) == math.inf
    assert snr_estimate(silent, sound) == -math.inf
    with pytest.raises(RateMismatch):
        snr_estimate(sound, _recording(np.zeros(100), rate=44100))


def test_permute_labels_keeps_features_and_label_counts():
    data = _six_classes(5)
    permuted = permute_labels(data, "location", seed=2)
    assert np.array_equal(permuted.matrix, data.matrix)
    assert sorted(permuted.targets("location")) == sorted(data.targets("location"))
    assert permuted.targets("location") != data.targets("location")


def test_permutation_control_is_near_chance():
    rng = np.random.default_rng(4)
    labels = [c for c in ["a", "b", "c", "d", "e", "f"] for _ in range(25)]
    matrix = rng.normal(size=(len(labels), 8))
    train, test = stratified_split(make_features(matrix, labels), 0.6, seed=0)
    report = permutation_control(train, test, "location", {"method": "knn", "k": 5}, seed=0)
    assert abs(report.acr - 1 / 6) <= 0.15


def test_permutation_rounds_are_pooled():
    rng = np.random.default_rng(4)
    labels = [c for c in ["a", "b", "c", "d", "e", "f"] for _ in range(25)]
    matrix = rng.normal(size=(len(labels), 8))
    train, test = stratified_split(make_features(matrix, labels), 0.6, seed=0)
    learner = {"method": "knn", "k": 5}

    single = permutation_control(train, test, "location", learner, seed=0)
    pooled = permutation_control(train, test, "location", learner, seed=0, rounds=8)
    assert pooled.n_test == 8 * single.n_test
    assert pooled.predictions[: single.n_test] == single.predictions
    assert abs(pooled.acr - 1 / 6) <= 0.1

    with pytest.raises(UsageError):
        permutation_control(train, test, "location", learner, rounds=0)
