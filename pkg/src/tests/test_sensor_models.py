import warnings

import numpy as np
import pytest

from src.models.domain import ModelKind, ParamGrid, SampleLabels
from src.services.sensor_models import (
    Predictor,
    fit,
    grid_search,
    knn_predict,
    knn_train,
    predict,
    predict_many,
    svc_decision,
    svc_predict,
    svc_train,
)
from src.utils.errors import (
    DimMismatch,
    EmptyData,
    KTooLarge,
    NotConverged,
    SingleClass,
    TooFewPerClass,
    WrongTargetType,
)
from src.tests.helpers import make_features


def _brute_force_knn(train_x, train_y, classes, x, k, metric):
    """Reference: sort every candidate by (distance, label order, index) and vote"""
    if metric == "L1":
        dist = np.abs(train_x - x).sum(axis=1)
    else:
        dist = np.sqrt(((train_x - x) ** 2).sum(axis=1))
    order = sorted(range(len(train_y)), key=lambda i: (dist[i], classes.index(train_y[i]), i))[:k]
    tally = {}
    for i in order:
        votes, total = tally.get(train_y[i], (0, 0.0))
        tally[train_y[i]] = (votes + 1, total + dist[i])
    return min(tally, key=lambda label: (-tally[label][0], tally[label][1], classes.index(label)))


def test_knn_stores_training_set():
    rng = np.random.default_rng(0)
    data = make_features(rng.normal(size=(90, 4)), [f"c{i % 6}" for i in range(90)])
    model = knn_train(data, "location", k=5)
    assert model.kind == ModelKind.KNN_CLASSIFIER
    assert model.train_x.shape == (90, 4)
    with pytest.raises(KTooLarge):
        knn_train(data, "location", k=91)


def test_knn_rejects_bad_inputs():
    data = make_features(np.zeros((4, 2)), ["wood", "wood", "silicone", "silicone"], target="material")
    with pytest.raises(WrongTargetType):
        knn_train(data, "material", k=1, mode="regress")
    with pytest.raises(EmptyData):
        knn_train(data.subset([]), "material", k=1)
    model = knn_train(data, "material", k=1)
    with pytest.raises(DimMismatch):
        knn_predict(model, np.zeros(3))


def test_knn_exact_match_with_k1():
    rng = np.random.default_rng(1)
    matrix = rng.normal(size=(20, 3))
    labels = [f"c{i % 4}" for i in range(20)]
    model = knn_train(make_features(matrix, labels), "location", k=1)
    for row, label in zip(matrix, labels):
        assert knn_predict(model, row) == label


def test_knn_regressor_toy_examples():
    duplicated = make_features([0.0] * 5 + [10.0] * 5, [0.0] * 5 + [30.0] * 5)
    model = knn_train(duplicated, "location", k=5, mode="regress")
    assert knn_predict(model, [0.0]) == pytest.approx(0.0)

    line = make_features([0.0, 1.0, 2.0, 3.0, 4.0], [0.0, 3.0, 6.0, 9.0, 12.0])
    model = knn_train(line, "location", k=3, mode="regress")
    assert model.kind == ModelKind.KNN_REGRESSOR
    assert knn_predict(model, [2.0]) == pytest.approx(6.0)


@pytest.mark.parametrize("metric", ["L1", "L2"])
def test_knn_matches_brute_force_reference(metric):
    """Random small instances with many ties on an integer grid"""
    rng = np.random.default_rng(2024)
    for _ in range(60):
        n, dim, k = int(rng.integers(5, 25)), int(rng.integers(1, 4)), int(rng.integers(1, 6))
        train_x = rng.integers(0, 3, size=(n, dim)).astype(float)
        train_y = [str(label) for label in rng.choice(["a", "b", "c"], size=n)]
        model = knn_train(make_features(train_x, train_y), "location", k=min(k, n), metric=metric)
        classes = list(model.classes)
        for _ in range(5):
            x = rng.integers(0, 3, size=dim).astype(float)
            assert knn_predict(model, x) == _brute_force_knn(train_x, train_y, classes, x, min(k, n), metric)


def test_knn_is_invariant_to_training_order():
    rng = np.random.default_rng(3)
    matrix = rng.integers(0, 3, size=(30, 2)).astype(float)
    labels = [str(label) for label in rng.choice(["x", "y", "z"], size=30)]
    perm = rng.permutation(30)
    original = knn_train(make_features(matrix, labels), "location", k=4)
    shuffled = knn_train(make_features(matrix[perm], [labels[i] for i in perm]), "location", k=4)
    queries = rng.integers(0, 3, size=(20, 2)).astype(float)
    assert predict_many(original, queries) == predict_many(shuffled, queries)


def _two_points():
    return make_features([[0.0, 0.0]] * 5 + [[10.0, 10.0]] * 5, ["A"] * 5 + ["B"] * 5)


def test_svc_separates_two_points():
    data = _two_points()
    model = svc_train(data, "location", C=100)
    assert model.diagnostics.converged
    assert predict_many(model, data) == ["A"] * 5 + ["B"] * 5
    scores_a = svc_decision(model, [0.0, 0.0])
    assert scores_a[0] > 0 and scores_a[0] > scores_a[1]
    scores_b = svc_decision(model, [10.0, 10.0])
    assert scores_b[1] > 0 and scores_b[1] > scores_b[0]


def test_svc_xor_is_not_separable():
    xor = make_features([[0, 0], [1, 1], [0, 1], [1, 0]] * 3, ["p", "p", "n", "n"] * 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConverged)
        model = svc_train(xor, "location", C=1.0, max_epochs=200)
    accuracy = np.mean(np.array(predict_many(model, xor)) == np.array(xor.targets("location")))
    assert accuracy <= 0.75


def test_svc_loss_trace_never_increases():
    rng = np.random.default_rng(5)
    matrix = np.vstack([rng.normal(0, 1, (15, 3)), rng.normal(1.5, 1, (15, 3)), rng.normal(-1.5, 1, (15, 3))])
    labels = ["a"] * 15 + ["b"] * 15 + ["c"] * 15
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConverged)
        model = svc_train(make_features(matrix, labels), "location", C=10.0)
    for diag in model.diagnostics.per_class:
        assert diag.loss_trace, "every class records at least one epoch"
        assert all(b <= a + 1e-12 for a, b in zip(diag.loss_trace, diag.loss_trace[1:]))
        assert diag.duality_gap >= 0


def test_svc_is_stable_under_duplication():
    """Every sample twice with C halved is the same optimisation problem"""
    data = _two_points()
    doubled = make_features(np.vstack([data.matrix, data.matrix]), data.targets("location") * 2)
    single = svc_train(data, "location", C=100.0, tolerance=1e-8)
    twice = svc_train(doubled, "location", C=50.0, tolerance=1e-8)
    np.testing.assert_allclose(twice.weights, single.weights, atol=1e-4)
    np.testing.assert_allclose(twice.biases, single.biases, atol=1e-3)
    queries = np.array([[1.0, 2.0], [8.0, 9.0], [4.0, 4.0], [6.0, 7.0]])
    assert predict_many(single, queries) == predict_many(twice, queries)

    rng = np.random.default_rng(12)
    matrix = np.vstack([rng.normal(0, 1, (12, 4)), rng.normal(2, 1, (12, 4))])
    labels = ["u"] * 12 + ["v"] * 12
    overlap = make_features(matrix, labels)
    overlap_twice = make_features(np.vstack([matrix, matrix]), labels * 2)
    queries = rng.normal(1, 2, (30, 4))
    assert predict_many(svc_train(overlap, "location", C=2.0, tolerance=1e-8), queries) == predict_many(
        svc_train(overlap_twice, "location", C=1.0, tolerance=1e-8), queries
    )


def test_svc_warns_when_not_converged():
    rng = np.random.default_rng(9)
    data = make_features(rng.normal(size=(40, 5)), ["u", "v"] * 20)
    with pytest.warns(NotConverged):
        model = svc_train(data, "location", C=1e6, tolerance=1e-12, max_epochs=1)
    assert not model.diagnostics.converged
    assert model.diagnostics.epochs == 1


def test_svc_single_class():
    with pytest.raises(SingleClass):
        svc_train(make_features(np.zeros((3, 2)), ["a"] * 3), "location")


def test_svc_standardize_keeps_scaler():
    data = make_features([[0.0, 100.0]] * 5 + [[1.0, 300.0]] * 5, ["A"] * 5 + ["B"] * 5)
    model = svc_train(data, "location", standardize=True)
    assert model.scaler_mean is not None
    assert svc_predict(model, [1.0, 300.0]) == "B"
    assert predict(model, [0.0, 100.0]) == "A"


def test_fit_dispatches_on_method():
    data = _two_points()
    assert fit(data, "location", {"method": "knn", "k": 3}).kind == ModelKind.KNN_CLASSIFIER
    assert fit(data, "location", {"method": "svc", "C": 10.0}).kind == ModelKind.LINEAR_SVC


class _ConstantPredictor:
    target = "location"
    is_regressor = False

    def predict_many(self, data):
        return ["A"] * len(data)


def test_third_party_predictor_protocol():
    predictor = _ConstantPredictor()
    assert isinstance(predictor, Predictor)
    assert predict_many(predictor, _two_points()) == ["A"] * 10


def _clusters():
    rng = np.random.default_rng(11)
    centers = {"a": (0.0, 0.0), "b": (100.0, 0.0), "c": (0.0, 100.0)}
    matrix, labels = [], []
    for label, center in centers.items():
        for _ in range(10):
            matrix.append(np.array(center) + rng.normal(0, 0.1, 2))
            labels.append(label)
    return make_features(np.array(matrix), labels)


def test_grid_search_prefers_first_point_on_ties():
    result = grid_search(_clusters(), "location", ParamGrid(method="knn", params={"k": [1, 5]}), folds=5, seed=0)
    assert result.best == {"k": 1}
    assert [cell.mean_score for cell in result.table] == [1.0, 1.0]


def test_grid_search_single_point():
    result = grid_search(_clusters(), "location", ParamGrid(method="knn", params={"k": [3]}), folds=2, seed=1)
    assert result.best == {"k": 3}
    assert result.best_score == pytest.approx(np.mean(result.table[0].fold_scores))


def test_grid_search_svc_and_regression():
    svc = grid_search(_clusters(), "location", ParamGrid(method="svc", params={"C": [0.1, 10.0]}), folds=3)
    assert len(svc.table) == 2

    positions = make_features(np.arange(20, dtype=float), np.arange(20, dtype=float) * 3)
    regression = grid_search(
        positions, "location", ParamGrid(method="knn", params={"k": [1, 3], "mode": ["regress"]}), folds=4
    )
    assert all(cell.mean_score <= 0 for cell in regression.table)


def test_grid_search_needs_enough_samples_per_class():
    data = make_features(np.arange(6, dtype=float), ["a", "a", "a", "a", "b", "b"])
    with pytest.raises(TooFewPerClass):
        grid_search(data, "location", ParamGrid(method="knn", params={"k": [1]}), folds=3)


def test_param_grid_order_and_validation():
    grid = ParamGrid(method="knn", params={"k": [1, 2], "metric": ["L1", "L2"]})
    assert list(grid.points()) == [
        {"k": 1, "metric": "L1"},
        {"k": 1, "metric": "L2"},
        {"k": 2, "metric": "L1"},
        {"k": 2, "metric": "L2"},
    ]
    with pytest.raises(ValueError):
        ParamGrid(method="knn", params={})


def test_labels_keep_numeric_targets():
    labels = SampleLabels(location=12.0, force=1.5)
    assert labels.get("force") == 1.5
    assert labels.get("location") == 12.0
