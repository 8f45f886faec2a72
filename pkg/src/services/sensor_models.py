"""Sensor models: k-nearest neighbours and a one-vs-rest linear SVC.

KNN keeps its training set; prediction is brute force over every stored
vector with fixed tie rules so results never depend on training order.
The SVC solves the dual of the L2-regularised hinge loss per class with
libsvm on a precomputed linear kernel and keeps the best primal iterate.
"""
import logging
import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple, Union, runtime_checkable

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics import balanced_accuracy_score, mean_squared_error
from sklearn.model_selection import KFold, StratifiedKFold
from sklearn.svm import SVC

from src.config.settings import DEFAULT_FOLDS, KNN_DEFAULT_K, SVC_DEFAULT_C, SVC_MAX_EPOCHS, SVC_TOLERANCE
from src.models.domain import (
    ClassDiagnostics,
    FeatureSet,
    GridCell,
    GridSearchResult,
    Label,
    ModelKind,
    ParamGrid,
    SensorModel,
    SpectrumFeature,
    SvcDiagnostics,
    label_key,
    label_str,
)
from src.utils.errors import (
    DimMismatch,
    EmptyData,
    KTooLarge,
    ModelError,
    NotConverged,
    SingleClass,
    TooFewPerClass,
    WrongTargetType,
)

logger = logging.getLogger("sensor_models")

METRICS = ("L1", "L2")
_TAU = 1e-12
_KNN_BATCH = 256

FeatureInput = Union[SpectrumFeature, np.ndarray, Sequence[float]]


@runtime_checkable
class Predictor(Protocol):
    """Anything the evaluation harness can score"""

    target: str
    is_regressor: bool

    def predict_many(self, data: FeatureSet) -> List[Label]:
        ...


def _is_numeric(label: Any) -> bool:
    return isinstance(label, (int, float, np.integer, np.floating)) and not isinstance(label, bool)


def _as_vector(x: FeatureInput) -> np.ndarray:
    if isinstance(x, SpectrumFeature):
        return x.amplitudes
    return np.asarray(x, dtype=np.float64).ravel()


# ---------------------------------------------------------------------------
# KNN
# ---------------------------------------------------------------------------
def knn_train(
    data: FeatureSet,
    target: str,
    k: int = KNN_DEFAULT_K,
    metric: str = "L2",
    mode: str = "classify",
) -> SensorModel:
    if len(data) == 0:
        raise EmptyData("cannot train on an empty feature set")
    if k < 1:
        raise ModelError(f"k must be >= 1, got {k}")
    if k > len(data):
        raise KTooLarge(f"k={k} exceeds the {len(data)} training samples")
    if metric not in METRICS:
        raise ModelError(f"unknown distance metric '{metric}'")
    if mode not in ("classify", "regress"):
        raise ModelError(f"unknown KNN mode '{mode}'")

    labels = data.targets(target)
    if any(label is None for label in labels):
        raise WrongTargetType(f"target '{target}' has missing labels")
    if mode == "regress" and not all(_is_numeric(label) for label in labels):
        raise WrongTargetType(f"regression needs numeric targets, '{target}' is categorical")

    kind = ModelKind.KNN_CLASSIFIER if mode == "classify" else ModelKind.KNN_REGRESSOR
    if kind == ModelKind.KNN_REGRESSOR:
        labels = [float(label) for label in labels]
    logger.info(f"Trained {kind.value} on {len(data)} samples (target={target}, k={k}, metric={metric})")
    return SensorModel(
        kind=kind,
        target=target,
        feature_dim=data.dim,
        hyperparams={"k": k, "metric": metric, "weighting": "uniform"},
        train_x=data.matrix,
        train_y=labels,
        classes=sorted(set(labels), key=label_key) if mode == "classify" else None,
    )


def _distances(train_x: np.ndarray, queries: np.ndarray, metric: str) -> np.ndarray:
    """(n_queries, n_train) distance matrix"""
    return cdist(queries, train_x, metric="cityblock" if metric == "L1" else "euclidean")


def _knn_vote(m: SensorModel, dist: np.ndarray, codes: np.ndarray) -> Label:
    """Majority vote (ties: smaller summed distance, then label order) or mean of the k targets.

    ``codes`` holds the training targets for a regressor and class ranks for a classifier.
    """
    k = int(m.hyperparams["k"])
    index = np.arange(dist.size)
    nearest = np.lexsort((index, codes, dist))[:k]
    if m.kind == ModelKind.KNN_REGRESSOR:
        return float(np.mean(codes[nearest]))

    votes: Dict[int, int] = defaultdict(int)
    summed: Dict[int, float] = defaultdict(float)
    for i in nearest:
        votes[codes[i]] += 1
        summed[codes[i]] += float(dist[i])
    winner = min(votes, key=lambda r: (-votes[r], summed[r], r))
    return m.classes[winner]


def _knn_predict_rows(m: SensorModel, rows: np.ndarray) -> List[Label]:
    if m.kind not in (ModelKind.KNN_CLASSIFIER, ModelKind.KNN_REGRESSOR):
        raise ModelError(f"knn_predict needs a KNN model, got {m.kind.value}")
    if m.kind == ModelKind.KNN_REGRESSOR:
        codes = np.asarray(m.train_y, dtype=np.float64)
    else:
        rank = {label: r for r, label in enumerate(m.classes)}
        codes = np.array([rank[label] for label in m.train_y])
    predictions: List[Label] = []
    for start in range(0, rows.shape[0], _KNN_BATCH):
        dist = _distances(m.train_x, rows[start:start + _KNN_BATCH], m.hyperparams["metric"])
        predictions.extend(_knn_vote(m, row, codes) for row in dist)
    return predictions


def knn_predict(m: SensorModel, x: FeatureInput) -> Label:
    vec = _as_vector(x)
    if vec.size != m.feature_dim:
        raise DimMismatch(f"input has dimension {vec.size}, model expects {m.feature_dim}")
    return _knn_predict_rows(m, vec[None, :])[0]


# ---------------------------------------------------------------------------
# Linear SVC
# ---------------------------------------------------------------------------
def _hinge_objectives(K: np.ndarray, y: np.ndarray, coef: np.ndarray, b: float, C: float) -> Tuple[float, float]:
    kv = K @ coef
    wnorm2 = float(coef @ kv)
    margins = y * (kv + b)
    primal = 0.5 * wnorm2 + C * float(np.sum(np.maximum(0.0, 1.0 - margins)))
    dual = float(np.sum(np.abs(coef))) - 0.5 * wnorm2
    return primal, dual


def _solve_binary(
    K: np.ndarray, y: np.ndarray, C: float, tol: float, max_epochs: int
) -> Tuple[np.ndarray, float, ClassDiagnostics]:
    """Hinge-loss dual of one binary problem on the precomputed linear kernel.

    libsvm runs with an iteration budget of ``epochs * n`` pair updates; the
    budget doubles until the solver meets ``tol`` or reaches ``max_epochs``.
    The loss trace holds the best primal objective after each budget.
    Returns (alpha*y, bias, diagnostics).
    """
    n = y.size
    best_primal, best_coef, best_b = np.inf, np.zeros(n), 0.0
    trace: List[float] = []
    converged, gap, epochs, budget = False, np.inf, 0, 1
    while True:
        epochs = min(budget, max_epochs)
        solver = SVC(C=C, kernel="precomputed", tol=tol, shrinking=False, max_iter=epochs * n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            solver.fit(K, y)
        coef = np.zeros(n)
        coef[solver.support_] = solver.dual_coef_[0]
        b = float(solver.intercept_[0])

        primal, dual = _hinge_objectives(K, y, coef, b, C)
        if primal < best_primal:
            best_primal, best_coef, best_b = primal, coef, b
        trace.append(float(best_primal))
        gap = (best_primal - dual) / max(abs(best_primal), _TAU)
        if solver.fit_status_ == 0:
            converged = True
            break
        if epochs >= max_epochs:
            break
        budget *= 2

    diag = ClassDiagnostics(label="", converged=converged, epochs=epochs, duality_gap=float(max(gap, 0.0)), loss_trace=trace)
    return best_coef, best_b, diag


def svc_train(
    data: FeatureSet,
    target: str,
    C: float = SVC_DEFAULT_C,
    tolerance: float = SVC_TOLERANCE,
    max_epochs: int = SVC_MAX_EPOCHS,
    standardize: bool = False,
) -> SensorModel:
    if len(data) == 0:
        raise EmptyData("cannot train on an empty feature set")
    if C <= 0:
        raise ModelError(f"C must be positive, got {C}")
    labels = data.targets(target)
    if any(label is None for label in labels):
        raise WrongTargetType(f"target '{target}' has missing labels")
    classes = sorted(set(labels), key=label_key)
    if len(classes) < 2:
        raise SingleClass(f"target '{target}' has a single class; SVC needs at least two")

    X = data.matrix
    mean = scale = None
    if standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        X = (X - mean) / scale

    K = X @ X.T
    weights, biases, per_class = [], [], []
    for label in classes:
        y = np.where(np.array([lab == label for lab in labels]), 1.0, -1.0)
        coef, b, diag = _solve_binary(K, y, C, tolerance, max_epochs)
        weights.append(X.T @ coef)
        biases.append(b)
        per_class.append(diag.model_copy(update={"label": label_str(label)}))

    diagnostics = SvcDiagnostics(per_class=per_class)
    if not diagnostics.converged:
        message = f"SVC did not reach tolerance {tolerance} within {max_epochs} epochs (target={target})"
        logger.warning(message)
        warnings.warn(message, NotConverged)
    logger.info(f"Trained LinearSvc on {len(data)} samples, {len(classes)} classes (target={target}, C={C})")
    return SensorModel(
        kind=ModelKind.LINEAR_SVC,
        target=target,
        feature_dim=data.dim,
        hyperparams={"C": C, "tolerance": tolerance, "max_epochs": max_epochs, "standardize": standardize},
        classes=classes,
        weights=np.vstack(weights),
        biases=np.array(biases),
        scaler_mean=mean,
        scaler_scale=scale,
        diagnostics=diagnostics,
    )


def svc_decision(m: SensorModel, x: FeatureInput) -> np.ndarray:
    """Per-class scores w_c . x + b_c in the order of ``m.classes``"""
    if m.kind != ModelKind.LINEAR_SVC:
        raise ModelError(f"svc_decision needs a LinearSvc model, got {m.kind.value}")
    vec = _as_vector(x)
    if vec.size != m.feature_dim:
        raise DimMismatch(f"input has dimension {vec.size}, model expects {m.feature_dim}")
    if m.scaler_mean is not None:
        vec = (vec - m.scaler_mean) / m.scaler_scale
    return m.weights @ vec + m.biases


def svc_predict(m: SensorModel, x: FeatureInput) -> Label:
    return m.classes[int(np.argmax(svc_decision(m, x)))]


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------
def predict(m: SensorModel, x: FeatureInput) -> Label:
    if m.kind == ModelKind.LINEAR_SVC:
        return svc_predict(m, x)
    return knn_predict(m, x)


def predict_many(m: Union[SensorModel, Predictor], data: Union[FeatureSet, np.ndarray]) -> List[Label]:
    if not isinstance(m, SensorModel):
        return list(m.predict_many(data))
    rows = data.matrix if isinstance(data, FeatureSet) else np.atleast_2d(data)
    if rows.shape[1] != m.feature_dim:
        raise DimMismatch(f"input has dimension {rows.shape[1]}, model expects {m.feature_dim}")
    if m.kind == ModelKind.LINEAR_SVC:
        X = rows if m.scaler_mean is None else (rows - m.scaler_mean) / m.scaler_scale
        scores = X @ m.weights.T + m.biases
        return [m.classes[int(i)] for i in np.argmax(scores, axis=1)]
    return _knn_predict_rows(m, rows)


def fit(data: FeatureSet, target: str, params: Dict[str, Any]) -> SensorModel:
    """Train from a learner description such as {"method": "knn", "k": 3}"""
    params = dict(params)
    method = params.pop("method", "knn")
    if method == "knn":
        return knn_train(data, target, **params)
    if method == "svc":
        return svc_train(data, target, **params)
    raise ModelError(f"unknown learner '{method}'")


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------
def grid_search(
    data: FeatureSet,
    target: str,
    grid: ParamGrid,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    jobs: int = 1,
) -> GridSearchResult:
    """Stratified k-fold search; best = highest mean score, first in grid order on ties.

    Classification is scored by mean per-class recall, regression by -RMSE.
    """
    if folds < 2:
        raise ModelError(f"folds must be >= 2, got {folds}")
    labels = data.targets(target)
    points = list(grid.points())
    regression = any(p.get("mode") == "regress" for p in points)

    if regression:
        splitter = KFold(n_splits=folds, shuffle=True, random_state=seed % 2 ** 32)
        strata = np.zeros(len(labels))
    else:
        strata = np.array([label_str(label) for label in labels])
        values, counts = np.unique(strata, return_counts=True)
        if counts.size and counts.min() < folds:
            small = values[np.argmin(counts)]
            raise TooFewPerClass(f"class '{small}' has {counts.min()} samples, fewer than {folds} folds")
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed % 2 ** 32)
    splits = list(splitter.split(data.matrix, strata))

    def score_point(params: Dict[str, Any]) -> GridCell:
        scores = []
        for train_idx, test_idx in splits:
            train, test = data.subset(train_idx), data.subset(test_idx)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NotConverged)
                model = fit(train, target, {"method": grid.method, **params})
            predicted = predict_many(model, test)
            truth = test.targets(target)
            if model.is_regressor:
                scores.append(-float(np.sqrt(mean_squared_error(truth, predicted))))
            else:
                scores.append(
                    float(balanced_accuracy_score([label_str(t) for t in truth], [label_str(p) for p in predicted]))
                )
        return GridCell(params=params, mean_score=float(np.mean(scores)), fold_scores=scores)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            table = list(executor.map(score_point, points))
    else:
        table = [score_point(p) for p in points]

    best = table[0]
    for cell in table[1:]:
        if cell.mean_score > best.mean_score:
            best = cell
    logger.info(f"Grid search over {len(table)} points ({grid.method}, target={target}): best {best.params} = {best.mean_score:.4f}")
    return GridSearchResult(best=best.params, best_score=best.mean_score, table=table)
