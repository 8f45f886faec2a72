import logging
import math
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from sklearn.metrics import confusion_matrix

from src.models.domain import EvalReport, FeatureSet, Recording, SampleLabels, SensorModel, label_key, label_str
from src.services.sensor_models import Predictor, fit, predict_many
from src.utils.errors import ClassTooSmall, MissingTarget, RateMismatch, UsageError
from src.utils.seeding import derive_seed, make_rng

logger = logging.getLogger("evaluation")

Strata = Union[str, Sequence[str]]


def _strata_keys(data: FeatureSet, by: Strata) -> List[Tuple]:
    fields = [by] if isinstance(by, str) else list(by)
    for name in fields:
        if name not in SampleLabels.model_fields:
            raise MissingTarget(f"unknown label field '{name}'")
    return [tuple(label_key(labels.get(name)) for name in fields) for labels in data.labels]


def stratified_split(
    data: FeatureSet, ratio: float = 0.6, seed: int = 0, by: Strata = "location"
) -> Tuple[FeatureSet, FeatureSet]:
    """Split each class round(ratio * n_c) / rest, shuffling within the class.

    ``by`` names the label field (or fields) defining the classes.
    """
    if not 0 < ratio < 1:
        raise UsageError(f"split ratio must lie in (0, 1), got {ratio}")
    keys = _strata_keys(data, by)
    groups: Dict[Tuple, List[int]] = {}
    for index, key in enumerate(keys):
        groups.setdefault(key, []).append(index)

    train_idx, test_idx = [], []
    for group_no, key in enumerate(sorted(groups)):
        members = np.array(groups[key])
        if members.size < 2:
            raise ClassTooSmall(f"class {key} has {members.size} sample(s); at least 2 are needed")
        n_train = int(math.floor(ratio * members.size + 0.5))
        n_train = min(max(n_train, 1), members.size - 1)
        shuffled = make_rng(seed, "split", group_no).permutation(members)
        train_idx.extend(shuffled[:n_train].tolist())
        test_idx.extend(shuffled[n_train:].tolist())

    return data.subset(sorted(train_idx)), data.subset(sorted(test_idx))


def shuffle_split(data: FeatureSet, ratio: float = 0.6, seed: int = 0) -> Tuple[FeatureSet, FeatureSet]:
    """Plain seeded random split for continuous targets"""
    if not 0 < ratio < 1:
        raise UsageError(f"split ratio must lie in (0, 1), got {ratio}")
    n = len(data)
    if n < 2:
        raise ClassTooSmall("need at least 2 samples to split")
    n_train = min(max(int(math.floor(ratio * n + 0.5)), 1), n - 1)
    order = make_rng(seed, "shuffle-split").permutation(n)
    return data.subset(sorted(order[:n_train].tolist())), data.subset(sorted(order[n_train:].tolist()))


def acr(confusion: np.ndarray) -> float:
    """Mean per-class recall over the rows that hold test samples"""
    confusion = np.asarray(confusion, dtype=np.float64)
    totals = confusion.sum(axis=1)
    present = totals > 0
    if not present.any():
        return 0.0
    recalls = np.diag(confusion)[present] / totals[present]
    return float(np.mean(recalls))


def evaluate(model: Union[SensorModel, Predictor], test: FeatureSet) -> EvalReport:
    target = model.target
    if target not in SampleLabels.model_fields:
        raise MissingTarget(f"test labels have no field '{target}'")
    return score_predictions(target, model.is_regressor, test.targets(target), predict_many(model, test))


def score_predictions(target: str, is_regressor: bool, truths: List[Any], predictions: List[Any]) -> EvalReport:
    """Report for given ground truth and predictions"""
    if is_regressor:
        y = np.asarray(truths, dtype=np.float64)
        y_hat = np.asarray(predictions, dtype=np.float64)
        rmse = float(np.sqrt(np.mean((y_hat - y) ** 2))) if y.size else 0.0
        counts: Dict[str, int] = {}
        for t in truths:
            counts[label_str(t)] = counts.get(label_str(t), 0) + 1
        report = EvalReport(
            target=target,
            task_kind="regression",
            rmse=rmse,
            n_test=len(truths),
            per_class_counts=counts,
            truths=[float(t) for t in y],
            predictions=[float(p) for p in y_hat],
        )
        logger.info(f"Evaluated {target} regression on {len(truths)} samples: RMSE={rmse:.4f}")
        return report

    classes = sorted(set(truths) | set(predictions), key=label_key)
    names = [label_str(c) for c in classes]
    counts_matrix = confusion_matrix(
        [label_str(t) for t in truths], [label_str(p) for p in predictions], labels=names
    ).astype(np.float64)
    totals = counts_matrix.sum(axis=1, keepdims=True)
    normalized = np.divide(counts_matrix, totals, out=np.zeros_like(counts_matrix), where=totals > 0)
    score = acr(counts_matrix)
    report = EvalReport(
        target=target,
        task_kind="classification",
        classes=names,
        confusion=normalized.tolist(),
        acr=score,
        n_test=len(truths),
        per_class_counts={name: int(total) for name, total in zip(names, totals.ravel()) if total > 0},
        truths=list(truths),
        predictions=list(predictions),
    )
    logger.info(f"Evaluated {target} classification on {len(truths)} samples: ACR={score:.4f}")
    return report


def snr_estimate(active: Recording, passive: Recording) -> float:
    """10*log10(P_active / P_passive) over the common length; +inf for a silent passive recording"""
    if active.waveform.sample_rate_hz != passive.waveform.sample_rate_hz:
        raise RateMismatch(
            f"active rate {active.waveform.sample_rate_hz} Hz != passive rate {passive.waveform.sample_rate_hz} Hz"
        )
    n = min(len(active.waveform), len(passive.waveform))
    p_active = float(np.mean(active.waveform.samples[:n] ** 2))
    p_passive = float(np.mean(passive.waveform.samples[:n] ** 2))
    if p_passive == 0:
        return math.inf
    if p_active == 0:
        return -math.inf
    return 10 * math.log10(p_active / p_passive)


def permute_labels(data: FeatureSet, target: str, seed: int) -> FeatureSet:
    """Shuffle one label field across samples, leaving the features untouched"""
    values = data.targets(target)
    order = make_rng(seed, "permute", target).permutation(len(values))
    labels = [
        labels.model_copy(update={target: values[j]}) for labels, j in zip(data.labels, order)
    ]
    return data.with_labels(labels)


def permutation_control(
    train: FeatureSet, test: FeatureSet, target: str, learner: Dict[str, Any], seed: int = 0, rounds: int = 1
) -> EvalReport:
    """Train on label-permuted data; the score should sit at chance level.

    With several rounds every round draws its own permutation and the
    predictions of all permuted models are pooled into one report.
    """
    if rounds < 1:
        raise UsageError(f"rounds must be >= 1, got {rounds}")
    if target not in SampleLabels.model_fields:
        raise MissingTarget(f"test labels have no field '{target}'")
    truths, predictions = [], []
    for r in range(rounds):
        round_seed = seed if r == 0 else derive_seed(seed, "permutation", r)
        model = fit(permute_labels(train, target, round_seed), target, learner)
        truths.extend(test.targets(target))
        predictions.extend(predict_many(model, test))
    return score_predictions(target, model.is_regressor, truths, predictions)
