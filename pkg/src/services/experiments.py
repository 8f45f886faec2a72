"""Experiment and ablation runners on simulated datasets.

Every runner is reproducible from its ``seed``: dataset noise, stimulus noise,
splits and cross-validation folds all derive from it.
"""
import itertools
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import settings as cfg
from src.models.domain import (
    AblationCell,
    AblationResult,
    ActuatorModel,
    ActuatorState,
    EvalReport,
    FeatureSet,
    GridSearchResult,
    Impulse,
    ParamGrid,
    Passive,
    SoundKind,
    SoundSpec,
    Stimulus,
    Waveform,
)
from src.models.schemas import ExperimentConfig, ExperimentOutcome, LearnerConfig, SimulatorConfig
from src.services import dataset_io
from src.services.evaluation import evaluate, permutation_control, shuffle_split, snr_estimate, stratified_split
from src.services.features import featurize
from src.services.sensor_models import fit, grid_search
from src.services.signal_gen import render, sample_count
from src.services.virtual_actuator import (
    NeighborSound,
    default_model,
    external_noise,
    modulate,
    noise_free,
    sample_dataset,
)
from src.utils.errors import UsageError
from src.utils.seeding import derive_seed, make_rng

logger = logging.getLogger("experiments")

Strata = Union[str, Sequence[str]]


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------
def build_model(sim: Optional[SimulatorConfig] = None, actuator_id: Optional[str] = None) -> ActuatorModel:
    sim = sim or SimulatorConfig()
    if sim.path:
        model = dataset_io.load_actuator(sim.path)
        if actuator_id is not None:
            model = model.model_copy(update={"actuator_id": actuator_id})
    else:
        model = default_model(actuator_id or sim.actuator_id, sim.model_seed, jitter=sim.jitter)
    if sim.noise_free:
        model = noise_free(model)
    overrides = {
        name: getattr(sim, name)
        for name in ("insulation_db", "mic_noise_rms", "state_jitter", "onset_click_level", "pose_noise_scale")
        if getattr(sim, name) is not None
    }
    return model.model_copy(update=overrides) if overrides else model


def sweep(duration_s: float = 1.0) -> SoundSpec:
    return SoundSpec(kind=SoundKind.LOG_SWEEP, duration_s=duration_s)


def white_noise(duration_s: float, seed: int) -> SoundSpec:
    return SoundSpec(kind=SoundKind.WHITE_NOISE, duration_s=duration_s, seed=seed)


def resolve_stimulus(mode: str, stimulus: Stimulus) -> Stimulus:
    """Map a sensing mode onto the stimulus actually played"""
    if mode == "active":
        return stimulus
    if mode == "passive":
        return Passive(duration_s=stimulus.duration_s, sample_rate_hz=stimulus.sample_rate_hz)
    if mode == "dynamic":
        return Impulse(duration_s=stimulus.duration_s, sample_rate_hz=stimulus.sample_rate_hz)
    raise UsageError(f"unknown sensing mode '{mode}'")


def location_states(
    locations: Sequence[str] = cfg.CONTACT_LOCATIONS, include_none: bool = False, pose_id: int = 0
) -> List[ActuatorState]:
    states = [
        ActuatorState(contact_location=loc, contact_force_n=cfg.DEFAULT_CONTACT_FORCE_N, pose_id=pose_id)
        for loc in locations
    ]
    if include_none:
        states.append(ActuatorState(pose_id=pose_id))
    return states


def collect(
    model: ActuatorModel,
    states: Sequence[ActuatorState],
    stimulus: Stimulus,
    repeats: int,
    seed: int,
    jobs: int = 1,
    normalize: bool = False,
    **kwargs,
) -> FeatureSet:
    recordings = sample_dataset(model, states, stimulus, repeats, seed, jobs=jobs, **kwargs)
    return featurize(recordings, normalize=normalize)


def train_and_evaluate(
    data: FeatureSet,
    target: str,
    learner: Dict[str, Any],
    ratio: float,
    seed: int,
    by: Optional[Strata] = None,
) -> EvalReport:
    train, test = stratified_split(data, ratio, seed, by or target)
    return evaluate(fit(train, target, learner), test)


def _knn(learner: Optional[LearnerConfig], regress: bool = False) -> Dict[str, Any]:
    return (learner or LearnerConfig()).params(regress=regress)


def _union(parts: List[FeatureSet]) -> FeatureSet:
    return parts[0].model_copy(
        update={
            "matrix": np.vstack([p.matrix for p in parts]),
            "labels": [label for p in parts for label in p.labels],
        }
    )


def _stderr(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


# ---------------------------------------------------------------------------
# Sensing experiments
# ---------------------------------------------------------------------------
def run_location_experiment(
    sim: Optional[SimulatorConfig] = None,
    stimulus: Optional[Stimulus] = None,
    mode: str = "active",
    seed: int = 0,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> EvalReport:
    """Six contact locations x ``repeats``, 3:2 split, KNN"""
    model = build_model(sim)
    played = resolve_stimulus(mode, stimulus or sweep())
    data = collect(model, location_states(), played, repeats, seed, jobs, normalize)
    report = train_and_evaluate(data, "location", _knn(learner), ratio, seed)
    logger.info(f"Location experiment ({mode}): ACR={report.acr:.4f}")
    return report


def run_regression_experiment(
    sim: Optional[SimulatorConfig] = None,
    stimulus: Optional[Stimulus] = None,
    mode: str = "active",
    seed: int = 0,
    positions: int = cfg.REGRESSION_POSITIONS,
    spacing_mm: float = cfg.REGRESSION_SPACING_MM,
    repeats: int = cfg.REGRESSION_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> EvalReport:
    """Continuous contact positions along the finger, KNN regressor, RMSE in mm.

    The default neighbour count equals the training repeats per position.
    """
    model = build_model(sim)
    played = resolve_stimulus(mode, stimulus or sweep())
    states = [
        ActuatorState(contact_location=i * spacing_mm, contact_force_n=cfg.DEFAULT_CONTACT_FORCE_N)
        for i in range(positions)
    ]
    data = collect(model, states, played, repeats, seed, jobs, normalize)
    learner = learner or LearnerConfig(k=cfg.REGRESSION_K)
    report = train_and_evaluate(data, "location", _knn(learner, regress=True), ratio, seed)
    logger.info(f"Regression experiment ({mode}): RMSE={report.rmse:.3f} mm")
    return report


def run_force_experiment(
    sim: Optional[SimulatorConfig] = None,
    stimulus: Optional[Stimulus] = None,
    mode: str = "active",
    seed: int = 0,
    forces_n: Sequence[float] = cfg.FORCE_LEVELS_N,
    sides: Sequence[str] = cfg.FORCE_SIDES,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> EvalReport:
    """Force classes pressed from several sides; the side is a nuisance factor"""
    model = build_model(sim)
    played = resolve_stimulus(mode, stimulus or white_noise(0.02, seed))
    states = [ActuatorState(contact_location=side, contact_force_n=f) for f in forces_n for side in sides]
    data = collect(model, states, played, repeats, seed, jobs, normalize)
    report = train_and_evaluate(data, "force", _knn(learner), ratio, seed, by=("force", "location"))
    logger.info(f"Force experiment ({mode}): ACR={report.acr:.4f}")
    return report


def run_material_experiment(
    sim: Optional[SimulatorConfig] = None,
    stimulus: Optional[Stimulus] = None,
    seed: int = 0,
    materials: Sequence[str] = cfg.MATERIALS,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> Dict[str, EvalReport]:
    """Material of the touched object; linear SVC next to default KNN on the same split"""
    data = _material_data(sim, stimulus, seed, materials, repeats, jobs, normalize)
    train, test = stratified_split(data, ratio, seed, ("material", "location"))
    svc = learner if learner is not None and learner.method == "svc" else LearnerConfig(method="svc")
    reports = {
        "svc": evaluate(fit(train, "material", svc.params()), test),
        "knn": evaluate(fit(train, "material", LearnerConfig().params()), test),
    }
    logger.info(f"Material experiment: SVC ACR={reports['svc'].acr:.4f}, KNN ACR={reports['knn'].acr:.4f}")
    return reports


def _material_data(sim, stimulus, seed, materials, repeats, jobs, normalize) -> FeatureSet:
    model = build_model(sim)
    states = [
        ActuatorState(contact_location=loc, contact_force_n=cfg.DEFAULT_CONTACT_FORCE_N, material=m)
        for m in materials
        for loc in cfg.CONTACT_LOCATIONS
    ]
    return collect(model, states, stimulus or sweep(), repeats, seed, jobs, normalize)


def run_temperature_experiment(
    sim: Optional[SimulatorConfig] = None,
    stimulus: Optional[Stimulus] = None,
    modes: Sequence[str] = ("active", "passive"),
    seed: int = 0,
    samples: int = cfg.TEMPERATURE_SAMPLES,
    temperature_range: Tuple[float, float] = cfg.TEMPERATURE_RANGE_C,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.TEMPERATURE_TRAIN_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> Dict[str, EvalReport]:
    """Air temperature regression over random temperatures, one report per sensing mode"""
    model = build_model(sim)
    low, high = temperature_range
    temperatures = make_rng(seed, "temperature").uniform(low, high, samples)
    states = [ActuatorState(temperature_c=float(t)) for t in temperatures]
    base = stimulus or white_noise(1.0, seed)

    reports = {}
    for mode in modes:
        data = collect(model, states, resolve_stimulus(mode, base), 1, seed, jobs, normalize)
        train, test = shuffle_split(data, ratio, seed)
        reports[mode] = evaluate(fit(train, "temperature", _knn(learner, regress=True)), test)
        logger.info(f"Temperature experiment ({mode}): RMSE={reports[mode].rmse:.3f} degC")
    return reports


def run_simultaneous_experiment(
    sim: Optional[SimulatorConfig] = None,
    stimulus: Optional[Stimulus] = None,
    mode: str = "active",
    seed: int = 0,
    forces_n: Sequence[float] = cfg.SIMULTANEOUS_FORCES_N,
    inflations_kpa: Sequence[float] = cfg.SIMULTANEOUS_INFLATIONS_KPA,
    locations: Sequence[str] = cfg.CONTACT_LOCATIONS,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
    control: bool = False,
) -> Dict[str, EvalReport]:
    """Location, force and inflation sensed from the same recordings with three models.

    With ``control`` each target is also scored by models trained on
    label-permuted data, pooled under ``<target>_permuted``.
    """
    model = build_model(sim)
    played = resolve_stimulus(mode, stimulus or white_noise(0.02, seed))
    states = []
    for loc in list(locations) + [cfg.NO_CONTACT]:
        for force in forces_n:
            for inflation in inflations_kpa:
                if loc == cfg.NO_CONTACT:
                    states.append(ActuatorState(inflation_kpa=inflation))
                else:
                    states.append(ActuatorState(contact_location=loc, contact_force_n=force, inflation_kpa=inflation))
    data = collect(model, states, played, repeats, seed, jobs, normalize)
    train, test = stratified_split(data, ratio, seed, ("location", "force", "inflation"))

    reports = {}
    for target in ("location", "force", "inflation"):
        reports[target] = evaluate(fit(train, target, _knn(learner)), test)
        if control:
            reports[f"{target}_permuted"] = permutation_control(
                train, test, target, _knn(learner), seed, cfg.PERMUTATION_ROUNDS
            )
    logger.info(
        "Simultaneous experiment: "
        + ", ".join(f"{t} ACR={r.acr:.4f}" for t, r in reports.items())
    )
    return reports


# ---------------------------------------------------------------------------
# Ablations
# ---------------------------------------------------------------------------
def run_noise_robustness(
    sim: Optional[SimulatorConfig] = None,
    levels_db: Sequence[float] = cfg.NOISE_LEVELS_DB,
    stimulus: Optional[Stimulus] = None,
    mode: str = "active",
    seed: int = 0,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> AblationResult:
    """Train in a quiet room, test with environment noise at each level"""
    result = AblationResult(name="noise", axes=["level_db"])
    if not levels_db:
        logger.warning("Noise robustness called with no levels")
        return result

    model = build_model(sim)
    played = resolve_stimulus(mode, stimulus or sweep())
    states = location_states()
    quiet = collect(model, states, played, repeats, seed, jobs, normalize, external_level_db=cfg.QUIET_ROOM_DB)
    train, _ = stratified_split(quiet, ratio, seed, "location")
    sensor = fit(train, "location", _knn(learner))

    rendered = render(played)
    silence = Passive(duration_s=played.duration_s, sample_rate_hz=played.sample_rate_hz)
    for level in levels_db:
        noisy = collect(model, states, played, repeats, seed, jobs, normalize, external_level_db=level)
        _, test = stratified_split(noisy, ratio, seed, "location")
        report = evaluate(sensor, test)

        n = len(rendered) if isinstance(rendered, Waveform) else sample_count(played.duration_s, played.sample_rate_hz)
        external, environment = external_noise(level, n, derive_seed(seed, "snr", str(level)), model.sample_rate_hz)
        snr_seed = derive_seed(seed, "snr-recording")
        active_rec = modulate(model, states[0], rendered, external, snr_seed, environment=environment)
        passive_rec = modulate(model, states[0], silence, external, snr_seed, environment=environment)
        snr = snr_estimate(active_rec, passive_rec)

        result.cells.append(AblationCell(axes={"level_db": level}, score=report.acr, extra={"snr_db": snr}))
        logger.info(f"Noise {level} dB: ACR={report.acr:.4f}, SNR={snr:.1f} dB")
    return result


def run_pose_transfer(
    sim: Optional[SimulatorConfig] = None,
    n_poses: int = cfg.POSE_COUNT,
    train_combo_sizes: Sequence[int] = cfg.POSE_COMBO_SIZES,
    stimulus: Optional[Stimulus] = None,
    seed: int = 0,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> AblationResult:
    """Train on combinations of robot poses, test on the same and on the other poses"""
    model = build_model(sim)
    played = stimulus or white_noise(0.02, seed)
    splits = {}
    for pose in range(1, n_poses + 1):
        data = collect(
            model, location_states(include_none=True, pose_id=pose), played, repeats,
            derive_seed(seed, "pose", pose), jobs, normalize,
        )
        splits[pose] = stratified_split(data, ratio, seed, "location")

    result = AblationResult(name="pose", axes=["train_poses"])
    for size in train_combo_sizes:
        same_scores, transfer_scores = [], []
        for combo in itertools.combinations(range(1, n_poses + 1), size):
            sensor = fit(_union([splits[p][0] for p in combo]), "location", _knn(learner))
            same_scores.append(evaluate(sensor, _union([splits[p][1] for p in combo])).acr)
            others = [p for p in range(1, n_poses + 1) if p not in combo]
            if others:
                transfer_scores.append(evaluate(sensor, _union([splits[p][1] for p in others])).acr)
        if not same_scores:
            continue
        transfer = float(np.mean(transfer_scores)) if transfer_scores else float("nan")
        result.cells.append(
            AblationCell(
                axes={"train_poses": size},
                score=transfer,
                extra={
                    "same_acr": float(np.mean(same_scores)),
                    "same_stderr": _stderr(same_scores),
                    "transfer_stderr": _stderr(transfer_scores),
                    "combinations": float(len(same_scores)),
                },
            )
        )
        logger.info(f"Pose transfer, {size} training pose(s): same={np.mean(same_scores):.4f}, transfer={transfer:.4f}")
    return result


def run_sound_ablation(
    sim: Optional[SimulatorConfig] = None,
    kinds: Sequence[SoundKind] = tuple(SoundKind),
    durations_s: Sequence[float] = cfg.SOUND_DURATIONS_S,
    seed: int = 0,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> AblationResult:
    """Seven-class location task for every sound kind and duration"""
    model = build_model(sim)
    states = location_states(include_none=True)
    result = AblationResult(name="sound", axes=["kind", "duration_s"])
    for kind in kinds:
        for duration in durations_s:
            spec = SoundSpec(kind=SoundKind(kind), duration_s=duration, seed=seed)
            data = collect(model, states, spec, repeats, seed, jobs, normalize)
            report = train_and_evaluate(data, "location", _knn(learner), ratio, seed)
            result.cells.append(AblationCell(axes={"kind": SoundKind(kind).value, "duration_s": duration}, score=report.acr))
            logger.info(f"Sound {SoundKind(kind).value} {duration * 1000:g} ms: ACR={report.acr:.4f}")
    return result


def run_volume_ablation(
    sim: Optional[SimulatorConfig] = None,
    fractions: Sequence[float] = cfg.VOLUME_FRACTIONS,
    stimulus: Optional[SoundSpec] = None,
    seed: int = 0,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> AblationResult:
    """Seven-class location task per stimulus volume; volume 0 is passive sensing"""
    model = build_model(sim)
    base = stimulus or white_noise(0.02, seed)
    states = location_states(include_none=True)
    result = AblationResult(name="volume", axes=["fraction"])
    for fraction in fractions:
        if fraction == 0:
            played: Stimulus = Passive(duration_s=base.duration_s, sample_rate_hz=base.sample_rate_hz)
        else:
            if not 0 < fraction <= 1:
                raise UsageError(f"volume fraction must lie in [0, 1], got {fraction}")
            played = base.model_copy(update={"volume": base.volume * fraction})
        data = collect(model, states, played, repeats, seed, jobs, normalize)
        report = train_and_evaluate(data, "location", _knn(learner), ratio, seed)
        result.cells.append(AblationCell(axes={"fraction": fraction}, score=report.acr))
        logger.info(f"Volume {fraction:.0%}: ACR={report.acr:.4f}")
    return result


def run_actuator_transfer(
    sim: Optional[SimulatorConfig] = None,
    ids: Sequence[str] = cfg.TRANSFER_ACTUATORS,
    train_combo_sizes: Sequence[int] = (1, 2),
    stimulus: Optional[Stimulus] = None,
    seed: int = 0,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> AblationResult:
    """Models trained on some actuators, tested on the same and on other actuators"""
    played = stimulus or white_noise(0.02, seed)
    states = location_states(cfg.TRANSFER_CLASSES[:-1], include_none=True)
    splits = []
    for actuator_id in ids:
        model = build_model(sim, actuator_id=actuator_id)
        data = collect(model, states, played, repeats, derive_seed(seed, "actuator", actuator_id), jobs, normalize)
        splits.append(stratified_split(data, ratio, seed, "location"))

    result = AblationResult(name="transfer", axes=["train_actuators"])
    for size in train_combo_sizes:
        same_scores, cross_scores = [], []
        for combo in itertools.combinations(range(len(ids)), size):
            sensor = fit(_union([splits[i][0] for i in combo]), "location", _knn(learner))
            same_scores.append(evaluate(sensor, _union([splits[i][1] for i in combo])).acr)
            for other in range(len(ids)):
                if other not in combo:
                    cross_scores.append(evaluate(sensor, splits[other][1]).acr)
        if not same_scores:
            continue
        cross = float(np.mean(cross_scores)) if cross_scores else float("nan")
        result.cells.append(
            AblationCell(
                axes={"train_actuators": size},
                score=cross,
                extra={
                    "same_acr": float(np.mean(same_scores)),
                    "same_stderr": _stderr(same_scores),
                    "cross_stderr": _stderr(cross_scores),
                },
            )
        )
        logger.info(f"Actuator transfer, {size} training actuator(s): same={np.mean(same_scores):.4f}, cross={cross:.4f}")
    return result


def run_interference_experiment(
    sim: Optional[SimulatorConfig] = None,
    n_neighbors: int = cfg.INTERFERENCE_NEIGHBORS,
    stimulus: Optional[Stimulus] = None,
    seed: int = 0,
    repeats: int = cfg.DEFAULT_REPEATS,
    learner: Optional[LearnerConfig] = None,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> AblationResult:
    """Location sensing alone and with neighbouring fingers playing the same sound"""
    sim = sim or SimulatorConfig()
    model = build_model(sim)
    played = stimulus or sweep()
    rendered = render(played)
    result = AblationResult(name="interference", axes=["neighbors"])
    for count in sorted({0, n_neighbors}):
        neighbors = [
            NeighborSound(model=build_model(sim, actuator_id=f"{model.actuator_id}-neighbor{i + 1}"), waveform=rendered)
            for i in range(count)
        ]
        data = collect(model, location_states(), played, repeats, seed, jobs, normalize, neighbors=neighbors)
        report = train_and_evaluate(data, "location", _knn(learner), ratio, seed)
        result.cells.append(AblationCell(axes={"neighbors": count}, score=report.acr))
        logger.info(f"Interference with {count} neighbour(s): ACR={report.acr:.4f}")
    return result


def run_grid_search_experiment(
    sim: Optional[SimulatorConfig] = None,
    stimulus: Optional[Stimulus] = None,
    seed: int = 0,
    knn_grid: Optional[Dict[str, List[Any]]] = None,
    svc_grid: Optional[Dict[str, List[Any]]] = None,
    folds: int = cfg.DEFAULT_FOLDS,
    repeats: int = cfg.DEFAULT_REPEATS,
    ratio: float = cfg.DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    normalize: bool = False,
) -> Tuple[Dict[str, EvalReport], Dict[str, GridSearchResult]]:
    """Cross-validated KNN and SVC grids on the material task versus default KNN.

    The material data default to a 100 ms sweep.
    """
    data = _material_data(sim, stimulus or sweep(cfg.GRID_SEARCH_SWEEP_S), seed, cfg.MATERIALS, repeats, jobs, normalize)
    train, test = stratified_split(data, ratio, seed, ("material", "location"))

    searches = {
        "knn": grid_search(train, "material", ParamGrid(method="knn", params=knn_grid or cfg.KNN_GRID), folds, seed, jobs),
        "svc": grid_search(train, "material", ParamGrid(method="svc", params=svc_grid or cfg.SVC_GRID), folds, seed, jobs),
    }
    reports = {
        "default_knn": evaluate(fit(train, "material", LearnerConfig().params()), test),
        "best_knn": evaluate(fit(train, "material", {"method": "knn", **searches["knn"].best}), test),
        "best_svc": evaluate(fit(train, "material", {"method": "svc", **searches["svc"].best}), test),
    }
    logger.info(
        "Grid search experiment: " + ", ".join(f"{name} ACR={r.acr:.4f}" for name, r in reports.items())
    )
    return reports, searches


# ---------------------------------------------------------------------------
# Config-driven entry point
# ---------------------------------------------------------------------------
def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """Run the task named in ``config``"""
    common = {
        "sim": config.simulator,
        "seed": config.seed,
        "learner": config.learner,
        "ratio": config.split_ratio,
        "jobs": config.jobs,
        "normalize": config.normalize,
    }
    repeats = {"repeats": config.repeats} if config.repeats is not None else {}
    stimulus = config.stimulus
    outcome = ExperimentOutcome(task=config.task, seed=config.seed)
    task = config.task

    if task == "location6":
        outcome.reports["location"] = run_location_experiment(stimulus=stimulus, mode=config.mode, **common, **repeats)
    elif task == "regression30":
        outcome.reports["location"] = run_regression_experiment(stimulus=stimulus, mode=config.mode, **common, **repeats)
    elif task == "force3":
        outcome.reports["force"] = run_force_experiment(stimulus=stimulus, mode=config.mode, **common, **repeats)
    elif task == "material3":
        outcome.reports.update(run_material_experiment(stimulus=stimulus, **common, **repeats))
    elif task == "temperature":
        common.pop("ratio")
        outcome.reports.update(run_temperature_experiment(stimulus=stimulus, **common))
    elif task == "simultaneous700":
        outcome.reports.update(run_simultaneous_experiment(
                stimulus=stimulus, mode=config.mode, control=config.permutation_control, **common, **repeats
            ))
    elif task == "noise":
        outcome.ablations["noise"] = run_noise_robustness(
            levels_db=config.levels_db, stimulus=stimulus, mode=config.mode, **common, **repeats
        )
    elif task == "pose":
        outcome.ablations["pose"] = run_pose_transfer(
            n_poses=config.n_poses, train_combo_sizes=config.combo_sizes, stimulus=stimulus, **common, **repeats
        )
    elif task == "sound-grid":
        outcome.ablations["sound"] = run_sound_ablation(kinds=config.kinds, durations_s=config.durations_s, **common, **repeats)
    elif task == "volume":
        outcome.ablations["volume"] = run_volume_ablation(fractions=config.fractions, stimulus=stimulus, **common, **repeats)
    elif task == "transfer":
        sizes = [s for s in config.combo_sizes if s < len(config.actuator_ids)] or [1]
        outcome.ablations["transfer"] = run_actuator_transfer(
            ids=config.actuator_ids, train_combo_sizes=sizes, stimulus=stimulus, **common, **repeats
        )
    elif task == "interference":
        outcome.ablations["interference"] = run_interference_experiment(
            n_neighbors=config.neighbors, stimulus=stimulus, **common, **repeats
        )
    elif task == "grid-search":
        common.pop("learner")
        reports, searches = run_grid_search_experiment(
            stimulus=stimulus, knn_grid=config.knn_grid, svc_grid=config.svc_grid, folds=config.folds, **common, **repeats
        )
        outcome.reports.update(reports)
        outcome.searches.update(searches)
    else:
        raise UsageError(f"unknown task '{task}'")
    return outcome


def save_outcome(outcome: ExperimentOutcome, directory: Union[str, Path]) -> List[str]:
    """Write every report, ablation and search result of ``outcome`` below ``directory``"""
    root = Path(directory)
    written: List[str] = []
    for name, report in outcome.reports.items():
        written.extend(dataset_io.save_report(report, root, f"{outcome.task}_{name}").values())
    for name, ablation in outcome.ablations.items():
        written.extend(dataset_io.save_ablation(ablation, root, f"{outcome.task}_{name}").values())
    for name, search in outcome.searches.items():
        path = root / f"{outcome.task}_{name}_search.json"
        root.mkdir(parents=True, exist_ok=True)
        path.write_text(search.model_dump_json(indent=2), encoding="utf-8")
        written.append(str(path))
    summary = root / f"{outcome.task}_summary.json"
    root.mkdir(parents=True, exist_ok=True)
    document = {"task": outcome.task, "seed": outcome.seed, "scores": outcome.summary()}
    summary.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(str(summary))
    logger.info(f"Wrote {len(written)} result files to {root}")
    return written
