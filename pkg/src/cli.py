"""Command-line front end: ``python -m src.cli <subcommand> ...``

Exit codes: 0 on success, 1 on a data error, 2 on a usage error.
"""
import argparse
import itertools
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from src.config import settings as cfg
from src.config.settings import get_settings
from src.models.domain import ActuatorState, Impulse, ParamGrid, Passive, Recording, SoundKind, SoundSpec, Stimulus
from src.models.schemas import ExperimentConfig
from src.services import dataset_io, experiments
from src.services.evaluation import evaluate, shuffle_split, snr_estimate, stratified_split
from src.services.features import featurize
from src.services.sensor_models import fit, grid_search, predict_many
from src.services.signal_gen import impulse, synthesize
from src.services.virtual_actuator import sample_dataset
from src.utils.errors import AcousticSensingError, UsageError
from src.utils.logging_config import setup_logging
from src.utils.validation import validate_jobs

logger = logging.getLogger("cli")

ABLATION_TASKS = ["noise", "pose", "sound-grid", "volume", "transfer", "interference"]

KIND_ALIASES = {
    "sine": SoundKind.SINE,
    "sweep": SoundKind.LOG_SWEEP,
    "logsweep": SoundKind.LOG_SWEEP,
    "white": SoundKind.WHITE_NOISE,
    "whitenoise": SoundKind.WHITE_NOISE,
    "band": SoundKind.BAND_NOISE,
    "bandnoise": SoundKind.BAND_NOISE,
}
STIMULUS_KINDS = sorted(KIND_ALIASES) + ["impulse", "passive"]


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------
def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _ints(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _words(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _kind(text: str) -> SoundKind:
    try:
        return KIND_ALIASES[text.lower()]
    except KeyError:
        try:
            return SoundKind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown sound kind '{text}'")


def _add_stimulus_args(parser: argparse.ArgumentParser, kinds: Sequence[str]) -> None:
    group = parser.add_argument_group("stimulus")
    group.add_argument("--kind", choices=kinds, help="stimulus kind")
    group.add_argument("--dur", type=float, help="duration in seconds")
    group.add_argument("--rate", type=int, default=None, help="sample rate in Hz")
    group.add_argument("--volume", type=float, default=None, help="amplitude fraction in (0, 1]")
    group.add_argument("--sound-seed", type=int, default=None, help="seed of noise stimuli")
    group.add_argument("--freq", type=float, default=None, help="sine frequency in Hz")
    group.add_argument("--f-start", type=float, default=None, help="sweep start frequency in Hz")
    group.add_argument("--f-end", type=float, default=None, help="sweep end frequency in Hz")
    group.add_argument("--low", type=float, default=None, help="band-noise lower edge in Hz")
    group.add_argument("--high", type=float, default=None, help="band-noise upper edge in Hz")


def _stimulus_from_args(args: argparse.Namespace) -> Optional[Stimulus]:
    """Stimulus described by the flags, or None when no --kind was given"""
    if args.kind is None:
        return None
    if args.dur is None:
        raise UsageError("--dur is required together with --kind")
    rate = {"sample_rate_hz": args.rate} if args.rate is not None else {}
    if args.kind == "passive":
        return Passive(duration_s=args.dur, **rate)
    if args.kind == "impulse":
        return Impulse(duration_s=args.dur, volume=args.volume if args.volume is not None else 1.0, **rate)
    fields = {
        "volume": args.volume,
        "seed": args.sound_seed,
        "sine_freq_hz": args.freq,
        "f_start_hz": args.f_start,
        "f_end_hz": args.f_end,
        "band_low_hz": args.low,
        "band_high_hz": args.high,
    }
    overrides = {name: value for name, value in fields.items() if value is not None}
    return SoundSpec(kind=_kind(args.kind), duration_s=args.dur, **rate, **overrides)


def _load_document(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f) or {}
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}")
    except yaml.YAMLError as e:
        raise UsageError(f"config {path} is not valid YAML: {e}")
    if not isinstance(document, dict):
        raise UsageError(f"config {path} must hold a mapping")
    return document


def _experiment_config(
    args: argparse.Namespace,
    document: Dict[str, Any],
    overrides: Dict[str, Any],
    stimulus: Optional[Stimulus] = None,
) -> ExperimentConfig:
    """Merge a YAML document with flag overrides; flags win.

    Only sound stimuli go into the config; impulse and passive recording are sensing modes.
    """
    merged = {**document, **{k: v for k, v in overrides.items() if v is not None}}
    if isinstance(stimulus, SoundSpec):
        merged["stimulus"] = stimulus.model_dump()
    elif stimulus is not None:
        raise UsageError(f"--kind {stimulus.kind} selects a sensing mode; use --mode instead")
    if getattr(args, "jobs", None) is not None:
        merged["jobs"] = args.jobs
    merged.setdefault("jobs", get_settings().jobs)
    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        first = e.errors(include_url=False)[0]
        location = ".".join(str(part) for part in first["loc"])
        raise UsageError(f"invalid experiment config: {location}: {first['msg']}")


def _jobs(args: argparse.Namespace) -> int:
    jobs = args.jobs if getattr(args, "jobs", None) is not None else get_settings().jobs
    ok, error = validate_jobs(jobs)
    if not ok:
        raise UsageError(error)
    return jobs


def _output_dir(path: Optional[str], name: str) -> Path:
    return Path(path) if path else Path(get_settings().output_root) / name


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def cmd_gen_sound(args: argparse.Namespace) -> int:
    stimulus = _stimulus_from_args(args)
    if isinstance(stimulus, Passive):
        raise UsageError("a passive stimulus has no waveform to write")
    if isinstance(stimulus, Impulse):
        waveform = impulse(stimulus.duration_s, stimulus.sample_rate_hz, stimulus.volume)
    else:
        waveform = synthesize(stimulus)
    dataset_io.write_wav(args.out, waveform)
    logger.info(f"Wrote {len(waveform)} samples at {waveform.sample_rate_hz} Hz to {args.out}")
    print(f"{args.out}: {len(waveform)} samples")
    return 0


def _states(args: argparse.Namespace, locations: Sequence[str]) -> List[ActuatorState]:
    states = []
    for location, force, material, inflation, temperature, pose in itertools.product(
        locations, args.forces, args.materials, args.inflations, args.temperatures, args.poses
    ):
        base = {"inflation_kpa": inflation, "temperature_c": temperature, "pose_id": pose}
        if location == cfg.NO_CONTACT:
            states.append(ActuatorState(**base))
            continue
        try:
            position: Any = float(location)
        except ValueError:
            position = location
        states.append(ActuatorState(contact_location=position, contact_force_n=force, material=material, **base))
    return list(dict.fromkeys(states))


def cmd_simulate(args: argparse.Namespace) -> int:
    document = _load_document(args.config)
    flagged = _stimulus_from_args(args)
    config = _experiment_config(
        args,
        {**document, "task": document.get("task", "location6")},
        {"seed": args.seed, "repeats": args.repeats},
        flagged if isinstance(flagged, SoundSpec) else None,
    )
    model = experiments.build_model(config.simulator)
    if flagged is not None and not isinstance(flagged, SoundSpec):
        stimulus = flagged
    else:
        stimulus = experiments.resolve_stimulus(config.mode, config.stimulus or experiments.sweep())
    states = _states(args, args.locations)
    recordings = sample_dataset(
        model,
        states,
        stimulus,
        config.repeats or cfg.DEFAULT_REPEATS,
        config.seed,
        external_level_db=args.external_db,
        jobs=_jobs(args),
    )
    manifest = dataset_io.write_dataset(recordings, args.out, actuators=[model])
    print(f"{args.out}: {len(manifest.entries)} recordings")
    return 0


def cmd_featurize(args: argparse.Namespace) -> int:
    recordings = dataset_io.read_dataset(args.data)
    data = featurize(recordings, normalize=args.normalize)
    dataset_io.write_features(data, args.out)
    print(f"{args.out}: {len(data)} samples x {data.dim} bins")
    return 0


def _learner_params(args: argparse.Namespace) -> Dict[str, Any]:
    if args.method == "svc":
        return {"method": "svc", "C": args.C, "max_epochs": args.max_epochs, "standardize": args.standardize}
    return {"method": "knn", "k": args.k, "metric": args.metric, "mode": args.mode}


def cmd_train(args: argparse.Namespace) -> int:
    data = dataset_io.read_features(args.features)
    params = _learner_params(args)
    if not 0 <= args.holdout < 1:
        raise UsageError(f"--holdout must lie in [0, 1), got {args.holdout}")
    model = fit(data, args.target, params)
    if args.holdout > 0:
        ratio = 1 - args.holdout
        if model.is_regressor:
            train, test = shuffle_split(data, ratio, args.seed)
        else:
            train, test = stratified_split(data, ratio, args.seed, args.target)
        report = evaluate(fit(train, args.target, params), test)
        model = model.model_copy(update={"report": report})
        logger.info(f"Held-out estimate on {report.n_test} samples attached to {args.out}")
    dataset_io.save_model(model, args.out)
    print(f"{args.out}: {model.kind.value} on {len(data)} samples")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model = dataset_io.load_model(args.model)
    data = dataset_io.read_features(args.features)
    predictions = predict_many(model, data)
    frame = pd.DataFrame({"index": np.arange(len(predictions)), model.target: predictions})
    if args.out:
        frame.to_csv(args.out, index=False)
        print(f"{args.out}: {len(frame)} predictions")
    else:
        print(frame.to_string(index=False))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = dataset_io.load_model(args.model)
    data = dataset_io.read_features(args.features)
    report = evaluate(model, data)
    dataset_io.save_report(report, _output_dir(args.out, "evaluate"), args.name)
    if report.task_kind == "classification":
        print(f"ACR {report.acr:.4f} on {report.n_test} samples")
    else:
        print(f"RMSE {report.rmse:.4f} on {report.n_test} samples")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    document = _load_document(args.config)
    task = args.task or document.get("task")
    if task not in ABLATION_TASKS:
        raise UsageError(f"ablate needs --task, one of {', '.join(ABLATION_TASKS)}")
    overrides = {
        "task": task,
        "seed": args.seed,
        "repeats": args.repeats,
        "fractions": args.fractions,
        "levels_db": args.levels,
        "kinds": args.kinds,
        "durations_s": args.durations,
        "n_poses": args.poses,
        "actuator_ids": args.actuators,
        "neighbors": args.neighbors,
        "mode": args.mode,
    }
    return _run(args, _experiment_config(args, document, overrides, _stimulus_from_args(args)))


def cmd_grid_search(args: argparse.Namespace) -> int:
    if args.config:
        document = _load_document(args.config)
        overrides = {"task": "grid-search", "seed": args.seed, "folds": args.folds}
        return _run(args, _experiment_config(args, document, overrides))

    if not args.features or not args.target:
        raise UsageError("grid-search needs --features and --target, or --config")
    data = dataset_io.read_features(args.features)
    grid = ParamGrid(method=args.method, params=dict(cfg.KNN_GRID if args.method == "knn" else cfg.SVC_GRID))
    result = grid_search(data, args.target, grid, folds=args.folds, seed=args.seed or 0, jobs=_jobs(args))
    out = _output_dir(args.out, "grid-search")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.method}_search.json"
    path.write_text(result.model_dump_json(indent=2), encoding="utf-8")
    print(f"best {result.best} score {result.best_score:.4f} -> {path}")
    return 0


def cmd_snr(args: argparse.Namespace) -> int:
    active_wave = dataset_io.read_wav(args.active)
    passive_wave = dataset_io.read_wav(args.passive)
    active = Recording(waveform=active_wave, state=ActuatorState(), actuator_id="file")
    passive = Recording(waveform=passive_wave, state=ActuatorState(), actuator_id="file")
    print(f"SNR {snr_estimate(active, passive):.2f} dB")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    document = _load_document(args.config)
    return _run(args, _experiment_config(args, document, {"seed": args.seed}))


def _run(args: argparse.Namespace, config: ExperimentConfig) -> int:
    ok, error = validate_jobs(config.jobs)
    if not ok:
        raise UsageError(error)
    outcome = experiments.run_experiment(config)
    directory = Path(args.out) if getattr(args, "out", None) else (
        Path(config.output_dir) if config.output_dir else _output_dir(None, f"{config.task}_seed{config.seed}")
    )
    written = experiments.save_outcome(outcome, directory)
    for name, scores in outcome.summary().items():
        print(f"{config.task}/{name}: {scores}")
    print(f"{len(written)} files written to {directory}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from src.main import serve

    serve(host=args.host, port=args.port, reload=args.reload)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acoustic", description="Acoustic sensing toolkit")
    parser.add_argument("--log-level", default=None, help="override ACOUSTIC_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("gen-sound", help="synthesize a stimulus to a WAV file")
    _add_stimulus_args(p, [k for k in STIMULUS_KINDS if k != "passive"])
    p.add_argument("--out", required=True, help="output WAV path")
    p.set_defaults(handler=cmd_gen_sound, kind_required=True)

    p = sub.add_parser("simulate", help="record a dataset from the virtual actuator")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--config", help="experiment YAML (simulator, stimulus, mode)")
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--locations", type=_words, default=list(cfg.CONTACT_LOCATIONS) + [cfg.NO_CONTACT],
                   help="comma-separated locations; numbers are positions in mm")
    p.add_argument("--forces", type=_floats, default=[cfg.DEFAULT_CONTACT_FORCE_N])
    p.add_argument("--materials", type=_words, default=[cfg.NO_MATERIAL])
    p.add_argument("--inflations", type=_floats, default=[0.0])
    p.add_argument("--temperatures", type=_floats, default=[cfg.REFERENCE_TEMPERATURE_C])
    p.add_argument("--poses", type=_ints, default=[0])
    p.add_argument("--external-db", type=float, default=None, help="environment noise level in dB")
    p.add_argument("--jobs", type=int, default=None)
    _add_stimulus_args(p, STIMULUS_KINDS)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("featurize", help="turn a dataset into amplitude-spectrum features")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="features .npz path")
    p.add_argument("--normalize", action="store_true", help="L2-normalize each spectrum")
    p.set_defaults(handler=cmd_featurize)

    p = sub.add_parser("train", help="fit a KNN or linear SVC model")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--method", choices=["knn", "svc"], default="knn")
    p.add_argument("--k", type=int, default=cfg.KNN_DEFAULT_K)
    p.add_argument("--metric", choices=["L1", "L2"], default="L2")
    p.add_argument("--mode", choices=["classify", "regress"], default="classify")
    p.add_argument("--C", type=float, default=cfg.SVC_DEFAULT_C)
    p.add_argument("--max-epochs", type=int, default=cfg.SVC_MAX_EPOCHS)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--holdout", type=float, default=1 - cfg.DEFAULT_SPLIT_RATIO, help="fraction held out for the attached report; 0 skips it")
    p.add_argument("--seed", type=int, default=0, help="seed of the held-out split")
    p.add_argument("--out", required=True, help="model .npz path")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="predict targets for a feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None, help="CSV path; prints to stdout when omitted")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="score a model on labelled features")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None, help="report directory")
    p.add_argument("--name", default="report")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("ablate", help="run an ablation study")
    p.add_argument("--task", choices=ABLATION_TASKS, default=None)
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--config", help="experiment YAML")
    p.add_argument("--out", default=None, help="results directory")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--mode", choices=["active", "passive", "dynamic"], default=None)
    p.add_argument("--fractions", type=_floats, default=None)
    p.add_argument("--levels", type=_floats, default=None, help="noise levels in dB")
    p.add_argument("--kinds", type=lambda text: [_kind(word) for word in _words(text)], default=None)
    p.add_argument("--durations", type=_floats, default=None)
    p.add_argument("--poses", type=int, default=None)
    p.add_argument("--actuators", type=_words, default=None)
    p.add_argument("--neighbors", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    _add_stimulus_args(p, sorted(KIND_ALIASES))
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("grid-search", help="cross-validated hyperparameter search")
    p.add_argument("--config", help="experiment YAML; runs the material grid-search task")
    p.add_argument("--features", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--method", choices=["knn", "svc"], default="knn")
    p.add_argument("--folds", type=int, default=cfg.DEFAULT_FOLDS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(handler=cmd_grid_search)

    p = sub.add_parser("snr", help="SNR in dB of an active recording against its passive twin")
    p.add_argument("--active", required=True)
    p.add_argument("--passive", required=True)
    p.set_defaults(handler=cmd_snr)

    p = sub.add_parser("run", help="run one experiment YAML end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the document's seed")
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--reload", action="store_true")
    p.set_defaults(handler=cmd_serve)

    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(level=args.log_level, to_file=False)
    try:
        if getattr(args, "kind_required", False) and args.kind is None:
            raise UsageError("--kind is required")
        return args.handler(args)
    except UsageError as e:
        print(f"{parser.prog} {args.command}: error: {e.message}", file=sys.stderr)
        return 2
    except AcousticSensingError as e:
        print(f"{parser.prog} {args.command}: {type(e).__name__}: {e.message}", file=sys.stderr)
        return 1
    except ValidationError as e:
        first = e.errors(include_url=False)[0]
        print(f"{parser.prog} {args.command}: error: {first['msg']}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(cli_main())
