from typing import Any, Dict

from fastapi import APIRouter, Body, HTTPException, status
from pydantic import ValidationError

from src.config.settings import get_settings
from src.models.schemas import TASKS, ExperimentConfig, SnrRequest, SnrResponse
from src.services import experiments
from src.services.evaluation import snr_estimate
from src.services.signal_gen import render
from src.services.virtual_actuator import external_noise, modulate
from src.models.domain import ActuatorState, Passive
from src.utils.errors import AcousticSensingError
from src.utils.response_utils import create_response, json_safe, raise_for_error
from src.utils.seeding import derive_seed
import logging

# Configure logging
logger = logging.getLogger("experiment_routes")

router = APIRouter(
    tags=["Experiments"],
    responses={
        404: {"description": "Unknown task"},
        422: {"description": "Invalid experiment configuration"}
    },
)


@router.get("/experiments", response_model=dict)
async def list_tasks():
    """
    List the experiment tasks that can be run.
    """
    return create_response(True, f"{len(TASKS)} tasks available", data={"tasks": TASKS})


@router.post("/experiments/{task}", response_model=dict, status_code=status.HTTP_200_OK)
def run_task(task: str, config: Dict[str, Any] = Body(...)):
    """
    Run one experiment task and return its reports.

    The body holds the experiment configuration without ``task``; ``seed`` is required.
    Results are also written below ``output_dir`` when one is given.
    """
    if task not in TASKS:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"Unknown task '{task}'")
    try:
        experiment = ExperimentConfig(**{**config, "task": task})
    except ValidationError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=e.errors(include_url=False))

    if experiment.jobs == 1 and get_settings().jobs > 1:
        experiment = experiment.model_copy(update={"jobs": get_settings().jobs})

    logger.info(f"Running task {task} with seed {experiment.seed}")
    try:
        outcome = experiments.run_experiment(experiment)
        written = experiments.save_outcome(outcome, experiment.output_dir) if experiment.output_dir else []
    except AcousticSensingError as e:
        raise_for_error(e, f"Task {task} failed")

    return create_response(
        True,
        f"Task {task} finished",
        data=json_safe({"outcome": outcome.model_dump(mode="json"), "summary": outcome.summary(), "files": written})
    )


@router.post("/snr", response_model=SnrResponse, status_code=status.HTTP_200_OK)
def estimate_snr(request: SnrRequest):
    """
    Simulate an active recording and its passive twin in the same environment and return the SNR in dB.

    An infinite or undefined SNR is reported as null.
    """
    try:
        model = experiments.build_model(request.simulator)
        played = render(request.stimulus)
        silence = Passive(duration_s=request.stimulus.duration_s, sample_rate_hz=request.stimulus.sample_rate_hz)
        external, environment = None, None
        if request.external_level_db is not None:
            external, environment = external_noise(
                request.external_level_db, len(played), derive_seed(request.seed, "external"), model.sample_rate_hz
            )
        active = modulate(model, ActuatorState(), played, external, request.seed, environment=environment)
        passive = modulate(model, ActuatorState(), silence, external, request.seed, environment=environment)
        snr = snr_estimate(active, passive)
    except AcousticSensingError as e:
        raise_for_error(e, "Failed to estimate SNR")

    return SnrResponse(success=True, message="SNR estimated", snr_db=json_safe(snr))
