from io import BytesIO
from typing import Literal

from fastapi import APIRouter, Query, status
from fastapi.responses import Response

from src.models.domain import SoundSpec
from src.models.schemas import SynthesizeResponse
from src.services import dataset_io, signal_gen
from src.utils.errors import AcousticSensingError
from src.utils.response_utils import raise_for_error
import logging

# Configure logging
logger = logging.getLogger("signal_routes")

router = APIRouter(
    prefix="/signals",
    tags=["Signals"],
    responses={
        404: {"description": "Not found"},
        422: {"description": "Invalid sound specification"}
    },
)


@router.post("/synthesize", response_model=SynthesizeResponse, status_code=status.HTTP_200_OK)
async def synthesize_sound(spec: SoundSpec, format: Literal["json", "wav"] = Query("json")):
    """
    Synthesize the stimulus described by the request.

    With ``format=wav`` the body is the 32-bit float WAV file; otherwise a summary is returned.
    """
    try:
        waveform = signal_gen.synthesize(spec)
    except AcousticSensingError as e:
        raise_for_error(e, "Failed to synthesize sound")

    if format == "wav":
        buffer = BytesIO()
        try:
            dataset_io.write_wav(buffer, waveform)
        except AcousticSensingError as e:
            raise_for_error(e, "Failed to encode sound")
        logger.info(f"Returning {len(waveform)}-sample {spec.kind.value} as WAV")
        return Response(content=buffer.getvalue(), media_type="audio/wav")

    return SynthesizeResponse(
        success=True,
        message="Sound synthesized successfully",
        kind=spec.kind.value,
        n_samples=len(waveform),
        sample_rate_hz=waveform.sample_rate_hz,
        peak=waveform.peak,
        rms=waveform.rms
    )
