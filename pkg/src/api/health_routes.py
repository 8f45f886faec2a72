from fastapi import APIRouter, Depends
from src.utils.validation import check_dependencies, check_simulator, validate_output_root
from src.config.settings import PROJECT_NAME
from src.utils.response_utils import handle_service_result
import platform
import sys
import time

router = APIRouter(
    prefix="/health",
    tags=["Health"],
    responses={404: {"description": "Not found"}},
)

# Track server start time
START_TIME = time.time()

def get_system_info():
    """Get system information"""
    return {
        "python_version": sys.version,
        "platform": platform.platform(),
        "uptime_seconds": int(time.time() - START_TIME)
    }

@router.get("/")
async def health_check():
    """
    Basic health check endpoint
    """
    return {
        "status": "healthy",
        "service": PROJECT_NAME
    }

@router.get("/detailed")
async def detailed_health_check(system_info: dict = Depends(get_system_info)):
    """
    Detailed health check: numerical stack, output directory and a simulator self-check
    """
    output_ok, output_error = validate_output_root()
    dependencies = check_dependencies()

    # The simulator check needs the numerical stack
    simulator = check_simulator() if dependencies.get("success", False) else {
        "success": False, "error": dependencies.get("error")
    }

    overall_status = "healthy" if simulator.get("success", False) and output_ok else "degraded"

    return {
        "status": overall_status,
        "service": PROJECT_NAME,
        "system_info": system_info,
        "checks": {
            "dependencies": dependencies,
            "output_root": {"success": output_ok, "error": output_error},
            "simulator": simulator
        }
    }

@router.get("/self-check")
async def simulator_self_check():
    """
    Run only the simulator self-check; fails with 503 when the pipeline is broken
    """
    result = handle_service_result(check_simulator(), "Simulator self-check failed", status_code=503)
    return {"status": "healthy", "service": PROJECT_NAME, "details": result}
