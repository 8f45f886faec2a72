from fastapi import APIRouter
from src.api.signal_routes import router as signal_router
from src.api.experiment_routes import router as experiment_router
from src.api.health_routes import router as health_router

router = APIRouter()

router.include_router(signal_router)
router.include_router(experiment_router)
router.include_router(health_router)
