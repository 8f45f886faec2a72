import logging
from logging.handlers import RotatingFileHandler
import os
from typing import Optional

from src.config.settings import get_settings


def setup_logging(log_dir: Optional[str] = None, level: Optional[str] = None, to_file: Optional[bool] = None):
    """Configure logging for the application"""
    settings = get_settings()
    log_dir = log_dir or settings.log_dir
    level = (level or settings.log_level).upper()
    to_file = settings.log_to_file if to_file is None else to_file

    handlers = [logging.StreamHandler()]
    if to_file:
        # Create logs directory if it doesn't exist
        if not os.path.exists(log_dir):
            os.makedirs(log_dir)
        handlers.append(
            RotatingFileHandler(
                os.path.join(log_dir, "acoustic.log"),
                maxBytes=10485760,  # 10MB
                backupCount=5,
            )
        )

    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )

    # Set specific levels for some loggers
    logging.getLogger("uvicorn").setLevel(logging.WARNING)
    logging.getLogger("fastapi").setLevel(logging.WARNING)

    # Return root logger
    return logging.getLogger()
