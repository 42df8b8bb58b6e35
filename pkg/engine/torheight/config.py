from typing import Optional

from dotenv import load_dotenv
from pydantic import PositiveFloat, PositiveInt
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="TORHEIGHT_", extra="ignore")

    # Caps place-level parallelism; unset means a single worker.
    THREADS: Optional[PositiveInt] = None
    TOLERANCE: PositiveFloat = 1e-9
    CIRCLE_MAX_DEPTH: PositiveInt = 40
    SNAP_DENOMINATOR: PositiveInt = 10**6
    SAMPLED_SNAP_DENOMINATOR: PositiveInt = 10**12
    GOLDEN_TOLERANCE: PositiveFloat = 1e-9
    FLOAT_DIGITS: PositiveInt = 17
    CSV_DIGITS: PositiveInt = 12
    LOG_LEVEL: str = "WARNING"
    CHECK_INSTANCES: PositiveInt = 20


settings = Settings()
