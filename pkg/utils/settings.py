import os
import logging
from dataclasses import dataclass, replace
from dotenv import load_dotenv

logger = logging.getLogger(__name__)


def _flag(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class Settings:
    """Runtime knobs, read from the environment (and a .env file)."""
    k_max: int = 10
    parallel: bool = True
    cooper_cap: int = 100_000
    refine_cap: int = 32
    concretize_rounds: int = 64
    mixed_enum_cap: int = 64
    progress: bool = False
    log_level: str = "INFO"
    host: str = "0.0.0.0"
    port: int = 5000

    def override(self, **changes) -> "Settings":
        """Return a copy with the non-None changes applied"""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def load_settings() -> Settings:
    """Build Settings from RELIC_* environment variables"""
    load_dotenv()
    env = os.environ
    try:
        settings = Settings(
            k_max=int(env.get("RELIC_K_MAX", 10)),
            parallel=_flag(env.get("RELIC_PARALLEL", "true")),
            cooper_cap=int(env.get("RELIC_COOPER_CAP", 100_000)),
            refine_cap=int(env.get("RELIC_REFINE_CAP", 32)),
            concretize_rounds=int(env.get("RELIC_CONCRETIZE_ROUNDS", 64)),
            mixed_enum_cap=int(env.get("RELIC_MIXED_ENUM_CAP", 64)),
            progress=_flag(env.get("RELIC_PROGRESS", "false")),
            log_level=env.get("RELIC_LOG_LEVEL", "INFO").upper(),
            host=env.get("RELIC_HOST", "0.0.0.0"),
            port=int(env.get("RELIC_PORT", 5000)),
        )
    except ValueError as e:
        raise ValueError(f"Invalid RELIC_* setting: {str(e)}")
    if settings.k_max < 1:
        raise ValueError("RELIC_K_MAX must be at least 1")
    logger.debug(f"Loaded settings: {settings}")
    return settings
