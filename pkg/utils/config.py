import os
from dataclasses import dataclass

from dotenv import load_dotenv

from utils.constants import MAX_CODE_BITS, MIN_CODE_BITS
from utils.exceptions import ConfigError

load_dotenv()


@dataclass(frozen=True)
class Settings:
    default_bits: int = 8
    raw_bits: int = 8
    workers: int = 1
    verbose: bool = True
    fast_dct: bool = False


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or raw == '':
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'")


def _env_bool(name, default):
    raw = os.getenv(name)
    if raw is None or raw == '':
        return default
    return raw.strip().lower() in ('1', 'true', 'yes', 'on')


def load_settings():
    """Read codec settings from the environment (and .env if present)"""
    settings = Settings(
        default_bits=_env_int('FMC_DEFAULT_BITS', 8),
        raw_bits=_env_int('FMC_RAW_BITS', 8),
        workers=_env_int('FMC_WORKERS', 1),
        verbose=_env_bool('FMC_VERBOSE', True),
        fast_dct=_env_bool('FMC_FAST_DCT', False),
    )

    if not MIN_CODE_BITS <= settings.default_bits <= MAX_CODE_BITS:
        raise ConfigError(f"FMC_DEFAULT_BITS must be within {MIN_CODE_BITS}-{MAX_CODE_BITS}")
    if settings.raw_bits < 1:
        raise ConfigError("FMC_RAW_BITS must be positive")
    if settings.workers < 1:
        raise ConfigError("FMC_WORKERS must be at least 1")

    return settings
