"""
Environment configuration for sumsetlab
"""

import os
import logging

from utils.errors import ConfigError

# Configure logging
logger = logging.getLogger()

# Constants
ENGINE_VERSION = '1.0.0'
DEFAULT_MEM_CAP = 1 << 30
DEFAULT_GROUP_CAP = 1 << 20
DEFAULT_CURVE_CAP = 10_000
DEFAULT_EXACT_CAP = 20
DEFAULT_BATCH_SIZE = 10
DEFAULT_WORKERS = 1


def _int_env(name: str, default: int, minimum: int = 1) -> int:
    raw = os.environ.get(name, str(default))
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {value}")
    return value


def mem_cap() -> int:
    """Byte cap for sumset tables and witness snapshots."""
    return _int_env('SUMSETLAB_MEM_CAP', DEFAULT_MEM_CAP)


def group_cap() -> int:
    return _int_env('SUMSETLAB_GROUP_CAP', DEFAULT_GROUP_CAP, minimum=2)


def curve_cap() -> int:
    """Largest prime for which points are enumerated."""
    return _int_env('SUMSETLAB_CURVE_CAP', DEFAULT_CURVE_CAP, minimum=5)


def exact_cap() -> int:
    """Largest group order for certified exact critical numbers."""
    return _int_env('SUMSETLAB_EXACT_CAP', DEFAULT_EXACT_CAP, minimum=2)


def batch_size() -> int:
    return _int_env('SUMSETLAB_BATCH_SIZE', DEFAULT_BATCH_SIZE)


def workers() -> int:
    return _int_env('SUMSETLAB_WORKERS', DEFAULT_WORKERS)
