"""Process environment: ``.env``, the optional settings file, logging setup."""

from __future__ import annotations

import functools
import logging
import os
import tomllib
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Optional, Sequence

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

_BOOTSTRAPPED = False

SETTINGS_DIR = ".failure_aware"
SETTINGS_FILE = "settings.toml"
LOG_LEVEL_KEY = "FAILURE_AWARE_LOG_LEVEL"
THREADS_KEY = "FAILURE_AWARE_THREADS"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def settings_paths() -> list[Path]:
    """Candidate settings files, working directory first."""

    return [Path.cwd() / SETTINGS_DIR / SETTINGS_FILE, Path.home() / SETTINGS_DIR / SETTINGS_FILE]


@functools.lru_cache(maxsize=None)
def load_settings() -> dict[str, Any]:
    for path in settings_paths():
        if not path.is_file():
            continue
        try:
            with path.open("rb") as handle:
                return tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            logger.warning("Ignoring settings file %s: %s", path, exc)
    return {}


def sync_env_from_settings(section: str = "env") -> None:
    """Copy ``[env]`` entries into ``os.environ`` without overriding what is already set."""

    table = load_settings().get(section)
    if not isinstance(table, Mapping):
        return
    for key, value in table.items():
        if key not in os.environ:
            os.environ[key] = str(value).lower() if isinstance(value, bool) else str(value)


def get_config_value(key: str, default: Any = None, *, sections: Sequence[str] = ("env", "app")) -> Any:
    """Environment first, then the settings file (top level, then ``sections``)."""

    if key in os.environ:
        return os.environ[key]
    settings = load_settings()
    if key in settings and not isinstance(settings[key], Mapping):
        return settings[key]
    for section in sections:
        table = settings.get(section)
        if isinstance(table, Mapping) and key in table:
            return table[key]
    return default


def get_int_config(key: str, default: Optional[int] = None, *, minimum: Optional[int] = None) -> Optional[int]:
    value = get_config_value(key)
    if value is None:
        return default
    try:
        number = int(value)
    except (TypeError, ValueError):
        logger.warning("%s=%r is not an integer; using %r", key, value, default)
        return default
    if minimum is not None and number < minimum:
        logger.warning("%s=%d is below %d; using %r", key, number, minimum, default)
        return default
    return number


def default_threads() -> Optional[int]:
    """Machine-wide evaluation worker count, when no run file or flag sets one."""

    return get_int_config(THREADS_KEY, minimum=1)


def configure_logging(level: Optional[str] = None) -> None:
    name = str(level or get_config_value(LOG_LEVEL_KEY, "INFO")).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        numeric = logging.INFO
    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.getLogger().setLevel(numeric)


def bootstrap() -> None:
    """Load .env files, mirror settings into the environment, set up logging."""

    global _BOOTSTRAPPED
    if _BOOTSTRAPPED:
        return

    load_dotenv()
    sync_env_from_settings()
    configure_logging()
    _BOOTSTRAPPED = True


__all__ = [
    "bootstrap",
    "configure_logging",
    "default_threads",
    "get_config_value",
    "get_int_config",
    "load_settings",
    "settings_paths",
    "sync_env_from_settings",
]
