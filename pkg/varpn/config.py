"""Runtime settings.

Values come from the built-in defaults, then an optional YAML file (``--config``
or ``VARPN_CONFIG``), then the ``VARPN_THREADS`` environment variable.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV = "VARPN_CONFIG"
THREADS_ENV = "VARPN_THREADS"

_TYPES = {
    "threads": (int, type(None)),
    "generic_slack": int,
    "default_seed": int,
    "default_trials": int,
    "log_level": str,
}
_TYPE_NAMES = {"threads": "an integer or null", "log_level": "a string"}
_TYPE_NAMES.update({name: "an integer" for name in ("generic_slack", "default_seed", "default_trials")})
_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    threads: int | None = None
    generic_slack: int = 2
    default_seed: int = 0
    default_trials: int = 20
    log_level: str = "WARNING"

    def __post_init__(self) -> None:
        for name, kinds in _TYPES.items():
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, kinds):
                raise ConfigError(f"{name} must be {_TYPE_NAMES[name]}, got {value!r}")
        if self.log_level not in _LEVELS:
            raise ConfigError(f"log_level must be one of {', '.join(_LEVELS)}, got {self.log_level!r}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        if self.generic_slack < 0:
            raise ConfigError(f"generic_slack must be non-negative, got {self.generic_slack}")
        if self.default_trials < 1:
            raise ConfigError(f"default_trials must be positive, got {self.default_trials}")


def _from_mapping(base: Settings, data: Mapping[str, Any], source: str) -> Settings:
    known = {f.name for f in fields(Settings)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown settings in {source}: {', '.join(unknown)}")
    try:
        return replace(base, **data)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_settings(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> Settings:
    environ = os.environ if environ is None else environ
    settings = Settings()

    path = path or environ.get(CONFIG_ENV)
    if path:
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read settings file {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"settings file {path} must contain a mapping")
        settings = _from_mapping(settings, data, str(path))
        logger.debug("loaded settings from %s", path)

    threads = environ.get(THREADS_ENV)
    if threads:
        try:
            settings = replace(settings, threads=int(threads))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {threads!r}") from None
    return settings


_current: Settings | None = None


def get_settings() -> Settings:
    global _current
    if _current is None:
        _current = load_settings()
    return _current


def set_settings(settings: Settings | None) -> None:
    """Install process-wide settings; ``None`` re-reads them on next use."""
    global _current
    _current = settings
