# src/resilient_hsa/logging_setup.py
"""Logging setup for resilient_hsa.

Runtime behavior:
    1) Load the packaged dictConfig JSON referenced by LOGGING_CONFIG_RESOURCE_PATH.
    2) Move every file-handler output into ``<PROJECT_ROOT>/logs`` (basename kept); outside a source checkout the
       logs land in ``<cwd>/logs``.
    3) Apply dictConfig, then the level override (CLI ``--log-level`` first, ``HSA_LOG_LEVEL`` second).
    4) If the packaged config cannot be loaded or applied, fall back to ``logging.basicConfig`` with the same format.

Sweeps log one DEBUG line per episode, so the file handler is where long runs should be inspected; the console
handler stays at INFO.

Environment Variables:
    HSA_LOG_LEVEL:
        Optional root level override: DEBUG, INFO, WARNING, ERROR, CRITICAL.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import MutableMapping
from importlib.resources import files as resources_files
import json
import logging
import logging.config
import os
from typing import TYPE_CHECKING, cast

# Local
from resilient_hsa.constants import LOGGING_CONFIG_RESOURCE_PATH
from resilient_hsa.paths import project_dir

# --------------------------------------------------- BASEDPYRIGHT --------------------------------------------------- #
# Imported only for static checkers; not used at runtime.
if TYPE_CHECKING:
    from importlib.resources.abc import Traversable
    from pathlib import Path


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class InvalidLoggingConfigPathError(ValueError):
    """Raised when LOGGING_CONFIG_RESOURCE_PATH is not a (package, subdir, filename) triple of non-empty strings."""

    def __init__(self) -> None:
        """Initialize with a descriptive validation message."""
        super().__init__("LOGGING_CONFIG_RESOURCE_PATH must be a 3-item tuple of strings: (package, subdir, filename)")


# ==================================================================================================================== #
#                                                       CONSTANTS                                                      #
# ==================================================================================================================== #
try:
    _PKG, _SUBDIR, _FILENAME = LOGGING_CONFIG_RESOURCE_PATH
except ValueError as exc:
    raise InvalidLoggingConfigPathError from exc

if not all(x for x in (_PKG, _SUBDIR, _FILENAME)):
    raise InvalidLoggingConfigPathError

ENV_LOG_LEVEL: str = "HSA_LOG_LEVEL"
LOG_FORMAT: str = "%(asctime)s | %(levelname)-8s | [%(threadName)s] %(name)s:%(funcName)s:%(lineno)d - %(message)s"
LOG_DATEFMT: str = "%Y-%m-%dT%H:%M:%S%z"


# ==================================================================================================================== #
#                                                 CONFIG NORMALIZATION                                                 #
# ==================================================================================================================== #


def _redirect_file_handlers(config: MutableMapping[str, object], logs_dir: Path) -> None:
    """Rewrite ``filename`` of every ``*FileHandler`` entry to ``logs_dir / basename``. Modifies ``config`` in place."""
    handlers_section: object = config.get("handlers", {})
    if not isinstance(handlers_section, MutableMapping):
        return

    for handler_cfg_obj in cast("MutableMapping[str, object]", handlers_section).values():
        if not isinstance(handler_cfg_obj, MutableMapping):
            continue
        handler_cfg = cast("MutableMapping[str, object]", handler_cfg_obj)
        if "FileHandler" in str(handler_cfg.get("class", "")) and "filename" in handler_cfg:
            basename: str = str(handler_cfg["filename"]).replace("\\", "/").rsplit("/", 1)[-1]
            handler_cfg["filename"] = str(logs_dir / basename)


def _resolve_level(name: str | None) -> int | None:
    """Map a level name to its numeric value; unknown or empty names give None."""
    if not name:
        return None
    level: object = getattr(logging, name.upper(), None)
    return level if isinstance(level, int) else None


# ==================================================================================================================== #
#                                                  CONFIG LOADING LOGIC                                                #
# ==================================================================================================================== #


def _load_packaged_logging_json() -> dict[str, object] | None:
    """Return the packaged dictConfig mapping, or None when it is missing or unreadable."""
    try:
        resource_path: Traversable = resources_files(_PKG) / _SUBDIR / _FILENAME
        if not resource_path.is_file():
            return None
        return cast("dict[str, object]", json.loads(resource_path.read_text(encoding="utf-8")))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError):
        return None


def _configure_fallback(level: int) -> None:
    """Install a basicConfig handler with the packaged format and capture warnings."""
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt=LOG_DATEFMT, force=True)
    logging.captureWarnings(True)


# ==================================================================================================================== #
#                                                   PUBLIC API: SETUP                                                  #
# ==================================================================================================================== #


def setup_logging(level: str | None = None) -> None:
    """Configure project-wide logging from the packaged defaults.

    Args:
        level: Optional root level name taking precedence over ``HSA_LOG_LEVEL``.

    Notes:
        Boot warnings are emitted only after a handler exists so that log capture in tests sees them.
    """
    override: int | None = _resolve_level(level) or _resolve_level(os.environ.get(ENV_LOG_LEVEL))
    boot_warnings: list[str] = []

    config = _load_packaged_logging_json()
    if config is None:
        _configure_fallback(override or logging.INFO)
        boot_warnings.append("Packaged logging.json dictConfig not found or invalid, falling back.")
    else:
        try:
            _redirect_file_handlers(config, project_dir("logs"))
            logging.config.dictConfig(config)
            logging.captureWarnings(True)
            if override is not None:
                logging.getLogger().setLevel(override)
        except (ValueError, TypeError, AttributeError, ImportError, OSError):
            _configure_fallback(override or logging.INFO)
            logging.getLogger(__name__).exception("Invalid packaged logging configuration; using basicConfig.")

    logger = logging.getLogger(__name__)
    for message in boot_warnings:
        logger.warning(message)
