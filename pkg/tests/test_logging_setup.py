# tests/test_logging_setup.py
"""Tests for `resilient_hsa.logging_setup`.

Covers:

- Redirection of file-handler outputs into `<PROJECT_ROOT>/logs`.
- Level-name resolution and the precedence of `--log-level` over `HSA_LOG_LEVEL`.
- Fallback to `basicConfig` when the packaged configuration is missing.
- The packaged configuration itself: console on stderr, rotating file `hsa.log`, package logger at DEBUG.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import MutableMapping
import logging
import logging.handlers
from pathlib import Path
from typing import TYPE_CHECKING, cast

# 3rd party
import pytest

# local
import resilient_hsa.logging_setup as logsetup

# ------------------------------------------------------ PYRIGHT ----------------------------------------------------- #
# Type-only imports (kept out of runtime for speed/cleanliness).
if TYPE_CHECKING:
    from collections.abc import Iterator

    from _pytest.capture import CaptureFixture


# ==================================================================================================================== #
#                                                     TEST FIXTURES                                                    #
# ==================================================================================================================== #
@pytest.fixture(autouse=True)
def _reset_logging_state() -> Iterator[None]:  # pyright: ignore[reportUnusedFunction]
    """Clear root handlers and levels before and after each test."""
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()
    root_logger.setLevel(logging.NOTSET)
    yield
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()
    root_logger.setLevel(logging.WARNING)
    logging.getLogger("resilient_hsa").setLevel(logging.NOTSET)


@pytest.fixture()
def tmp_logs_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Point `project_dir` (as imported by logging_setup) at a temporary project."""
    logs_directory: Path = tmp_path / "project" / "logs"

    def _fake_project_dir(name: str, _start: Path | None = None) -> Path:
        target = tmp_path / "project" / name
        target.mkdir(parents=True, exist_ok=True)
        return target

    monkeypatch.setattr(logsetup, "project_dir", _fake_project_dir)
    return logs_directory


# ==================================================================================================================== #
#                                                 UNIT: HELPER FUNCTIONS                                               #
# ==================================================================================================================== #
def test_redirect_file_handlers_keeps_basename(tmp_path: Path) -> None:
    """File handlers land in `logs_dir` under their basename; other handlers are untouched."""
    logs_directory: Path = tmp_path / "logs"
    dict_config: dict[str, object] = {
        "version": 1,
        "handlers": {
            "file1": {"class": "logging.FileHandler", "filename": "/var/log/hsa/run.log"},
            "file2": {"class": "logging.handlers.RotatingFileHandler", "filename": "C:\\logs\\sweep.log"},
            "console": {"class": "logging.StreamHandler"},
        },
    }

    logsetup._redirect_file_handlers(  # pyright: ignore[reportPrivateUsage]
        cast("MutableMapping[str, object]", dict_config), logs_directory
    )

    handlers_config = cast("MutableMapping[str, MutableMapping[str, object]]", dict_config["handlers"])
    assert Path(str(handlers_config["file1"]["filename"])) == logs_directory / "run.log"
    assert Path(str(handlers_config["file2"]["filename"])) == logs_directory / "sweep.log"
    assert "filename" not in handlers_config["console"]


@pytest.mark.parametrize(
    ("name", "expected"),
    [("debug", logging.DEBUG), ("WARNING", logging.WARNING), ("loud", None), ("", None), (None, None)],
)
def test_resolve_level(name: str | None, expected: int | None) -> None:
    """Level names are case-insensitive; unknown names are ignored."""
    assert logsetup._resolve_level(name) == expected  # pyright: ignore[reportPrivateUsage]


# ==================================================================================================================== #
#                                 SETUP: FALLBACK CONFIGURATION (NO PACKAGED JSON)                                     #
# ==================================================================================================================== #
def test_setup_logging_fallback_when_packaged_missing(
    monkeypatch: pytest.MonkeyPatch, capsys: CaptureFixture[str]
) -> None:
    """Without a packaged config the root logger gets basicConfig at INFO and a warning on stderr."""
    monkeypatch.setattr(logsetup, "_load_packaged_logging_json", lambda: None)

    logsetup.setup_logging()

    assert logging.getLogger().getEffectiveLevel() == logging.INFO
    captured = capsys.readouterr()
    assert "Packaged logging.json dictConfig not found or invalid, falling back." in captured.err


def test_setup_logging_fallback_respects_env_level(monkeypatch: pytest.MonkeyPatch) -> None:
    """`HSA_LOG_LEVEL` sets the fallback level."""
    monkeypatch.setattr(logsetup, "_load_packaged_logging_json", lambda: None)
    monkeypatch.setenv(logsetup.ENV_LOG_LEVEL, "WARNING")

    logsetup.setup_logging()

    assert logging.getLogger().getEffectiveLevel() == logging.WARNING


# ==================================================================================================================== #
#                              SETUP: PACKAGED CONFIGURATION & FILE PATH REWRITE                                       #
# ==================================================================================================================== #
def test_setup_logging_rewrites_file_paths(tmp_logs_dir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """A dictConfig file handler writes into `<PROJECT_ROOT>/logs` under its basename."""
    dict_config = {
        "version": 1,
        "formatters": {"fmt": {"format": "%(levelname)s %(message)s"}},
        "handlers": {
            "file": {
                "class": "logging.FileHandler",
                "level": "INFO",
                "formatter": "fmt",
                "filename": "any/relative/path/episodes.log",
            },
        },
        "root": {"level": "INFO", "handlers": ["file"]},
    }
    monkeypatch.setattr(logsetup, "_load_packaged_logging_json", lambda: dict_config)

    logsetup.setup_logging()
    logging.getLogger("test").info("episode 0 decoded")

    installed = [h for h in logging.getLogger().handlers if isinstance(h, logging.FileHandler)]
    assert installed, "Expected a FileHandler to be installed by dictConfig."
    log_file_path = Path(installed[0].baseFilename)
    assert log_file_path.parent == tmp_logs_dir
    assert log_file_path.name == "episodes.log"
    assert "episode 0 decoded" in log_file_path.read_text(encoding="utf-8")


def test_setup_logging_level_precedence(tmp_logs_dir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """The explicit level beats `HSA_LOG_LEVEL`, which beats the packaged root level."""
    dict_config = {
        "version": 1,
        "handlers": {"null": {"class": "logging.NullHandler"}},
        "root": {"level": "INFO", "handlers": ["null"]},
    }
    _ = tmp_logs_dir
    monkeypatch.setattr(logsetup, "_load_packaged_logging_json", lambda: dict(dict_config))
    monkeypatch.setenv(logsetup.ENV_LOG_LEVEL, "ERROR")

    logsetup.setup_logging()
    assert logging.getLogger().getEffectiveLevel() == logging.ERROR

    logsetup.setup_logging("DEBUG")
    assert logging.getLogger().getEffectiveLevel() == logging.DEBUG


def test_packaged_configuration(tmp_logs_dir: Path) -> None:
    """The shipped config logs to stderr and to a rotating `hsa.log`; package loggers run at DEBUG."""
    logsetup.setup_logging()

    handlers = logging.getLogger().handlers
    rotating = [h for h in handlers if isinstance(h, logging.handlers.RotatingFileHandler)]
    assert len(rotating) == 1
    assert Path(rotating[0].baseFilename) == tmp_logs_dir / "hsa.log"
    assert any(type(h) is logging.StreamHandler for h in handlers)
    assert logging.getLogger("resilient_hsa").level == logging.DEBUG
    assert logging.getLogger("resilient_hsa.netsim").level == logging.INFO
