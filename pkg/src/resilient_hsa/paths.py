# src/resilient_hsa/paths.py
"""Project-root discovery for logs and default report locations."""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from pathlib import Path

# Local
from resilient_hsa.constants import DEFAULT_REPORT_DIR


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class ProjectRootNotFoundError(FileNotFoundError):
    """Raised when no ancestor directory holds a pyproject.toml."""

    def __init__(self, start_dir: Path) -> None:
        """Initialize the error with the starting directory.

        Args:
            start_dir: Directory from which the upward search was initiated.
        """
        super().__init__(f"Could not find an upward 'pyproject.toml' starting from: {start_dir}")
        self.start_dir: Path = start_dir


# ==================================================================================================================== #
#                                                         PATHS                                                        #
# ==================================================================================================================== #


def find_project_root(start_dir: Path | None = None) -> Path:
    """Return the closest ancestor of ``start_dir`` (or the cwd) that contains a pyproject.toml.

    Args:
        start_dir: Optional starting directory. Defaults to the current working directory.

    Returns:
        Path: Absolute path to the project root.

    Raises:
        ProjectRootNotFoundError: If no pyproject.toml is found in the starting directory or any of its parents.
    """
    start_abs_path: Path = (start_dir or Path.cwd()).resolve()
    for candidate in [start_abs_path, *start_abs_path.parents]:
        if (candidate / "pyproject.toml").is_file():
            return candidate
    raise ProjectRootNotFoundError(start_abs_path)


def project_dir(name: str, start_dir: Path | None = None) -> Path:
    """Return ``<project root>/<name>``, or ``<cwd>/<name>`` when running outside a source checkout.

    The directory is created if missing.
    """
    try:
        base: Path = find_project_root(start_dir)
    except ProjectRootNotFoundError:
        base = Path.cwd()
    target: Path = base / name
    target.mkdir(parents=True, exist_ok=True)
    return target


def default_report_path(command: str, seed: int, start_dir: Path | None = None) -> Path:
    """Default JSON report location for a command run: ``reports/<command>-seed<seed>.json``."""
    return project_dir(DEFAULT_REPORT_DIR, start_dir) / f"{command}-seed{seed}.json"
