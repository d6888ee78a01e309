# tests/test_paths.py
"""Tests for `resilient_hsa.paths`.

Covers project-root discovery through `find_project_root`, the `ProjectRootNotFoundError` failure case and the
directories derived from the root: `project_dir` and `default_report_path`.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from typing import TYPE_CHECKING

# 3rd party
import pytest

# local
import resilient_hsa.paths as paths

# --------------------------------------------------- BASEDPYRIGHT --------------------------------------------------- #
# Imported only for static checkers; not used at runtime.
if TYPE_CHECKING:
    from pathlib import Path


def _make_project(root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    _ = (root / "pyproject.toml").write_text("[project]\nname='dummy'\n", encoding="utf-8")
    return root


# ==================================================================================================================== #
#                                                  FIND_PROJECT_ROOT                                                   #
# ==================================================================================================================== #


# --------------------------------------------------- SUCCESS CASES -------------------------------------------------- #
def test_find_project_root_returns_directory_with_pyproject(tmp_path: Path) -> None:
    """A directory holding `pyproject.toml` is its own root."""
    project_root = _make_project(tmp_path / "experiments")

    assert paths.find_project_root(project_root) == project_root


def test_find_project_root_climbs_up_to_parent(tmp_path: Path) -> None:
    """The search walks upward from a nested directory."""
    project_root = _make_project(tmp_path / "project")
    nested_dir: Path = project_root / "src" / "resilient_hsa"
    nested_dir.mkdir(parents=True)

    assert paths.find_project_root(nested_dir) == project_root


# --------------------------------------------------- FAILURE CASES -------------------------------------------------- #
def test_find_project_root_raises_if_no_pyproject(tmp_path: Path) -> None:
    """Without any `pyproject.toml` above the start, the error names the start directory."""
    orphan_dir: Path = tmp_path / "orphan" / "nested"
    orphan_dir.mkdir(parents=True)

    with pytest.raises(paths.ProjectRootNotFoundError) as excinfo:
        _ = paths.find_project_root(orphan_dir)

    assert "Could not find an upward 'pyproject.toml'" in str(excinfo.value)
    assert str(orphan_dir.resolve()) in str(excinfo.value)
    assert excinfo.value.start_dir == orphan_dir.resolve()


# ==================================================================================================================== #
#                                                  DERIVED DIRECTORIES                                                 #
# ==================================================================================================================== #
def test_project_dir_is_created_under_root(tmp_path: Path) -> None:
    """`project_dir` creates `<root>/<name>` on demand."""
    project_root = _make_project(tmp_path / "project")

    logs = paths.project_dir("logs", project_root / "src")

    assert logs == project_root / "logs"
    assert logs.is_dir()


def test_project_dir_outside_checkout_uses_cwd(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Outside a source checkout the directory lands under the working directory."""
    orphan_dir: Path = tmp_path / "orphan"
    orphan_dir.mkdir()
    monkeypatch.chdir(orphan_dir)

    assert paths.project_dir("reports", orphan_dir) == orphan_dir.resolve() / "reports"


def test_default_report_path(tmp_path: Path) -> None:
    """Reports are named after the command and the seed."""
    project_root = _make_project(tmp_path / "project")

    path = paths.default_report_path("sweep", 12, project_root)

    assert path == project_root / "reports" / "sweep-seed12.json"
    assert path.parent.is_dir()
    assert not path.exists()
