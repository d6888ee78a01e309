# tests/conftest.py
"""Shared fixtures: CLI runner, logging isolation and small, fast schemes."""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
# stdlib
from __future__ import annotations  # (default since 3.7)

from functools import cache
import logging
from typing import TYPE_CHECKING, NamedTuple

# 3rd party
import pytest

# Local
from resilient_hsa.cli import main
from resilient_hsa.constants import ENV_SEED
from resilient_hsa.ff_core import FieldConfig
from resilient_hsa.logging_setup import ENV_LOG_LEVEL
from resilient_hsa.scheme import Scheme, build_scheme
from resilient_hsa.vectors import ExampleVectors, load_vectors

# ------------------------------------------------------ PYRIGHT ----------------------------------------------------- #
# Type-only imports (kept out of runtime for speed/cleanliness).
if TYPE_CHECKING:
    from collections.abc import Callable, Iterator, Sequence

    from _pytest.capture import CaptureResult


class CliResult(NamedTuple):
    """Result of running the CLI: (exit code, stdout, stderr)."""

    code: int
    out: str
    err: str


# ==================================================================================================================== #
#                                                       FIXTURES                                                       #
# ==================================================================================================================== #
@pytest.fixture(autouse=True)
def _isolate_environment(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:  # pyright: ignore[reportUnusedFunction]
    """Drop HSA_* overrides and detach any handlers a CLI run installed on the root logger."""
    monkeypatch.delenv(ENV_SEED, raising=False)
    monkeypatch.delenv(ENV_LOG_LEVEL, raising=False)
    yield
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()
    logging.captureWarnings(False)


@pytest.fixture()
def run_cli(capsys: pytest.CaptureFixture[str]):
    """Return a callable that runs the CLI with argv and returns (code, out, err)."""

    def _runner(argv: Sequence[str]) -> CliResult:
        code = main(argv)
        captured: CaptureResult[str] = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)

    return _runner


@pytest.fixture(scope="session")
def example_vectors() -> ExampleVectors:
    """The packaged worked example (K=5, d=3, s=1, q=3, L=2 over Z_13)."""
    return load_vectors()


@pytest.fixture(scope="session")
def small_cfg() -> FieldConfig:
    """K=3 over Z_5 with binary models: small enough for the brute-force oracle."""
    return FieldConfig(p=5, q=2, K=3)


@pytest.fixture(scope="session")
def small_scheme(small_cfg: FieldConfig) -> Scheme:
    """K=3, d=2, s=1 scheme over Z_5."""
    return build_scheme(small_cfg, d=2, s=1, seed=0)


@pytest.fixture(scope="session")
def k5_scheme() -> Scheme:
    """K=5, d=3, s=1 scheme over Z_11 (the smallest prime above K(q-1) = 10)."""
    return build_scheme(FieldConfig(p=11, q=3, K=5), d=3, s=1, seed=7)


@pytest.fixture(scope="session")
def grid_scheme() -> Callable[[int, int, int], Scheme]:
    """Builder for q=3 schemes at the default prime, cached per (K, d, s) across the session."""

    @cache
    def _build(K: int, d: int, s: int) -> Scheme:  # noqa: N803
        return build_scheme(FieldConfig.with_default_prime(q=3, K=K), d=d, s=s, seed=100 * K + 10 * d + s)

    return _build
