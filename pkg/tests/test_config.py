# tests/test_config.py
"""Tests for `resilient_hsa.config`: drop-model grammar, config files, precedence and validation."""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

import json
from typing import TYPE_CHECKING

# 3rd party
import pytest

# local
from resilient_hsa.config import (
    ExperimentConfig,
    InvalidConfigError,
    format_drop_model,
    load_config_file,
    parse_drop_model,
    resolve_config,
)
from resilient_hsa.constants import ENV_SEED
from resilient_hsa.errors import InvalidParamsError
from resilient_hsa.netsim import DropModel

# ------------------------------------------------------ PYRIGHT ----------------------------------------------------- #
if TYPE_CHECKING:
    from pathlib import Path


# ==================================================================================================================== #
#                                                     DROP MODELS                                                      #
# ==================================================================================================================== #
@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("none", DropModel()),
        ("bernoulli:0.1,0.05", DropModel(kind="bernoulli", p_c2r=0.1, p_r2s=0.05)),
        ("fixed:r2s=1,2", DropModel(kind="fixed", failed_r2s=frozenset({1, 2}))),
        (
            "fixed:r2s=3;c2r=2-1,3-3",
            DropModel(kind="fixed", failed_r2s=frozenset({3}), failed_c2r=frozenset({(2, 1), (3, 3)})),
        ),
        ("exhaustive", DropModel(kind="exhaustive")),
        ("exhaustive:1", DropModel(kind="exhaustive", r2s_max=1)),
        ("exhaustive:5:1", DropModel(kind="exhaustive", r2s_max=5, c2r_depth=1)),
        ("exhaustive::2", DropModel(kind="exhaustive", c2r_depth=2)),
    ],
)
def test_parse_drop_model(text: str, expected: DropModel) -> None:
    """Each grammar form parses to its model and formats back to the same text."""
    model = parse_drop_model(text)
    assert model == expected
    assert format_drop_model(model) == text


@pytest.mark.parametrize(
    "text", ["sometimes", "bernoulli:0.1", "bernoulli:a,b", "fixed:r2s", "fixed:up=1", "fixed:c2r=21", "exhaustive:1:2:3"]
)
def test_parse_drop_model_rejects(text: str) -> None:
    """Malformed drop models name the offending key."""
    with pytest.raises(InvalidConfigError) as excinfo:
        parse_drop_model(text)
    assert excinfo.value.key == "drop"


def test_parse_drop_model_probability_range() -> None:
    """Probabilities outside [0, 1] are rejected by the model itself."""
    with pytest.raises(InvalidParamsError):
        parse_drop_model("bernoulli:1.5,0")


# ==================================================================================================================== #
#                                                        FILES                                                         #
# ==================================================================================================================== #
def test_load_key_value_file(tmp_path: Path) -> None:
    """Comments and blank lines are ignored; values stay raw strings."""
    path = tmp_path / "exp.conf"
    path.write_text("# experiment\nK = 4\n\nd=2   # two relays\ndrop = fixed:r2s=1\n", encoding="utf-8")
    assert load_config_file(path) == {"K": "4", "d": "2", "drop": "fixed:r2s=1"}


def test_load_json_file(tmp_path: Path) -> None:
    """JSON files keep their types."""
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"K": 4, "unmask": [[2, 1]]}), encoding="utf-8")
    assert load_config_file(path) == {"K": 4, "unmask": [[2, 1]]}


@pytest.mark.parametrize(("name", "text"), [("bad.conf", "K 4\n"), ("bad.json", "{"), ("list.json", "[1, 2]")])
def test_load_rejects_malformed_files(tmp_path: Path, name: str, text: str) -> None:
    """Lines without '=' and JSON that is not an object are errors."""
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        load_config_file(path)


# ==================================================================================================================== #
#                                                      RESOLUTION                                                      #
# ==================================================================================================================== #
def test_defaults() -> None:
    """No sources give the worked-example shape with the default prime."""
    cfg = resolve_config({}, {}, {})
    assert cfg == ExperimentConfig()
    assert cfg.prime == 11
    assert cfg.field_config().p == 11


def test_precedence() -> None:
    """Flags override the file, the environment overrides the seed, None never overrides."""
    cfg = resolve_config({"K": "4", "d": "2", "seed": "1"}, {"d": 3, "seed": 2, "L": None}, {ENV_SEED: "9"})
    assert (cfg.K, cfg.d, cfg.seed, cfg.L) == (4, 3, 9, 2)


def test_drop_model_inherits_seed() -> None:
    """The drop model draws with the experiment seed."""
    cfg = resolve_config({"drop": "bernoulli:0.1,0.2"}, {"seed": "5"}, {})
    assert cfg.drop == DropModel(kind="bernoulli", p_c2r=0.1, p_r2s=0.2, seed=5)
    assert cfg.as_dict()["drop"] == "bernoulli:0.1,0.2"


def test_unmask_is_stored_relay_first() -> None:
    """CLIENT-RELAY text and [[client, relay]] JSON both become (relay, client) pairs."""
    assert resolve_config({}, {"unmask": "2-1,3-1"}, {}).unmask == ((1, 2), (1, 3))
    assert resolve_config({"unmask": [[2, 1]]}, {}, {}).unmask == ((1, 2),)
    assert resolve_config({}, {"unmask": "2-1"}, {}).as_dict()["unmask"] == [[1, 2]]


@pytest.mark.parametrize(
    ("values", "key"),
    [
        ({"colour": "red"}, "colour"),
        ({"K": "five"}, "K"),
        ({"K": "1"}, "K"),
        ({"d": "5"}, "d"),
        ({"s": "3"}, "s"),
        ({"q": "1"}, "q"),
        ({"L": "0"}, "L"),
        ({"trials": "-1"}, "trials"),
        ({"budget": "-2"}, "budget"),
        ({"p": "7"}, "p"),
        ({"p": "12"}, "p"),
        ({"unmask": "9-1"}, "unmask"),
    ],
)
def test_validation_names_the_key(values: dict[str, object], key: str) -> None:
    """Each violated precondition is reported against its key."""
    with pytest.raises(InvalidConfigError) as excinfo:
        resolve_config(values, {}, {})
    assert excinfo.value.key == key


def test_invalid_environment_seed() -> None:
    """A non-integer seed from the environment is a config error."""
    with pytest.raises(InvalidConfigError) as excinfo:
        resolve_config({}, {}, {ENV_SEED: "abc"})
    assert excinfo.value.key == "seed"
