# src/resilient_hsa/config.py
"""Experiment configuration.

Sources, lowest to highest precedence:
    1) defaults of :class:`ExperimentConfig`;
    2) a config file: flat ``key = value`` lines (``#`` starts a comment), or JSON when the suffix is ``.json``;
    3) command-line flags (same keys);
    4) the ``HSA_SEED`` environment variable, for the seed only.

Drop models are written as::

    none
    bernoulli:P_C2R,P_R2S                 e.g. bernoulli:0.1,0.05
    fixed:r2s=1,2;c2r=2-1,3-3             client-relay pairs; either part may be omitted
    exhaustive[:R2S_MAX[:C2R_DEPTH]]      e.g. exhaustive:1  or  exhaustive:5:1
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import Mapping
from dataclasses import dataclass, fields, replace
import json
import logging
from pathlib import Path

# Local
from resilient_hsa.constants import ENV_SEED
from resilient_hsa.errors import InvalidParamsError
from resilient_hsa.ff_core import FieldConfig, next_prime_above
from resilient_hsa.netsim import DropModel

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class InvalidConfigError(InvalidParamsError):
    """Raised when a configuration value cannot be parsed or violates a precondition."""

    def __init__(self, key: str, value: object, reason: str) -> None:
        """Initialize with the offending key and value.

        Args:
            key: Configuration key.
            value: Raw value supplied.
            reason: What is wrong with it.
        """
        super().__init__(f"invalid config {key}={value!r}: {reason}")
        self.key: str = key
        self.value: object = value
        self.reason: str = reason


# ==================================================================================================================== #
#                                                  EXPERIMENT CONFIG                                                   #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    """Fully resolved experiment parameters.

    Attributes:
        K: Clients (and relays).
        d: Relays per client.
        s: Tolerated missing relay messages.
        q: Model alphabet size.
        p: Prime override; None selects the smallest prime above ``K(q-1)``.
        L: Model length.
        seed: Master seed.
        drop: Link failure model.
        trials: Episodes to run for sampled drop models.
        vectors: Worked-example vector file override.
        out: Report path override.
        budget: Largest number of episodes a sweep may run.
        unmask: ``(relay, client)`` transmissions sent without their key (leakage test hook).
    """

    K: int = 5
    d: int = 3
    s: int = 1
    q: int = 3
    p: int | None = None
    L: int = 2
    seed: int = 0
    drop: DropModel = DropModel()
    trials: int = 1
    vectors: Path | None = None
    out: Path | None = None
    budget: int | None = None
    unmask: tuple[tuple[int, int], ...] = ()

    @property
    def prime(self) -> int:
        """Effective modulus."""
        return self.p if self.p is not None else next_prime_above(self.K * (self.q - 1))

    def field_config(self) -> FieldConfig:
        """Field parameters of the experiment."""
        return FieldConfig(p=self.prime, q=self.q, K=self.K)

    def as_dict(self) -> dict[str, object]:
        """JSON-ready view with the effective prime and the drop model spelled out."""
        return {
            "K": self.K,
            "d": self.d,
            "s": self.s,
            "q": self.q,
            "p": self.prime,
            "L": self.L,
            "seed": self.seed,
            "drop": format_drop_model(self.drop),
            "trials": self.trials,
            "vectors": None if self.vectors is None else str(self.vectors),
            "budget": self.budget,
            "unmask": [list(pair) for pair in self.unmask],
        }


CONFIG_KEYS: frozenset[str] = frozenset(f.name for f in fields(ExperimentConfig))
_INT_KEYS = ("K", "d", "s", "q", "p", "L", "seed", "trials", "budget")


# ==================================================================================================================== #
#                                                    DROP MODELS                                                       #
# ==================================================================================================================== #


def _int(key: str, raw: object) -> int:
    try:
        return int(str(raw).strip())
    except ValueError as exc:
        raise InvalidConfigError(key, raw, "expected an integer") from exc


def _pairs(key: str, text: str) -> list[tuple[int, int]]:
    pairs: list[tuple[int, int]] = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        left, sep, right = item.partition("-")
        if not sep:
            raise InvalidConfigError(key, item, "expected CLIENT-RELAY")
        pairs.append((_int(key, left), _int(key, right)))
    return pairs


def parse_drop_model(text: str, seed: int = 0) -> DropModel:
    """Parse the textual drop-model grammar (see module docstring).

    Raises:
        InvalidConfigError: On any syntax error.
    """
    kind, _, rest = text.strip().partition(":")
    match kind:
        case "none":
            return DropModel(kind="none", seed=seed)
        case "bernoulli":
            parts = rest.split(",")
            if len(parts) != 2:  # noqa: PLR2004
                raise InvalidConfigError("drop", text, "bernoulli needs two probabilities")
            try:
                p_c2r, p_r2s = (float(x) for x in parts)
            except ValueError as exc:
                raise InvalidConfigError("drop", text, "probabilities must be numbers") from exc
            return DropModel(kind="bernoulli", p_c2r=p_c2r, p_r2s=p_r2s, seed=seed)
        case "fixed":
            failed_c2r: list[tuple[int, int]] = []
            failed_r2s: list[int] = []
            for clause in filter(None, (c.strip() for c in rest.split(";"))):
                name, eq, values = clause.partition("=")
                if not eq:
                    raise InvalidConfigError("drop", clause, "expected r2s=... or c2r=...")
                if name.strip() == "r2s":
                    failed_r2s.extend(_int("drop", v) for v in values.split(",") if v.strip())
                elif name.strip() == "c2r":
                    failed_c2r.extend(_pairs("drop", values))
                else:
                    raise InvalidConfigError("drop", clause, "unknown clause")
            return DropModel(
                kind="fixed", failed_c2r=frozenset(failed_c2r), failed_r2s=frozenset(failed_r2s), seed=seed
            )
        case "exhaustive":
            depths = rest.split(":") if rest else []
            if len(depths) > 2:  # noqa: PLR2004
                raise InvalidConfigError("drop", text, "exhaustive takes at most two depths")
            r2s_max = _int("drop", depths[0]) if depths and depths[0].strip() else None
            c2r_depth = _int("drop", depths[1]) if len(depths) > 1 and depths[1].strip() else 0
            return DropModel(kind="exhaustive", r2s_max=r2s_max, c2r_depth=c2r_depth, seed=seed)
    raise InvalidConfigError("drop", text, "unknown drop model")


def format_drop_model(model: DropModel) -> str:
    """Inverse of :func:`parse_drop_model` (canonical spelling)."""
    match model.kind:
        case "bernoulli":
            return f"bernoulli:{model.p_c2r},{model.p_r2s}"
        case "fixed":
            clauses = []
            if model.failed_r2s:
                clauses.append("r2s=" + ",".join(str(m) for m in sorted(model.failed_r2s)))
            if model.failed_c2r:
                clauses.append("c2r=" + ",".join(f"{k}-{m}" for k, m in sorted(model.failed_c2r)))
            return "fixed:" + ";".join(clauses)
        case "exhaustive":
            r2s = "" if model.r2s_max is None else f":{model.r2s_max}"
            depth = f":{model.c2r_depth}" if model.c2r_depth else ""
            if depth and not r2s:
                r2s = ":"
            return f"exhaustive{r2s}{depth}"
    return "none"


# ==================================================================================================================== #
#                                                      LOADING                                                         #
# ==================================================================================================================== #


def load_config_file(path: Path) -> dict[str, object]:
    """Read a ``key = value`` or JSON config file into a flat mapping.

    Raises:
        InvalidConfigError: On malformed lines or JSON.
    """
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError("config", str(path), f"invalid JSON ({exc.msg})") from exc
        if not isinstance(data, dict):
            raise InvalidConfigError("config", str(path), "JSON config must be an object")
        return dict(data)

    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise InvalidConfigError("config", raw, f"line {lineno} is not key=value")
        values[key.strip()] = value.strip()
    return values


def _coerce(key: str, raw: object) -> object:
    if key in _INT_KEYS:
        return None if raw is None else _int(key, raw)
    if key in {"vectors", "out"}:
        return None if raw is None else Path(str(raw))
    if key == "unmask":
        if isinstance(raw, list):
            return tuple((_int(key, pair[1]), _int(key, pair[0])) for pair in raw)
        return tuple((relay, client) for client, relay in _pairs(key, str(raw)))
    return raw


def resolve_config(
    file_values: Mapping[str, object], overrides: Mapping[str, object], environ: Mapping[str, str]
) -> ExperimentConfig:
    """Merge the configuration sources and validate the result once.

    ``unmask`` values are written ``CLIENT-RELAY`` like link failures (JSON: ``[[client, relay], ...]``).

    Raises:
        InvalidConfigError: On unknown keys, unparsable values or violated preconditions.
    """
    merged: dict[str, object] = {}
    for source in (file_values, overrides):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in CONFIG_KEYS:
                raise InvalidConfigError(key, raw, "unknown key")
            merged[key] = raw
    if ENV_SEED in environ:
        merged["seed"] = environ[ENV_SEED]
        log.debug("seed taken from %s", ENV_SEED)

    drop_text = merged.pop("drop", None)
    values = {key: _coerce(key, raw) for key, raw in merged.items()}
    seed = int(values.get("seed", 0))  # type: ignore[arg-type]
    drop = DropModel() if drop_text is None else drop_text
    if isinstance(drop, str):
        drop = parse_drop_model(drop, seed)
    if not isinstance(drop, DropModel):
        raise InvalidConfigError("drop", drop_text, "expected a drop-model string")
    cfg = ExperimentConfig(**values, drop=replace(drop, seed=seed))  # type: ignore[arg-type]
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every precondition the pipeline relies on.

    Raises:
        InvalidConfigError: On the first violated precondition.
    """
    checks: list[tuple[str, object, bool, str]] = [
        ("K", cfg.K, cfg.K >= 2, "K must be >= 2"),  # noqa: PLR2004
        ("d", cfg.d, 1 <= cfg.d <= cfg.K - 1, "need 1 <= d <= K-1"),
        ("s", cfg.s, 0 <= cfg.s < cfg.d, "need 0 <= s < d"),
        ("q", cfg.q, cfg.q >= 2, "q must be >= 2"),  # noqa: PLR2004
        ("L", cfg.L, cfg.L >= 1, "L must be >= 1"),
        ("trials", cfg.trials, cfg.trials >= 0, "trials must be >= 0"),
        ("budget", cfg.budget, cfg.budget is None or cfg.budget >= 0, "budget must be >= 0"),
    ]
    for key, value, ok, reason in checks:
        if not ok:
            raise InvalidConfigError(key, value, reason)
    try:
        cfg.field_config()
    except InvalidParamsError as exc:
        raise InvalidConfigError("p", cfg.p, str(exc)) from exc
    for relay, client in cfg.unmask:
        if not (1 <= relay <= cfg.K and 1 <= client <= cfg.K):
            raise InvalidConfigError("unmask", (client, relay), "ids must lie in 1..K")
