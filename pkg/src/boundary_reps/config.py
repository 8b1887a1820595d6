"""Run configuration: key=value text, environment overrides and validation.

Precedence, lowest first: defaults, config file, ``BOUNDARY_REPS_<KEY>``
environment variables, command-line flags.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from typing import Mapping

from .errors import ConfigError, PreconditionError

ENV_PREFIX = "BOUNDARY_REPS_"
# read by the backend selector, not part of a run
RESERVED_ENV = {"BACKEND"}
FORMATS = ("csv", "json")


@dataclass
class RunConfig:
    rank: int = 2
    epsilon: float = 1.0
    t: float = 0.25
    t2: float | None = None
    level: int = 2
    n_max: int = 12
    tol: float = 0.05
    experiment: str = ""
    i: int = 0
    j: int = 0
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    cache_dir: str | None = None
    seed: int = 0

    def resolved(self) -> dict:
        d = asdict(self)
        if d["t2"] is None:
            d["t2"] = d["t"]
        return d


KEYS = {f.name: f for f in fields(RunConfig)}
_INT = {"rank", "level", "n_max", "i", "j", "threads", "seed"}
_FLOAT = {"epsilon", "t", "t2", "tol"}


def _convert(key: str, raw: str, line=None, column=None):
    raw = raw.strip()
    try:
        if key in _INT:
            return int(raw)
        if key in _FLOAT:
            if key == "t2" and raw.lower() in ("", "none"):
                return None
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as a number", key=key, line=line,
                          column=column) from None
    if key in ("out", "cache_dir") and raw == "":
        return None
    return raw


def _normalise_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines ('#' starts a comment) and validate.

    Unknown keys are rejected.  Syntax errors carry 1-based line and column.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ConfigError(f"line {lineno}: expected key=value", line=lineno, column=col)
        key_txt, val_txt = body.split("=", 1)
        key = _normalise_key(key_txt)
        col = len(key_txt) - len(key_txt.lstrip()) + 1
        if not key:
            raise ConfigError(f"line {lineno}: empty key", line=lineno, column=col)
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", key=key, line=lineno, column=col)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key=key, line=lineno, column=col)
        values[key] = _convert(key, val_txt, lineno, len(key_txt) + 2)
    return validate(apply_overrides(base or RunConfig(), values))


def env_overrides(environ: Mapping[str, str] | None = None) -> dict:
    """Values from ``BOUNDARY_REPS_<KEY>`` variables; unknown suffixes are rejected."""
    environ = os.environ if environ is None else environ
    out = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        suffix = name[len(ENV_PREFIX):]
        if suffix in RESERVED_ENV:
            continue
        key = _normalise_key(suffix)
        if key not in KEYS:
            raise ConfigError(f"unknown environment override {name}", key=key)
        out[key] = _convert(key, raw)
    return out


def apply_overrides(cfg: RunConfig, values: Mapping[str, object]) -> RunConfig:
    d = asdict(cfg)
    for key, val in values.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", key=key)
        d[key] = val
    return RunConfig(**d)


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.rank < 2:
        raise ConfigError("rank must be >= 2 (the group must be non-elementary)", key="rank")
    if not cfg.epsilon > 0:
        raise ConfigError("epsilon must be > 0", key="epsilon")
    if cfg.level < 0:
        raise ConfigError("level must be >= 0", key="level")
    if cfg.n_max < 1:
        raise ConfigError("n_max must be >= 1", key="n_max")
    if not cfg.tol > 0:
        raise ConfigError("tol must be > 0", key="tol")
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", key="format")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1", key="threads")
    for key in ("i", "j"):
        if getattr(cfg, key) not in (0, 1, 2):
            raise ConfigError(f"{key} must be 0, 1 or 2", key=key)
    t2 = cfg.t if cfg.t2 is None else cfg.t2
    bad = ((cfg.experiment == "ht" or cfg.i == 1) and cfg.t > 0.5) or (cfg.j == 1 and t2 > 0.5)
    if bad:
        raise PreconditionError(
            "the H_t pairing needs t <= 1/2: the intertwiner is not positive beyond it"
        )
    return cfg
