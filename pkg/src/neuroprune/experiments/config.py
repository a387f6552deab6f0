"""Experiment configuration: defaults < JSON file < command-line overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..processes import default_t_cap

EXPERIMENTS = ("separation", "chain", "bins", "coupling", "single-neuron")
_NOT_HASHED = {"out", "workers"}


class ConfigError(ValueError):
    """Bad configuration; the CLI maps it to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "separation"
    d: int = 4
    n_h: int = 18
    epsilon: float = 0.05
    r: float = 2.0
    cap_c: float = 1.0
    gamma: float = 1.0
    c: float | None = None
    t_cap: int | None = None
    p: float | None = None
    q: float | None = None
    k: int | None = None
    pool: int = 30
    n_h_sweep: tuple[int, ...] | None = None
    trials: int = 50
    seed: int = 0
    out: str = "results"
    workers: int = 1

    @property
    def level_c(self) -> float:
        """Broken-bin constant; ``gamma / 16`` unless set."""
        return self.gamma / 16 if self.c is None else self.c

    @property
    def cap(self) -> int:
        return default_t_cap(self.r, self.epsilon) if self.t_cap is None else self.t_cap

    def validate(self) -> "ExperimentConfig":
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon={self.epsilon} violates the hypothesis ε ∈ (0,1)")
        if not self.r >= 2:
            raise ConfigError(f"r={self.r} violates the hypothesis R ≥ 2 (ball radius)")
        if self.d < 2:
            raise ConfigError(f"d={self.d} violates the hypothesis d ≥ 2")
        checks = [
            (self.n_h >= 1, "n_h must be >= 1"),
            (self.trials >= 1, "trials must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.pool >= 1, "pool must be >= 1"),
            (self.cap_c > 0, "cap_c must be positive"),
            (self.gamma > 0, "gamma must be positive"),
            (self.c is None or self.c > 0, "c must be positive"),
            (self.t_cap is None or self.t_cap >= 1, "t_cap must be >= 1"),
            (self.k is None or self.k >= 0, "k must be >= 0"),
            (self.p is None or 0 <= self.p <= 1, "p must lie in [0, 1]"),
            (self.q is None or 0 <= self.q <= 1, "q must lie in [0, 1]"),
            (self.p is None or self.q is None or self.p + self.q <= 1, "p + q must not exceed 1"),
            (0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer"),
            (self.n_h_sweep is None or all(n >= 1 for n in self.n_h_sweep), "n_h_sweep entries must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["n_h_sweep"] is not None:
            out["n_h_sweep"] = list(out["n_h_sweep"])
        return out

    def hash(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in _NOT_HASHED}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))
_INT_FIELDS = {"d", "n_h", "t_cap", "k", "pool", "trials", "seed", "workers"}
_FLOAT_FIELDS = {"epsilon", "r", "cap_c", "gamma", "c", "p", "q"}


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in _INT_FIELDS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if key in _FLOAT_FIELDS:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if key == "n_h_sweep":
            return tuple(int(v) for v in value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {value!r}") from None


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(data) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    return data


def parse_config(path=None, overrides: dict | None = None, **defaults) -> ExperimentConfig:
    """Resolve a config with precedence overrides > file > defaults."""
    merged: dict = {}
    merged.update(defaults)
    if path is not None:
        merged.update(load_config_file(path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}")
    cfg = replace(ExperimentConfig(), **{k: _coerce(k, v) for k, v in merged.items()})
    return cfg.validate()
