"""Run configuration shared by the pipeline and the CLI (JSON on disk)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .lion import LaConfig


@dataclass(frozen=True)
class LaSettings:
    n: int = 10
    nrm: int = 2
    mutation_rate: float = 0.2
    epochs: int = 100
    bounds: tuple[float, float] = (-2.0, 2.0)
    workers: int = 1

    def to_config(self, seed: int) -> LaConfig:
        return LaConfig(self.n, self.nrm, self.mutation_rate, self.epochs, tuple(self.bounds),
                        seed, self.workers)


@dataclass(frozen=True)
class RunConfig:
    data: str | None = None
    out: str = "out"
    seed: int = 0
    lag: int = 12
    hidden: int = 2
    train_fraction: float = 0.8
    folds: int = 5
    ffnn_lr: float = 0.5
    ffnn_epochs: int = 2000
    lstm_lr: float = 0.5
    lstm_epochs: int = 500
    la: LaSettings = field(default_factory=LaSettings)

    def __post_init__(self):
        if self.lag < 1:
            raise ConfigError("lag must be >= 1")
        if self.hidden < 1:
            raise ConfigError("hidden must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.ffnn_lr <= 0 or self.lstm_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if self.ffnn_epochs < 0 or self.lstm_epochs < 0:
            raise ConfigError("epoch counts must be >= 0")
        self.la_config()  # validates the LA section

    def la_config(self, seed: int | None = None) -> LaConfig:
        return self.la.to_config(self.seed if seed is None else seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["la"]["bounds"] = list(self.la.bounds)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        doc = dict(doc)
        la = doc.pop("la", {})
        if not isinstance(la, dict):
            raise ConfigError("'la' must be an object")
        la_known = {f.name for f in fields(LaSettings)}
        bad = sorted(set(la) - la_known)
        if bad:
            raise ConfigError(f"unknown la keys: {', '.join(bad)}")
        if "bounds" in la:
            b = la["bounds"]
            if not (isinstance(b, (list, tuple)) and len(b) == 2):
                raise ConfigError("la.bounds must be [low, high]")
            la = {**la, "bounds": (float(b[0]), float(b[1]))}
        try:
            return cls(**doc, la=LaSettings(**la))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **kw) -> "RunConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig.from_dict(d)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return RunConfig.from_dict(doc)
