"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Every key can also be given as a command-line flag of the same name.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .model import ModelConfig
from .patterns import SplitConfig
from .training import TrainConfig
from .walks import SamplerConfig


class ConfigError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path, self.line = path, line
        where = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    # data
    data_dir: str = ""
    cache: str = ""
    boundaries: tuple[float, ...] = (0.4, 0.75, 0.825, 0.9)
    window_fraction: float = 0.1
    policy: str = "two_hop+uniform"
    # sampler
    alpha: float = 1e-5
    M: int = 64
    m: int = 2
    master_seed: int = 0
    # model
    de_dim: int = 108
    time_dim: int = 172
    hidden: int = 172
    mlp_hidden: int = 172
    de_mode: str = "asym"
    pooling: str = "attention"
    activation: str = "silu"
    k: int = 3
    # training
    lr: float = 1e-4
    batch: int = 64
    epochs: int = 50
    patience: int = 5
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    q3_pair: str = "closure_vs_triangle"
    q3_score_penalty: float = 0.0
    # interpretation
    sample_size: int = 3000
    min_support: int = 30

    def split_config(self, seed: int | None = None) -> SplitConfig:
        return SplitConfig(tuple(self.boundaries), self.window_fraction, self.master_seed if seed is None else seed)

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(alpha=self.alpha, M=self.M, m=self.m, master_seed=self.master_seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.lr, batch_size=self.batch, max_epochs=self.epochs,
                           patience=self.patience, seeds=tuple(self.seeds), sampler=self.sampler(),
                           q3_pair=self.q3_pair, q3_score_penalty=self.q3_score_penalty)

    def model_config(self, task: str, time_scale: float) -> ModelConfig:
        return ModelConfig(task=task, m=self.m, de_dim=self.de_dim, time_dim=self.time_dim, hidden=self.hidden,
                           mlp_hidden=self.mlp_hidden, de_mode=self.de_mode, pooling=self.pooling,
                           activation=self.activation, time_scale=time_scale, k=self.k)

    def to_text(self) -> str:
        return "\n".join(f"{f.name} = {_format(getattr(self, f.name))}" for f in fields(self)) + "\n"

    def header(self, **extra) -> str:
        """One-line description embedded at the top of every artifact."""
        items = [f"{f.name}={_format(getattr(self, f.name))}" for f in fields(self)]
        items += [f"{k}={_format(v)}" for k, v in extra.items()]
        return "; ".join(items)


def _format(v) -> str:
    if isinstance(v, (tuple, list)):
        return ",".join(str(x) for x in v)
    return str(v)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_value(key: str, raw: str):
    kind = _TYPES[key]
    raw = raw.strip()
    if kind.startswith("tuple"):
        elem = float if "float" in kind else int
        return tuple(elem(x) for x in raw.split(",") if x.strip())
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config(text: str, path: str | None = None, base: RunConfig = RunConfig()) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", path, lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", path, lineno)
        try:
            values[key] = parse_value(key, raw)
        except ValueError as e:
            raise ConfigError(f"bad value for {key}: {e}", path, lineno) from None
    return dataclasses.replace(base, **values)


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    cfg = RunConfig()
    if path:
        cfg = parse_config(Path(path).read_text(), str(path))
    if overrides:
        cfg = dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    cfg.split_config()
    cfg.sampler()
    cfg.train_config()
    return cfg


CONFIG_KEYS = tuple(_TYPES)
