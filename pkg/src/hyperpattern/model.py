"""HIT model: triplet encoder plus one task head, and checkpoint I/O."""

from __future__ import annotations

import dataclasses
import pickle
from dataclasses import dataclass

import torch
from torch import nn

from .artifacts import atomic_write
from .decoders import PatternClassifier, TimeMixtureHead, WalkScorer
from .encoder import EncoderConfig, TripletEncoder

TASKS = ("q1", "q2", "q3")
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    task: str = "q1"
    m: int = 2
    de_dim: int = 108
    time_dim: int = 172
    hidden: int = 172
    mlp_hidden: int = 172
    de_mode: str = "asym"
    pooling: str = "attention"
    activation: str = "silu"
    time_scale: float = 1.0
    k: int = 3

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")

    def encoder_config(self) -> EncoderConfig:
        # Q3 uses one-hot SPD codes and sums per-walk scores, so pooling is unused there
        return EncoderConfig(
            m=self.m, de_dim=self.de_dim, time_dim=self.time_dim, hidden=self.hidden,
            de_mode=self.de_mode, de_input="spd" if self.task == "q3" else "counts",
            pooling="mean" if self.task == "q3" else self.pooling,
            activation=self.activation, time_scale=self.time_scale,
        )


class HIT(nn.Module):
    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        self.config = config
        gen = torch.Generator().manual_seed(int(seed))
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(int(seed))
            self.encoder = TripletEncoder(config.encoder_config(), gen)
            if config.task == "q1":
                self.head = PatternClassifier(config.hidden, config.mlp_hidden, config.activation)
            elif config.task == "q2":
                self.head = TimeMixtureHead(config.hidden, config.k, config.mlp_hidden, config.activation)
            else:
                self.head = WalkScorer(config.hidden)
        self.double()

    def forward(self, batch: dict, pattern_index: torch.Tensor | None = None):
        """Q1: logits (B, 4).  Q2: (log_w, mu, log_var).  Q3: (x, C_W of shape (B, 3, M))."""
        if self.config.task == "q3":
            enc = self.encoder.encode_walks(batch)
            scores = self.head.walk_scores(enc)
            return scores.flatten(1).sum(-1) + self.head.b, scores
        _, psi = self.encoder(batch)
        if self.config.task == "q1":
            return self.head(psi)
        if pattern_index is None:
            raise ValueError("Q2 needs the pattern index of every row")
        return self.head(psi, pattern_index)


def save_checkpoint(model: HIT, path: str, extra: dict | None = None) -> None:
    """Versioned blob: manifest of tensor names and shapes, the tensors, and the model config."""
    state = model.state_dict()
    blob = {
        "format_version": CHECKPOINT_VERSION,
        "manifest": {k: list(v.shape) for k, v in state.items()},
        "state_dict": state,
        "config": dataclasses.asdict(model.config),
        "extra": extra or {},
    }
    atomic_write(path, lambda fh: torch.save(blob, fh), binary=True)


class CheckpointError(ValueError):
    pass


def load_checkpoint(path: str) -> tuple[HIT, dict]:
    try:
        blob = torch.load(path, map_location="cpu", weights_only=False)
    except (pickle.UnpicklingError, RuntimeError, EOFError, ValueError) as e:
        raise CheckpointError(f"{path}: not a readable checkpoint ({e})") from None
    if not isinstance(blob, dict) or blob.get("format_version") != CHECKPOINT_VERSION:
        version = blob.get("format_version") if isinstance(blob, dict) else None
        raise CheckpointError(f"{path}: unsupported checkpoint version {version!r}")
    model = HIT(ModelConfig(**blob["config"]))
    for name, shape in blob["manifest"].items():
        if list(blob["state_dict"][name].shape) != shape:
            raise CheckpointError(f"{path}: tensor {name} does not match its manifest shape {shape}")
    model.load_state_dict(blob["state_dict"])
    return model, blob.get("extra", {})
