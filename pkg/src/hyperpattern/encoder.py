"""Distance encodings of walk nodes and the neural walk encoder.

Per triplet, every node ``a`` seen on a walk gets three count vectors
``g(a; S_u)``, ``g(a; S_v)``, ``g(a; S_w)`` (hits per walk position).  The
model maps them to a DE vector that is exactly symmetric in ``u``/``v``, runs a
gated recurrent cell over ``DE(z_i) ++ time(t0 - t_i)`` along each walk and
pools the walk encodings per root node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .walks import WalkSet

DE_MODES = ("asym", "sym", "concat", "none")
POOLING_MODES = ("attention", "mean")


# -- counting (numpy) -------------------------------------------------------

def position_counts(a: int, walk_set: WalkSet) -> np.ndarray:
    """Number of walks in ``walk_set`` that visit ``a`` at each position 0..m."""
    return (walk_set.nodes == a).sum(axis=0).astype(np.int64)


def spd_code(a: int, walk_set: WalkSet) -> int:
    """Smallest position at which ``a`` is seen; ``m + 1`` stands for unseen."""
    return spd_from_counts(position_counts(a, walk_set))


def spd_from_counts(counts) -> int:
    nz = np.flatnonzero(np.asarray(counts) > 0)
    return int(nz[0]) if len(nz) else len(counts)


@dataclass
class ContextArrays:
    """Padded per-position features of one triplet's three walk sets.

    Axes: set (u, v, w) x walk x position; ``counts`` adds role x position and
    ``spd`` adds role.  Padding positions have ``mask`` False and zero features.
    """

    nodes: np.ndarray     # (3, M, L) int
    dt: np.ndarray        # (3, M, L) float, anchor minus step time
    mask: np.ndarray      # (3, M, L) bool
    counts: np.ndarray    # (3, M, L, 3, L) int
    spd: np.ndarray       # (3, M, L, 3) int in 0..L (L = unseen)


def context_arrays(walk_sets: tuple[WalkSet, WalkSet, WalkSet]) -> ContextArrays:
    nodes = np.stack([ws.nodes for ws in walk_sets])
    times = np.stack([ws.times for ws in walk_sets])
    anchor = walk_sets[0].anchor
    _, M, L = nodes.shape
    mask = nodes >= 0
    uniq, inv = np.unique(np.where(mask, nodes, -1), return_inverse=True)
    inv = inv.reshape(nodes.shape)
    table = np.zeros((3, len(uniq), L), dtype=np.int64)
    pos = np.broadcast_to(np.arange(L), (M, L))
    for r in range(3):
        valid = mask[r]
        np.add.at(table[r], (inv[r][valid], pos[valid]), 1)
    if uniq[0] == -1:
        table[:, 0, :] = 0
    # (U, 3, L) gathered onto every walk position
    per_node = table.transpose(1, 0, 2)
    counts = per_node[inv]
    counts[~mask] = 0
    seen = counts > 0
    first = np.where(seen.any(-1), seen.argmax(-1), L)
    first[~mask] = L
    dt = np.where(mask, anchor - np.nan_to_num(times, nan=anchor), 0.0)
    return ContextArrays(nodes, dt, mask, counts, first)


# -- torch modules ----------------------------------------------------------

def make_activation(name: str) -> nn.Module:
    return {"relu": nn.ReLU, "silu": nn.SiLU, "tanh": nn.Tanh, "gelu": nn.GELU}[name]()


class TimeEncoder(nn.Module):
    """Learnable Fourier features ``cos(beta * dt) + phi``."""

    def __init__(self, dim: int = 172, time_scale: float = 1.0, generator: torch.Generator | None = None):
        super().__init__()
        lo = -math.log(max(time_scale, 1.0))
        u = torch.rand(dim, generator=generator, dtype=torch.float64)
        self.beta = nn.Parameter(torch.exp(lo + (0.0 - lo) * u))
        self.phi = nn.Parameter(torch.zeros(dim, dtype=torch.float64))

    def forward(self, dt: torch.Tensor) -> torch.Tensor:
        return torch.cos(dt.unsqueeze(-1) * self.beta) + self.phi


class DistanceEncoder(nn.Module):
    """Maps the three per-role encodings of a node to one DE vector.

    ``asym``   F1((b + c) ++ |b - c|), b = F2(g_u ++ g_w), c = F2(g_v ++ g_w)
    ``sym``    F1(F2(g_u) + F2(g_v) + F2(g_w))  (sum pooling over all roles)
    ``concat`` F1(F2(g_u ++ g_v ++ g_w))
    ``none``   zeros
    """

    def __init__(self, in_dim: int, dim: int = 108, mode: str = "asym", activation: str = "silu"):
        super().__init__()
        if mode not in DE_MODES:
            raise ValueError(f"unknown DE mode {mode!r}")
        self.mode = mode
        self.dim = dim
        if mode == "none":
            return
        f2_in = {"asym": 2 * in_dim, "sym": in_dim, "concat": 3 * in_dim}[mode]
        f1_in = 2 * dim if mode == "asym" else dim
        self.f2 = nn.Sequential(nn.Linear(f2_in, dim), make_activation(activation))
        self.f1 = nn.Sequential(nn.Linear(f1_in, dim), make_activation(activation), nn.Linear(dim, dim))

    def forward(self, g: torch.Tensor) -> torch.Tensor:
        """``g`` has shape (..., 3, in_dim) with roles ordered u, v, w."""
        g_u, g_v, g_w = g.unbind(-2)
        if self.mode == "none":
            return g.new_zeros(g.shape[:-2] + (self.dim,))
        if self.mode == "asym":
            b = self.f2(torch.cat([g_u, g_w], -1))
            c = self.f2(torch.cat([g_v, g_w], -1))
            return self.f1(torch.cat([b + c, (b - c).abs()], -1))
        if self.mode == "sym":
            return self.f1(self.f2(g_u) + self.f2(g_v) + self.f2(g_w))
        return self.f1(self.f2(torch.cat([g_u, g_v, g_w], -1)))


class WalkEncoder(nn.Module):
    """GRU cell over the valid prefix of each walk; returns the last valid hidden state."""

    def __init__(self, in_dim: int, hidden: int = 172):
        super().__init__()
        self.cell = nn.GRUCell(in_dim, hidden)
        self.hidden = hidden

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        # x: (N, L, in_dim), mask: (N, L)
        h = x.new_zeros(x.shape[0], self.hidden)
        for i in range(x.shape[1]):
            nh = self.cell(x[:, i], h)
            h = torch.where(mask[:, i:i + 1], nh, h)
        return h


class SetPool(nn.Module):
    """Permutation-invariant pooling of walk encodings over the walk axis (-2).

    ``attention``: mean_i sum_j softmax_j(e_i' T1 e_j) (e_j T2).
    ``mean``: plain average.
    """

    def __init__(self, dim: int, mode: str = "attention"):
        super().__init__()
        if mode not in POOLING_MODES:
            raise ValueError(f"unknown pooling mode {mode!r}")
        self.mode = mode
        if mode == "attention":
            bound = 1.0 / math.sqrt(dim)
            self.theta1 = nn.Parameter(torch.empty(dim, dim, dtype=torch.float64).uniform_(-bound, bound))
            self.theta2 = nn.Parameter(torch.eye(dim, dtype=torch.float64)
                                       + torch.empty(dim, dim, dtype=torch.float64).uniform_(-bound, bound))

    def forward(self, enc: torch.Tensor) -> torch.Tensor:
        if enc.shape[-2] == 0:
            raise ValueError("cannot pool an empty walk set")
        if self.mode == "mean":
            return enc.mean(-2)
        scores = enc @ self.theta1 @ enc.transpose(-1, -2)
        att = torch.softmax(scores, dim=-1)
        return (att @ (enc @ self.theta2)).mean(-2)


@dataclass(frozen=True)
class EncoderConfig:
    m: int = 2
    de_dim: int = 108
    time_dim: int = 172
    hidden: int = 172
    de_mode: str = "asym"
    de_input: str = "counts"      # "counts" (position counts) or "spd" (one-hot SPD codes)
    pooling: str = "attention"
    activation: str = "silu"
    time_scale: float = 1.0


class TripletEncoder(nn.Module):
    """Walk sets of a triplet batch -> walk encodings (B, 3, M, H) and node embeddings (B, 3, H)."""

    def __init__(self, config: EncoderConfig, generator: torch.Generator | None = None):
        super().__init__()
        self.config = config
        L = config.m + 1
        in_dim = L if config.de_input == "counts" else L + 1
        self.de = DistanceEncoder(in_dim, config.de_dim, config.de_mode, config.activation)
        self.time = TimeEncoder(config.time_dim, config.time_scale, generator)
        self.rnn = WalkEncoder(config.de_dim + config.time_dim, config.hidden)
        self.pool = SetPool(config.hidden, config.pooling)
        self.double()

    def de_features(self, batch: dict) -> torch.Tensor:
        """Role encodings fed to the DE network: (B, 3, M, L, 3, in_dim)."""
        if self.config.de_input == "counts":
            M = batch["counts"].shape[2]
            return batch["counts"] / M
        L = self.config.m + 1
        return nn.functional.one_hot(batch["spd"], L + 1).to(torch.float64)

    def encode_walks(self, batch: dict) -> torch.Tensor:
        de = self.de(self.de_features(batch))
        tf = self.time(batch["dt"])
        mask = batch["mask"]
        x = torch.cat([de, tf], -1) * mask.unsqueeze(-1)
        B, S, M, L, D = x.shape
        enc = self.rnn(x.reshape(B * S * M, L, D), mask.reshape(B * S * M, L))
        return enc.reshape(B, S, M, -1)

    def forward(self, batch: dict) -> tuple[torch.Tensor, torch.Tensor]:
        enc = self.encode_walks(batch)
        return enc, self.pool(enc)


def collate(contexts: list[ContextArrays]) -> dict:
    return {
        "counts": torch.from_numpy(np.stack([c.counts for c in contexts]).astype(np.float64)),
        "spd": torch.from_numpy(np.stack([c.spd for c in contexts]).astype(np.int64)),
        "dt": torch.from_numpy(np.stack([c.dt for c in contexts]).astype(np.float64)),
        "mask": torch.from_numpy(np.stack([c.mask for c in contexts])),
    }


def asymmetric_de(a: int, S_u: WalkSet, S_v: WalkSet, S_w: WalkSet, de: DistanceEncoder) -> torch.Tensor:
    """DE vector of node ``a`` relative to one triplet's walk sets."""
    g = np.stack([position_counts(a, S) for S in (S_u, S_v, S_w)]).astype(np.float64)
    return de(torch.from_numpy(g / S_u.M))


def time_feature(delta_t, encoder: TimeEncoder) -> torch.Tensor:
    return encoder(torch.as_tensor(delta_t, dtype=torch.float64))
