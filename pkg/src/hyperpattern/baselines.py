"""Neighborhood heuristics on the static projection of pre-anchor hyperedges.

Each feature is fed alone into a small classifier (1 -> 10 -> 4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import torch
from torch import nn

from .encoder import make_activation
from .hypergraph import TemporalHypergraph
from .patterns import LabeledInstance, Triplet

FEATURE_NAMES = ("aa3", "jc3", "pa3", "aa_mean", "jc_mean", "pa_mean")


class StaticProjection:
    """Clique expansion of the hyperedges with time ``< t``; advances forward in time."""

    def __init__(self, graph: TemporalHypergraph):
        self.graph = graph
        self.neighbors: dict[int, set[int]] = {}
        self.t = -math.inf
        self._next = 0

    def advance(self, t: float) -> "StaticProjection":
        if t < self.t:
            raise ValueError("projection can only move forward in time")
        g = self.graph
        k = int(np.searchsorted(g.edge_time, t, side="left"))
        for e in range(self._next, k):
            nodes = g.nodes_of(e).tolist()
            for a in nodes:
                s = self.neighbors.setdefault(a, set())
                s.update(nodes)
                s.discard(a)
        self._next = max(self._next, k)
        self.t = t
        return self

    def N(self, z: int) -> set[int]:
        return self.neighbors.get(z, set())


def project(graph: TemporalHypergraph, t: float) -> StaticProjection:
    return StaticProjection(graph).advance(t)


@dataclass(frozen=True)
class HeuristicFeatures:
    aa3: float
    jc3: float
    pa3: float
    aa_mean: float
    jc_mean: float
    pa_mean: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.aa3, self.jc3, self.pa3, self.aa_mean, self.jc_mean, self.pa_mean)


def _aa(proj: StaticProjection, common: Iterable[int]) -> float:
    total = 0.0
    for i in common:
        deg = len(proj.N(i))
        # degree-1 neighbors would divide by log 1 = 0; they contribute nothing
        if deg > 1:
            total += 1.0 / math.log(deg)
    return total


def _jc(sets: Sequence[set[int]]) -> float:
    union = set().union(*sets)
    if not union:
        return 0.0
    return len(set.intersection(*sets)) / len(union)


def features(proj: StaticProjection, u: int, v: int, w: int) -> HeuristicFeatures:
    Nu, Nv, Nw = proj.N(u), proj.N(v), proj.N(w)
    aa3 = _aa(proj, Nu & Nv & Nw)
    jc3 = _jc([Nu, Nv, Nw])
    pa3 = float(len(Nu) * len(Nv) * len(Nw))
    pairs = ((Nu, Nv), (Nu, Nw), (Nv, Nw))
    aa_mean = float(np.mean([_aa(proj, a & b) for a, b in pairs]))
    jc_mean = float(np.mean([_jc([a, b]) for a, b in pairs]))
    pa_mean = float(np.mean([len(a) * len(b) for a, b in pairs]))
    return HeuristicFeatures(aa3, jc3, pa3, aa_mean, jc_mean, pa_mean)


def feature_table(graph: TemporalHypergraph, triplets: Sequence[Triplet]) -> np.ndarray:
    """Features for every triplet, in input order; one time-ordered sweep."""
    out = np.zeros((len(triplets), len(FEATURE_NAMES)))
    order = sorted(range(len(triplets)), key=lambda i: triplets[i].t)
    proj = StaticProjection(graph)
    for i in order:
        tr = triplets[i]
        proj.advance(tr.t)
        out[i] = features(proj, tr.u, tr.v, tr.w).as_tuple()
    return out


def write_feature_table(triplets: Sequence[Triplet], table: np.ndarray, fh, header: str | None = None) -> None:
    if header is not None:
        fh.write(f"# {header}\n")
    fh.write("\t".join(("u", "v", "w", "t") + FEATURE_NAMES) + "\n")
    for tr, row in zip(triplets, table):
        fh.write("\t".join([str(tr.u), str(tr.v), str(tr.w), repr(float(tr.t))] + [repr(float(x)) for x in row]) + "\n")


# -- classifier on one scalar feature ---------------------------------------

class HeuristicHead(nn.Module):
    """``log1p`` then z-score of the scalar feature, then Linear(1,10) -> act -> Linear(10,4)."""

    def __init__(self, hidden: int = 10, activation: str = "relu", n_classes: int = 4):
        super().__init__()
        self.register_buffer("loc", torch.zeros((), dtype=torch.float64))
        self.register_buffer("scale", torch.ones((), dtype=torch.float64))
        self.net = nn.Sequential(nn.Linear(1, hidden), make_activation(activation), nn.Linear(hidden, n_classes))
        self.double()

    def fit_scaler(self, x: np.ndarray) -> None:
        z = np.log1p(np.asarray(x, dtype=np.float64))
        self.loc.fill_(float(z.mean()))
        self.scale.fill_(float(z.std()) if z.std() > 0 else 1.0)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = (torch.log1p(x) - self.loc) / self.scale
        return self.net(z.unsqueeze(-1))

    def predict_proba(self, x) -> np.ndarray:
        with torch.no_grad():
            return torch.softmax(self(torch.as_tensor(np.asarray(x, dtype=np.float64))), -1).numpy()


def train_heuristic_head(x_train, y_train, seed: int = 0, epochs: int = 300, lr: float = 1e-2,
                         activation: str = "relu") -> HeuristicHead:
    """Full-batch Adam on cross-entropy."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        head = HeuristicHead(activation=activation)
    head.fit_scaler(x_train)
    x = torch.as_tensor(np.asarray(x_train, dtype=np.float64))
    y = torch.as_tensor(np.asarray(y_train, dtype=np.int64))
    opt = torch.optim.Adam(head.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    for _ in range(epochs):
        opt.zero_grad()
        loss = loss_fn(head(x), y)
        loss.backward()
        opt.step()
    return head


def instance_arrays(instances: Sequence[LabeledInstance]) -> tuple[list[Triplet], np.ndarray]:
    return [i.triplet for i in instances], np.array([int(i.label) for i in instances], dtype=np.int64)
