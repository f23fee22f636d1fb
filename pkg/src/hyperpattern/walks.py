"""Backward temporal random walks over hyperedges.

Each step from ``(z, t_l)`` picks a hyperedge of ``z`` with time ``< t_l`` with
probability proportional to ``(|e| - 1) * exp(alpha * (t_l - t))`` and then a
node of ``e \\ {z}`` uniformly.  A walk stops early (truncates) when the current
node has no history.

Randomness is counter based: walk ``j`` rooted at ``(z, t0)`` consumes draws
``[2*m*j, 2*m*(j+1))`` of a PCG64 stream seeded by ``(master_seed, z, t0,
salt)``, so a walk does not depend on which other walks are sampled with it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hypergraph import TemporalHypergraph
from .patterns import Triplet

ALPHA_GRID = (1e-6, 1e-5, 1e-4)
M_GRID = (64, 128)
STEP_GRID = (2, 3)


@dataclass(frozen=True)
class SamplerConfig:
    alpha: float = 1e-5
    M: int = 64
    m: int = 2
    master_seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.M < 1 or self.m < 1:
            raise ValueError("M and m must be at least 1")


@dataclass(frozen=True)
class Walk:
    """Sequence of ``(node, time)`` steps; step 0 is the root."""

    steps: tuple[tuple[int, float], ...]
    m: int

    @property
    def realized_len(self) -> int:
        return len(self.steps)

    @property
    def truncated(self) -> bool:
        return len(self.steps) < self.m + 1

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(s[0] for s in self.steps)

    def to_line(self) -> str:
        body = "\t".join(f"({n},{t!r})" for n, t in self.steps)
        return f"{body}\t{'T' if self.truncated else 'F'}"


@dataclass
class WalkSet:
    """``M`` walks rooted at one node, stored as padded arrays.

    ``nodes[j, i]`` is ``-1`` and ``times[j, i]`` is ``nan`` past the realized length.
    """

    root: int
    anchor: float
    nodes: np.ndarray
    times: np.ndarray
    lengths: np.ndarray

    @property
    def M(self) -> int:
        return self.nodes.shape[0]

    @property
    def m(self) -> int:
        return self.nodes.shape[1] - 1

    def walk(self, j: int) -> Walk:
        L = int(self.lengths[j])
        return Walk(tuple((int(self.nodes[j, i]), float(self.times[j, i])) for i in range(L)), self.m)

    @property
    def walks(self) -> list[Walk]:
        return [self.walk(j) for j in range(self.M)]

    def __len__(self):
        return self.M


def step_weights(graph: TemporalHypergraph, z: int, t_l: float, alpha: float) -> list[tuple[int, float]]:
    """Unnormalized hyperedge weights for one step from ``(z, t_l)``.

    Weights are shifted by the largest log-weight, so the most likely edge has
    weight ``|e| - 1`` scaled to at most 1 and nothing overflows; only ratios
    matter.
    """
    eids, logw, _ = _history_logweights(graph, z, t_l, alpha)
    if len(eids) == 0:
        return []
    w = np.exp(logw - logw.max())
    return list(zip(eids.tolist(), w.tolist()))


def step_probabilities(graph: TemporalHypergraph, z: int, t_l: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    eids, logw, _ = _history_logweights(graph, z, t_l, alpha)
    if len(eids) == 0:
        return eids, np.zeros(0)
    w = np.exp(logw - logw.max())
    return eids, w / w.sum()


def _history_logweights(graph, z, t_l, alpha):
    a = graph.inc_ptr[z]
    k = graph.history_cutoff(z, t_l)
    eids = graph.inc_edge[a:a + k]
    times = graph.inc_time[a:a + k]
    logw = np.log(graph.edge_size[eids] - 1.0) + alpha * (t_l - times)
    return eids, logw, graph.inc_pos[a:a + k]


def _stream(master_seed: int, z: int, t0: float, salt: int) -> np.random.Generator:
    bits = int(np.float64(t0).view(np.uint64))
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, int(z), bits & 0xFFFFFFFF, bits >> 32, int(salt)])
    return np.random.Generator(np.random.PCG64(ss))


def _walk_uniforms(config: SamplerConfig, z: int, t0: float, first: int, count: int, salt: int) -> np.ndarray:
    gen = _stream(config.master_seed, z, t0, salt)
    if first:
        gen.bit_generator.advance(2 * config.m * first)
    return gen.random((count, config.m, 2))


def _advance_walks(graph: TemporalHypergraph, cur_nodes, cur_times, u_edge, u_node, alpha):
    """One vectorized step for a batch of walk heads; returns (next_nodes, next_times, alive)."""
    n = len(cur_nodes)
    nxt = np.full(n, -1, dtype=np.int64)
    nxt_t = np.full(n, np.nan)
    alive = np.zeros(n, dtype=bool)
    keys = np.stack([cur_nodes.astype(np.float64), cur_times])
    _, group, = np.unique(keys, axis=1, return_inverse=True)
    group = group.ravel()
    order = np.argsort(group, kind="stable")
    bounds = np.flatnonzero(np.diff(group[order])) + 1
    for idx in np.split(order, bounds):
        if len(idx) == 0:
            continue
        z = int(cur_nodes[idx[0]])
        t_l = float(cur_times[idx[0]])
        eids, logw, pos = _history_logweights(graph, z, t_l, alpha)
        if len(eids) == 0:
            continue
        cdf = np.cumsum(np.exp(logw - logw.max()))
        pick = np.searchsorted(cdf, u_edge[idx] * cdf[-1], side="right")
        pick = np.minimum(pick, len(eids) - 1)
        chosen = eids[pick]
        sizes = graph.edge_size[chosen]
        k = np.minimum((u_node[idx] * (sizes - 1)).astype(np.int64), sizes - 2)
        starts = graph.edge_ptr[chosen]
        # skip over z itself inside the chosen edge
        k = k + (k >= pos[pick])
        nxt[idx] = graph.edge_nodes[starts + k]
        nxt_t[idx] = graph.edge_time[chosen]
        alive[idx] = True
    return nxt, nxt_t, alive


def sample_walks(graph: TemporalHypergraph, z: int, t0: float, config: SamplerConfig,
                 n_walks: int | None = None, first: int = 0, salt: int = 0) -> WalkSet:
    """Walks ``first .. first+n_walks-1`` rooted at ``(z, t0)`` (default ``n_walks = M``)."""
    n = config.M if n_walks is None else int(n_walks)
    L = config.m + 1
    nodes = np.full((n, L), -1, dtype=np.int64)
    times = np.full((n, L), np.nan)
    lengths = np.ones(n, dtype=np.int64)
    nodes[:, 0] = z
    times[:, 0] = t0
    if n == 0:
        return WalkSet(z, t0, nodes, times, lengths)
    u = _walk_uniforms(config, z, t0, first, n, salt)
    active = np.arange(n)
    for i in range(1, L):
        if len(active) == 0:
            break
        nx, nt, alive = _advance_walks(graph, nodes[active, i - 1], times[active, i - 1],
                                       u[active, i - 1, 0], u[active, i - 1, 1], config.alpha)
        active = active[alive]
        nodes[active, i] = nx[alive]
        times[active, i] = nt[alive]
        lengths[active] += 1
    return WalkSet(z, t0, nodes, times, lengths)


def sample_walk(graph: TemporalHypergraph, z: int, t0: float, config: SamplerConfig, walk_index: int,
                salt: int = 0) -> Walk:
    return sample_walks(graph, z, t0, config, n_walks=1, first=walk_index, salt=salt).walk(0)


def sample_triplet_context(graph: TemporalHypergraph, triplet: Triplet, config: SamplerConfig,
                           salt: int = 0) -> tuple[WalkSet, WalkSet, WalkSet]:
    t = triplet.t
    return tuple(sample_walks(graph, z, t, config, salt=salt) for z in (triplet.u, triplet.v, triplet.w))


class InconsistentWalkError(ValueError):
    pass


def _step_transition(graph, z, t_l, alpha, nxt, t_next) -> float:
    """Probability of moving from ``(z, t_l)`` to ``(nxt, t_next)`` in one step."""
    eids, probs = step_probabilities(graph, z, t_l, alpha)
    total = 0.0
    for e, p in zip(eids.tolist(), probs.tolist()):
        if graph.edge_time[e] != t_next:
            continue
        nodes = graph.nodes_of(e)
        if _has(nodes, nxt) and nxt != z:
            total += p / (len(nodes) - 1)
    return total


def _has(nodes, x):
    k = np.searchsorted(nodes, x)
    return k < len(nodes) and nodes[k] == x


def walk_probability(graph: TemporalHypergraph, walk: Walk, alpha: float) -> float:
    """Exact probability that the sampler produces this ``(node, time)`` sequence."""
    steps = walk.steps
    if not steps:
        raise InconsistentWalkError("empty walk")
    prob = 1.0
    for (z, t_l), (nxt, t_n) in zip(steps, steps[1:]):
        if not t_n < t_l:
            raise InconsistentWalkError(f"step time {t_n} is not before {t_l}")
        p = _step_transition(graph, z, t_l, alpha, nxt, t_n)
        if p == 0.0:
            raise InconsistentWalkError(f"no hyperedge at time {t_n} joins {z} and {nxt}")
        prob *= p
    z, t_l = steps[-1]
    has_history = graph.history_cutoff(z, t_l) > 0
    if walk.truncated and has_history:
        # sampler never stops while history remains
        return 0.0
    return prob


def enumerate_walks(graph: TemporalHypergraph, z: int, t0: float, m: int, alpha: float) -> dict[Walk, float]:
    """Every walk the sampler can emit from ``(z, t0)``, with its exact probability."""
    out: dict[Walk, float] = {}

    def rec(steps, prob):
        if len(steps) == m + 1:
            out[Walk(tuple(steps), m)] = out.get(Walk(tuple(steps), m), 0.0) + prob
            return
        cz, ct = steps[-1]
        eids, probs = step_probabilities(graph, cz, ct, alpha)
        if len(eids) == 0:
            w = Walk(tuple(steps), m)
            out[w] = out.get(w, 0.0) + prob
            return
        # merge edges leading to the same (node, time)
        moves: dict[tuple[int, float], float] = {}
        for e, p in zip(eids.tolist(), probs.tolist()):
            nodes = graph.nodes_of(e).tolist()
            share = p / (len(nodes) - 1)
            te = float(graph.edge_time[e])
            for x in nodes:
                if x != cz:
                    moves[(x, te)] = moves.get((x, te), 0.0) + share
        for step, p in sorted(moves.items()):
            rec(steps + [step], prob * p)

    rec([(int(z), float(t0))], 1.0)
    return out


def write_walks(walk_sets, fh) -> None:
    for ws in walk_sets:
        for w in ws.walks:
            fh.write(w.to_line() + "\n")
