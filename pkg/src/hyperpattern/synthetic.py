"""Synthetic temporal hypergraph with structurally planted triplet outcomes.

Every block holds one triplet ``({u, v}, w, t)``.  Its class is decided by how
``w`` is wired to ``u``/``v`` through helper nodes shortly before the anchor:

* Closure   ``w`` shares a helper with ``u`` and a different one with ``v``
* Triangle  ``w`` shares one helper with both ``u`` and ``v``
* Wedge     ``w`` shares a helper with ``u`` only
* Edge      ``w`` only has private helpers

All blocks share the same ``u``/``v`` scaffold (a common helper ``c_uv``
visited alternately) and ``u``, ``v``, ``w`` have exactly two helpers each,
so degree products carry no class signal.  Helper-to-``w`` edges are later
than ``u``/``v``-to-helper edges, which makes the backward walk
``w -> c1 -> u`` the planted Closure signature.  Formation offsets are
log-normal in raw time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hypergraph import TemporalHypergraph, normalize_time
from .patterns import LabeledInstance, PairIndex, Pattern, SplitConfig, Triplet, label_triplet

# context edges as (pair, window) with the window in
# "fraction of the context span before the anchor"
_EARLY = (0.6, 1.0)
_LATE = (0.05, 0.45)
_SCAFFOLD = ((("u", "c_uv"), (0.9, 1.0)), (("v", "c_uv"), (0.8, 0.9)),
             (("u", "c_uv"), (0.7, 0.8)), (("v", "c_uv"), (0.6, 0.7)))

# extra helper roles and context edges per class
LAYOUTS = {
    Pattern.CLOSURE: (("c1", "c2"), (
        (("u", "c1"), _EARLY), (("v", "c2"), _EARLY),
        (("c1", "w"), _LATE), (("c2", "w"), _LATE))),
    Pattern.TRIANGLE: (("c_uvw", "h"), (
        (("u", "c_uvw"), _EARLY), (("v", "c_uvw"), _EARLY),
        (("c_uvw", "w"), _LATE), (("w", "h"), _LATE))),
    Pattern.WEDGE: (("c_uw", "c_v", "h"), (
        (("u", "c_uw"), _EARLY), (("v", "c_v"), _EARLY),
        (("c_uw", "w"), _LATE), (("w", "h"), _LATE))),
    Pattern.EDGE: (("c_u", "c_v", "h1", "h2"), (
        (("u", "c_u"), _EARLY), (("v", "c_v"), _EARLY),
        (("w", "h1"), _LATE), (("w", "h2"), _LATE))),
}


def block_roles(p: Pattern) -> tuple[str, ...]:
    return ("u", "v", "w", "c_uv") + LAYOUTS[p][0]


NODES_PER_GROUP = sum(len(block_roles(p)) for p in Pattern)


@dataclass(frozen=True)
class PlantedConfig:
    n_nodes: int = 2000
    n_groups: int = 70                 # one block of each class per group
    n_edges: int = 50_000
    raw_range: float = 1.0e6
    context_fraction: float = 0.05     # helper edges fall in (t - c*T, t)
    log_mean_fraction: float = 0.01    # median formation offset as a fraction of T
    log_sigma: float = 0.5
    triangle_sigma: float = 0.5
    max_noise_links: int = 2
    seed: int = 0


@dataclass
class PlantedData:
    graph: TemporalHypergraph           # normalized time
    instances: list[LabeledInstance]
    blocks: list[tuple[Pattern, dict[str, int]]]
    split_config: SplitConfig
    log_mu: float                        # offsets: log t ~ N(log_mu, log_sigma^2), normalized units
    log_sigma: float
    config: PlantedConfig

    def split(self, name: str) -> list[LabeledInstance]:
        return [i for i in self.instances if i.split == name]


def _lognormal(rng, mu, sigma, cap):
    while True:
        x = math.exp(rng.normal(mu, sigma))
        if x < cap:
            return x


def _group_slots(n_groups: int, split_config: SplitConfig):
    """``(lo, hi, slot, n_slots)`` per group; groups never straddle a split boundary.

    Groups are shared out in proportion to split length, so every split holds
    whole groups and therefore equally many instances of each class.
    """
    b = split_config.boundaries
    lengths = np.diff(b)
    share = np.floor(n_groups * lengths / lengths.sum()).astype(int)
    share[0] += n_groups - share.sum()
    out = []
    for s, n in enumerate(share):
        out.extend((b[s], b[s + 1], i, int(n)) for i in range(n))
    return out


def _future_edges(p, ids, t, rng, mu, config, window):
    u, v, w = ids["u"], ids["v"], ids["w"]
    if p == Pattern.CLOSURE:
        return [((u, v, w), t + _lognormal(rng, mu, config.log_sigma, window))]
    if p == Pattern.WEDGE:
        return [((u, w), t + _lognormal(rng, mu, config.log_sigma, window))]
    if p == Pattern.TRIANGLE:
        d1 = _lognormal(rng, mu, config.log_sigma, window)
        while True:
            d2 = d1 * math.exp(abs(rng.normal(0.0, config.triangle_sigma)))
            if d2 < window:
                break
        return [((u, w), t + d1), ((v, w), t + d2)]
    return []


def planted_dataset(config: PlantedConfig = PlantedConfig(), split_config: SplitConfig = SplitConfig()) -> PlantedData:
    rng = np.random.default_rng(config.seed)
    T = config.raw_range
    n_noise = config.n_nodes - NODES_PER_GROUP * config.n_groups
    if n_noise < 8:
        raise ValueError("not enough nodes left for the noise pool")
    noise = np.arange(n_noise)
    edges: list[tuple[tuple[int, ...], float]] = []
    blocks: list[tuple[Pattern, dict[str, int]]] = []
    window = split_config.window_fraction * T
    mu = math.log(config.log_mean_fraction * T)
    ctx = config.context_fraction * T
    next_id = n_noise
    for lo, hi, slot, n_slots in _group_slots(config.n_groups, split_config):
        # the four classes of a group fill four consecutive anchor slots in random order
        for j, k in enumerate(rng.permutation(4)):
            p = list(Pattern)[int(k)]
            roles = block_roles(p)
            ids = {name: next_id + i for i, name in enumerate(roles)}
            next_id += len(roles)
            blocks.append((p, ids))
            t = T * (lo + (hi - lo) * (4 * slot + j + rng.uniform(0.05, 0.95)) / (4 * n_slots))
            for (a, c), (f0, f1) in _SCAFFOLD + LAYOUTS[p][1]:
                edges.append(((ids[a], ids[c]), t - ctx * rng.uniform(f0, f1)))
            for z in ("u", "v"):
                for x in rng.choice(noise, rng.integers(0, config.max_noise_links + 1), replace=False):
                    edges.append(((ids[z], int(x)), t - ctx * rng.uniform(*_EARLY)))
            edges.append(((ids["u"], ids["v"]), t))
            edges.extend(_future_edges(p, ids, t, rng, mu, config, window))
    n_fill = config.n_edges - len(edges)
    if n_fill < 2:
        raise ValueError("n_edges too small for the planted blocks")
    fill_times = rng.uniform(0.0, T, n_fill)
    fill_times[0], fill_times[1] = 0.0, T
    sizes = rng.choice([2, 2, 2, 3, 3, 4], n_fill)
    for k, tt in zip(sizes, fill_times):
        edges.append((tuple(int(x) for x in rng.choice(noise, k, replace=False)), float(tt)))
    raw = TemporalHypergraph.from_edges(edges, config.n_nodes)
    graph = normalize_time(raw)
    log_mu = mu + math.log(graph.time_range / raw.time_range)

    index = PairIndex(graph)
    window_n = split_config.window_fraction * graph.time_range
    instances = []
    for p, ids in blocks:
        t = index.first(ids["u"], ids["v"])
        split = split_config.split_of((t - graph.t_min) / graph.time_range)
        if split is None:
            continue
        tr = Triplet(t, ids["u"], ids["v"], ids["w"])
        label, times = label_triplet(graph, tr, window_n, index)
        if label != p:
            raise AssertionError(f"planted {p.name} but labeled {label.name} for {tr}")
        instances.append(LabeledInstance(tr, label, times, split))
    instances.sort(key=lambda i: i.triplet.key)
    return PlantedData(graph, instances, blocks, split_config, log_mu, config.log_sigma, config)


def reachable_spd(graph: TemporalHypergraph, root: int, t0: float, m: int) -> dict[int, int]:
    """Smallest walk position at which each node can appear; exact support of the sampler when ``alpha`` is finite."""
    best = {root: 0}
    # latest time at which a node is reachable at the current position
    frontier = {root: t0}
    for i in range(1, m + 1):
        nxt: dict[int, float] = {}
        for z, t_l in frontier.items():
            eids, times = graph.incidence(z)
            k = graph.history_cutoff(z, t_l)
            for e, te in zip(eids[:k].tolist(), times[:k].tolist()):
                for x in graph.nodes_of(e).tolist():
                    if x != z and te > nxt.get(x, -math.inf):
                        nxt[x] = te
        for x in nxt:
            best.setdefault(x, i)
        frontier = nxt
    return best


def exact_category(graph: TemporalHypergraph, triplet: Triplet, nodes: tuple[int, ...], m: int):
    """Walk category of a node sequence when every possible walk has been observed."""
    spds = [reachable_spd(graph, z, triplet.t, m) for z in (triplet.u, triplet.v, triplet.w)]
    out = []
    for i in range(m + 1):
        if i >= len(nodes):
            out.append(((m + 1, m + 1), m + 1))
            continue
        a, b, c = (s.get(nodes[i], m + 1) for s in spds)
        out.append(((min(a, b), max(a, b)), c))
    return tuple(out)


def planted_closure_category(data: PlantedData, m: int = 2):
    """Category of the walk ``w -> c1 -> u`` in the first labeled Closure block."""
    by_w = {ids["w"]: ids for p, ids in data.blocks if p == Pattern.CLOSURE}
    inst = next(i for i in data.instances if i.label == Pattern.CLOSURE)
    ids = by_w[inst.triplet.w]
    return exact_category(data.graph, inst.triplet, (ids["w"], ids["c1"], ids["u"]), m)
