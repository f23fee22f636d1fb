"""Slow, obviously-correct reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np

from hyperpattern.hypergraph import TemporalHypergraph
from hyperpattern.patterns import Pattern


def random_graph(rng: np.random.Generator, n_nodes: int = 20, n_edges: int = 40, max_size: int = 4,
                 t_max: int = 30) -> TemporalHypergraph:
    """Integer timestamps so that ties are common."""
    edges = []
    for _ in range(n_edges):
        k = int(rng.integers(2, max_size + 1))
        nodes = rng.choice(n_nodes, size=k, replace=False)
        edges.append((nodes.tolist(), float(rng.integers(0, t_max + 1))))
    return TemporalHypergraph.from_edges(edges, n_nodes)


def edge_sets(graph):
    return [(set(nodes), t) for nodes, t in graph.edge_list()]


def first_cover(edges, a, b):
    ts = [t for s, t in edges if a in s and b in s]
    return min(ts) if ts else math.inf


def is_triplet_of_interest(edges, t, u, v, w) -> bool:
    if len({u, v, w}) < 3:
        return False
    if first_cover(edges, u, v) != t:
        return False
    return first_cover(edges, u, w) > t and first_cover(edges, v, w) > t


def brute_label(edges, t, u, v, w, window):
    """(pattern, t_wedge, t_triangle, t_closure) straight from the definitions."""
    inside = [(s, te) for s, te in edges if t < te <= t + window]
    t_uw = min((te for s, te in inside if u in s and w in s), default=None)
    t_vw = min((te for s, te in inside if v in s and w in s), default=None)
    t_uvw = min((te for s, te in inside if {u, v, w} <= s), default=None)
    pair = [x for x in (t_uw, t_vw) if x is not None]
    tw = min(pair) - t if pair else None
    tt = max(pair) - t if len(pair) == 2 else None
    tc = t_uvw - t if t_uvw is not None else None
    if tc is not None:
        p = Pattern.CLOSURE
    elif tt is not None:
        p = Pattern.TRIANGLE
    elif tw is not None:
        p = Pattern.WEDGE
    else:
        p = Pattern.EDGE
    return p, tw, tt, tc


def brute_instances(graph, split_config):
    """Cubic loop over every (pair, third node)."""
    edges = edge_sets(graph)
    T = graph.time_range
    window = split_config.window_fraction * T
    out = []
    for u, v in itertools.combinations(range(graph.n_nodes), 2):
        t = first_cover(edges, u, v)
        if not math.isfinite(t):
            continue
        if split_config.split_of((t - graph.t_min) / T) is None:
            continue
        for w in range(graph.n_nodes):
            if is_triplet_of_interest(edges, t, u, v, w):
                out.append(((t, u, v, w), brute_label(edges, t, u, v, w, window)))
    return sorted(out)


def naive_counts(a, walk_set):
    M, L = walk_set.nodes.shape
    out = [0] * L
    for j in range(M):
        for i in range(L):
            if walk_set.nodes[j, i] == a:
                out[i] += 1
    return out


def clique_neighbors(graph, z, t):
    out = set()
    for nodes, te in graph.edge_list():
        if te < t and z in nodes:
            out.update(nodes)
    out.discard(z)
    return out
