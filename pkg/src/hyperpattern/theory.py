"""Exact check that isomorphic historical neighborhoods induce equal DE distributions.

Everything here is enumeration, not sampling: walk distributions come from
:func:`enumerate_walks` and the distribution of the count vectors over ``M``
independent walks is an exact convolution.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

from .hypergraph import TemporalHypergraph
from .patterns import Triplet
from .walks import enumerate_walks


class InvalidWitnessError(ValueError):
    pass


@dataclass(frozen=True)
class IsomorphismWitness:
    graph1: TemporalHypergraph
    triplet1: Triplet
    graph2: TemporalHypergraph
    triplet2: Triplet
    pi: dict[int, int]
    # triplet2.(u, v) may be pi's image in either order
    name: str = ""


def historical_edges(graph: TemporalHypergraph, triplet: Triplet, m: int) -> list[int]:
    """Hyperedges before ``t`` within hyperedge distance ``m`` of ``u``, ``v`` or ``w``."""
    t = triplet.t
    before = [e for e in range(graph.n_edges) if graph.edge_time[e] < t]
    frontier = {triplet.u, triplet.v, triplet.w}
    chosen: set[int] = set()
    for _ in range(m):
        layer = {e for e in before if e not in chosen and frontier & set(graph.nodes_of(e).tolist())}
        if not layer:
            break
        chosen |= layer
        frontier = set().union(*(set(graph.nodes_of(e).tolist()) for e in layer))
    return sorted(chosen)


def historical_nodes(graph: TemporalHypergraph, triplet: Triplet, m: int) -> set[int]:
    nodes = {triplet.u, triplet.v, triplet.w}
    for e in historical_edges(graph, triplet, m):
        nodes.update(graph.nodes_of(e).tolist())
    return nodes


def validate_witness(witness: IsomorphismWitness, m: int) -> None:
    """Raise :class:`InvalidWitnessError` unless ``pi`` is a role-preserving, time-shift isomorphism."""
    g1, g2, t1, t2, pi = witness.graph1, witness.graph2, witness.triplet1, witness.triplet2, witness.pi
    n1, n2 = historical_nodes(g1, t1, m), historical_nodes(g2, t2, m)
    if set(pi) != n1:
        raise InvalidWitnessError("pi must be defined exactly on the first historical node set")
    if sorted(pi.values()) != sorted(n2) or len(set(pi.values())) != len(pi):
        raise InvalidWitnessError("pi is not a bijection onto the second historical node set")
    if {pi[t1.u], pi[t1.v]} != {t2.u, t2.v} or pi[t1.w] != t2.w:
        raise InvalidWitnessError("pi does not map {u, v} to {u', v'} and w to w'")
    e1 = Counter((tuple(sorted(pi[x] for x in g1.nodes_of(e).tolist())), t1.t - float(g1.edge_time[e]))
                 for e in historical_edges(g1, t1, m))
    e2 = Counter((tuple(g2.nodes_of(e).tolist()), t2.t - float(g2.edge_time[e]))
                 for e in historical_edges(g2, t2, m))
    if e1 != e2:
        raise InvalidWitnessError("hyperedges or time differences are not preserved by pi")


def _relative_walks(graph, z, t0, m, alpha) -> dict[tuple, float]:
    """Walk distribution keyed by ``((node, t0 - t_i), ...)``."""
    out: dict[tuple, float] = defaultdict(float)
    for w, p in enumerate_walks(graph, z, t0, m, alpha).items():
        out[tuple((n, t0 - t) for n, t in w.steps)] += p
    return dict(out)


def _hit_vector(walk_key, a, m) -> tuple[int, ...]:
    return tuple(int(i < len(walk_key) and walk_key[i][0] == a) for i in range(m + 1))


def _count_distribution(walks: dict[tuple, float], a: int, m: int, M: int) -> dict[tuple[int, ...], float]:
    """Exact distribution of ``g(a; S)`` for ``M`` independent walks."""
    single: dict[tuple, float] = defaultdict(float)
    for key, p in walks.items():
        single[_hit_vector(key, a, m)] += p
    dist = {tuple([0] * (m + 1)): 1.0}
    for _ in range(M):
        nxt: dict[tuple, float] = defaultdict(float)
        for c, p in dist.items():
            for h, q in single.items():
                nxt[tuple(x + y for x, y in zip(c, h))] += p * q
        dist = dict(nxt)
    return dist


def de_distribution(graph, triplet: Triplet, node: int, m: int, alpha: float, M: int,
                    walks=None) -> tuple[float, dict]:
    """``P(node appears)`` and the conditional law of ``({g_u, g_v}, g_w)`` given it appears.

    The u/v pair is unordered, matching the symmetry of the asymmetric DE.
    """
    if walks is None:
        walks = [_relative_walks(graph, z, triplet.t, m, alpha) for z in (triplet.u, triplet.v, triplet.w)]
    du, dv, dw = (_count_distribution(W, node, m, M) for W in walks)
    joint: dict[tuple, float] = defaultdict(float)
    zero = tuple([0] * (m + 1))
    p_absent = 0.0
    for gu, pu in du.items():
        for gv, pv in dv.items():
            for gw, pw in dw.items():
                p = pu * pv * pw
                if gu == zero and gv == zero and gw == zero:
                    p_absent += p
                    continue
                joint[(tuple(sorted((gu, gv))), gw)] += p
    p_in = 1.0 - p_absent
    if p_in <= 0:
        return 0.0, {}
    return p_in, {k: v / p_in for k, v in joint.items()}


@dataclass
class TheoremResult:
    passed: bool
    max_walk_diff: float
    max_appear_diff: float
    max_de_diff: float
    n_nodes: int


def isomorphism_check(witness: IsomorphismWitness, m: int = 2, alpha: float = 1e-5, M: int = 2,
                     tol: float = 1e-12, validate: bool = True) -> TheoremResult:
    """Compare exact walk, appearance and DE distributions of the two triplets under ``pi``."""
    if validate:
        validate_witness(witness, m)
    g1, g2, t1, t2, pi = witness.graph1, witness.graph2, witness.triplet1, witness.triplet2, witness.pi
    walks1 = [_relative_walks(g1, z, t1.t, m, alpha) for z in (t1.u, t1.v, t1.w)]
    walks2 = [_relative_walks(g2, z, t2.t, m, alpha) for z in (t2.u, t2.v, t2.w)]
    # roots of triplet2 in the order matching pi(u), pi(v), pi(w)
    order2 = [(t2.u, t2.v, t2.w).index(pi.get(z, -1)) if pi.get(z, -1) in (t2.u, t2.v, t2.w) else None
              for z in (t1.u, t1.v, t1.w)]

    def mapped(W):
        return {tuple((pi.get(n, -1 - n), dt) for n, dt in key): p for key, p in W.items()}

    walk_diff = 0.0
    for i, W in enumerate(walks1):
        other = walks2[order2[i]] if order2[i] is not None else {}
        A = mapped(W)
        for key in set(A) | set(other):
            walk_diff = max(walk_diff, abs(A.get(key, 0.0) - other.get(key, 0.0)))

    appear_diff = de_diff = 0.0
    inv = {b: a for a, b in pi.items()}
    nodes1 = historical_nodes(g1, t1, m)
    nodes2 = historical_nodes(g2, t2, m)
    pairs = [(a, pi.get(a)) for a in sorted(nodes1)] + [(None, b) for b in sorted(nodes2) if b not in inv]
    for a, b in pairs:
        p1, d1 = de_distribution(g1, t1, a, m, alpha, M, walks1) if a is not None else (0.0, {})
        p2, d2 = de_distribution(g2, t2, b, m, alpha, M, walks2) if b is not None else (0.0, {})
        appear_diff = max(appear_diff, abs(p1 - p2))
        for key in set(d1) | set(d2):
            de_diff = max(de_diff, abs(d1.get(key, 0.0) - d2.get(key, 0.0)))
    passed = max(walk_diff, appear_diff, de_diff) <= tol
    return TheoremResult(passed, walk_diff, appear_diff, de_diff, len(pairs))


def relabeled_witness(graph: TemporalHypergraph, triplet: Triplet, perm: dict[int, int], shift: float,
                      extra_edges=(), name: str = "", m: int = 2) -> IsomorphismWitness:
    """Copy of ``graph`` with nodes renamed by ``perm`` and times shifted, plus optional extra edges."""
    edges = [(tuple(perm.get(x, x) for x in nodes), t + shift) for nodes, t in graph.edge_list()]
    edges += list(extra_edges)
    n = max(max(perm.values(), default=0) + 1, graph.n_nodes,
            max((max(e) for e, _ in edges), default=0) + 1)
    g2 = TemporalHypergraph.from_edges(edges, n)
    t2 = Triplet(triplet.t + shift, perm.get(triplet.u, triplet.u), perm.get(triplet.v, triplet.v),
                 perm.get(triplet.w, triplet.w))
    pi = {a: perm.get(a, a) for a in historical_nodes(graph, triplet, m)}
    return IsomorphismWitness(graph, triplet, g2, t2, pi, name)
