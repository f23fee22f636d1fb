"""Tiny hand-built graphs shared by the self-test command and the test suite."""

from __future__ import annotations

from .hypergraph import TemporalHypergraph
from .patterns import Triplet
from .theory import IsomorphismWitness, relabeled_witness


def _g(edges, n=None) -> TemporalHypergraph:
    return TemporalHypergraph.from_edges(edges, n)


# (graph, root, t0) triples with at most 6 nodes and 10 edges
def sampler_fixtures() -> list[tuple[str, TemporalHypergraph, int, float]]:
    return [
        ("single_edge", _g([((0, 1), 1.0)]), 0, 2.0),
        ("two_sizes", _g([((0, 1, 2), 5.0), ((0, 3), 9.0)]), 0, 10.0),
        ("star", _g([((0, 1), 1.0), ((0, 2), 2.0), ((0, 3), 3.0), ((0, 4), 4.0), ((1, 2), 0.5)]), 0, 5.0),
        ("chain", _g([((0, 1), 4.0), ((1, 2), 3.0), ((2, 3), 2.0), ((1, 3), 1.0), ((0, 2), 3.5)]), 0, 5.0),
        ("hyper", _g([((0, 1, 2, 3), 2.0), ((1, 4), 1.0), ((2, 5), 1.5), ((0, 5), 3.0), ((3, 4, 5), 0.5),
                      ((0, 1), 2.5), ((4, 5), 0.2)]), 0, 4.0),
        ("repeats", _g([((0, 1), 1.0), ((0, 1), 2.0), ((0, 2), 2.0), ((1, 2), 0.5), ((2, 3), 1.5),
                        ((0, 3, 4), 2.5), ((4, 5), 1.0), ((1, 5), 0.7), ((3, 5), 0.1), ((0, 5), 2.9)]), 0, 3.0),
    ]


# -- isomorphism witnesses -------------------------------------------------

def _base_graph():
    # anchor t=10 on {0, 1}; third node 2; helpers 3, 4; 5 is two hops out
    g = _g([((0, 3), 4.0), ((1, 3), 5.0), ((2, 4), 6.0), ((3, 4, 5), 3.0), ((0, 1), 10.0),
            ((2, 5), 2.0)])
    return g, Triplet(10.0, 0, 1, 2)


def witnesses() -> list[IsomorphismWitness]:
    """Valid witnesses: pairs of triplets with isomorphic historical neighborhoods (8 nodes or fewer)."""
    g, tr = _base_graph()
    out = [
        relabeled_witness(g, tr, {0: 5, 1: 4, 2: 3, 3: 2, 4: 1, 5: 0}, 17.5, name="relabel_shift"),
        relabeled_witness(g, tr, {x: x for x in range(6)}, 0.0, name="identity"),
        # u and v exchanged: the statement only asks {pi(u), pi(v)} = {u', v'}
        relabeled_witness(g, tr, {0: 1, 1: 0, 3: 3, 2: 2, 4: 4, 5: 5}, -1.0, name="swap_uv"),
        # extra edges after the anchor or beyond m hops leave the neighborhood unchanged
        relabeled_witness(g, tr, {x: x for x in range(6)}, 3.0,
                          extra_edges=[((0, 2), 20.0), ((1, 2, 4), 15.0)], name="future_edges"),
        relabeled_witness(g, tr, {x: x for x in range(6)}, 0.0,
                          extra_edges=[((6, 7), 1.0), ((6, 7), 9.0)], name="far_component"),
    ]
    # hyperedge-heavy neighborhood in a second base graph
    h = _g([((0, 3, 4), 1.0), ((1, 3, 5), 2.0), ((2, 4, 5), 2.5), ((3, 5), 3.0), ((0, 1, 6), 6.0),
            ((0, 3, 4), 4.0)])
    out.append(relabeled_witness(h, Triplet(6.0, 0, 1, 2), {0: 3, 1: 2, 2: 1, 3: 0, 4: 6, 5: 5, 6: 4}, 100.0,
                                 name="hyper_relabel"))
    return out


def extra_edge_witness() -> IsomorphismWitness:
    """Negative control: the second graph has one more hyperedge inside the neighborhood."""
    g, tr = _base_graph()
    return relabeled_witness(g, tr, {x: x for x in range(6)}, 0.0, extra_edges=[((0, 4), 7.0)],
                             name="extra_edge")


def role_swap_witness() -> IsomorphismWitness:
    """The same neighborhood with ``u`` and ``w`` exchanged: isomorphic as unordered triplets only."""
    g, tr = _base_graph()
    w = relabeled_witness(g, tr, {x: x for x in range(6)}, 0.0, name="role_swap")
    t2 = Triplet(tr.t, tr.w, tr.v, tr.u)
    return IsomorphismWitness(w.graph1, w.triplet1, w.graph2, t2, w.pi, "role_swap")
