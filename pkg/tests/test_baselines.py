import math

import numpy as np
import pytest
import torch

from hyperpattern.baselines import (FEATURE_NAMES, HeuristicHead, StaticProjection, feature_table, features,
                                    project, train_heuristic_head)
from hyperpattern.hypergraph import TemporalHypergraph
from hyperpattern.metrics import auc_1v1, grad_check
from hyperpattern.patterns import Triplet
from oracles import clique_neighbors, random_graph

G = TemporalHypergraph.from_edges


def test_clique_expansion_example():
    g = G([((0, 1, 2), 1.0), ((2, 3), 2.0), ((0, 4), 5.0)])
    p = project(g, 5.0)
    assert p.N(0) == {1, 2} and p.N(2) == {0, 1, 3} and p.N(4) == set()
    assert project(g, 0.0).neighbors == {}


def test_projection_matches_quadratic_scan():
    g = random_graph(np.random.default_rng(0), 20, 50)
    proj = StaticProjection(g)
    for t in (0.0, 7.0, 7.0, 15.5, 31.0):
        proj.advance(t)
        for z in range(20):
            assert proj.N(z) == clique_neighbors(g, z, t)
    with pytest.raises(ValueError):
        proj.advance(1.0)


def test_three_way_features():
    # hub 9 touches exactly u, v and w, so its degree is 3
    g = G([((0, 9), 1.0), ((1, 9), 1.0), ((2, 9), 1.0)])
    f = features(project(g, 2.0), 0, 1, 2)
    assert f.aa3 == pytest.approx(1 / math.log(3), abs=1e-15)
    assert f.aa3 == pytest.approx(0.910239226626837, abs=1e-12)
    assert f.jc3 == 1.0 and f.pa3 == 1.0
    assert f.aa_mean == pytest.approx(f.aa3, abs=1e-15) and f.jc_mean == 1.0 and f.pa_mean == 1.0


def test_preferential_attachment_product():
    g = G([((0, 3, 4), 1.0), ((1, 5, 6, 7), 1.0), ((2, 8, 9, 10, 11), 1.0)])
    f = features(project(g, 2.0), 0, 1, 2)
    assert f.pa3 == 24.0 and f.pa_mean == pytest.approx((6 + 8 + 12) / 3)
    assert f.aa3 == 0.0 and f.jc3 == 0.0


def test_degree_one_common_neighbor_adds_nothing():
    g = G([((0, 1, 5), 1.0)])
    # 5 has degree 2 here, so only the pair (u, v) scores
    f = features(project(g, 2.0), 0, 1, 2)
    assert f.aa_mean == pytest.approx(1 / math.log(2) / 3)


def test_feature_table_keeps_input_order():
    g = random_graph(np.random.default_rng(1), 15, 40)
    trs = [Triplet(25.0, 0, 1, 2), Triplet(5.0, 3, 4, 5), Triplet(15.0, 6, 7, 8)]
    table = feature_table(g, trs)
    assert table.shape == (3, len(FEATURE_NAMES))
    for tr, row in zip(trs, table):
        assert row.tolist() == list(features(project(g, tr.t), tr.u, tr.v, tr.w).as_tuple())


def test_zero_head_is_uniform():
    head = HeuristicHead()
    with torch.no_grad():
        head.net[-1].weight.zero_()
        head.net[-1].bias.zero_()
    assert np.array_equal(head.predict_proba([0.0, 3.0, 100.0]), np.full((3, 4), 0.25))


def test_head_gradient():
    torch.manual_seed(0)
    head = HeuristicHead(activation="tanh")
    head.fit_scaler(np.array([0.0, 1.0, 5.0]))
    x = torch.tensor([0.0, 0.7, 2.0, 9.0], dtype=torch.float64)
    y = torch.tensor([0, 1, 2, 3])
    loss = lambda: torch.nn.functional.cross_entropy(head(x), y)
    assert grad_check(loss, dict(head.named_parameters())).max_rel_error <= 1e-4


def test_head_learns_a_monotone_feature():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 4, 400)
    x = np.exp(y + rng.normal(0, 0.3, 400)) - 1 + 1e-3
    head = train_heuristic_head(x[:300], y[:300], seed=0)
    assert auc_1v1(head.predict_proba(x[300:]), y[300:]) > 90
    again = train_heuristic_head(x[:300], y[:300], seed=0)
    assert np.array_equal(head.predict_proba(x[300:]), again.predict_proba(x[300:]))
