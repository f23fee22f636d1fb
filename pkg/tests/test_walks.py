import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperpattern.fixtures import sampler_fixtures
from hyperpattern.hypergraph import TemporalHypergraph
from hyperpattern.patterns import Triplet
from hyperpattern.walks import (InconsistentWalkError, SamplerConfig, Walk, enumerate_walks, sample_triplet_context,
                                sample_walk, sample_walks, step_probabilities, step_weights, walk_probability,
                                write_walks)
from oracles import random_graph

G = TemporalHypergraph.from_edges


def test_step_probability_frozen_value():
    # e_a = {0,1,2} at t=5, e_b = {0,3} at t=9, stepping from t_l = 10 with alpha = 0.1
    g = G([((0, 1, 2), 5.0), ((0, 3), 9.0)])
    eids, p = step_probabilities(g, 0, 10.0, 0.1)
    assert eids.tolist() == [0, 1]
    assert p[0] == pytest.approx(0.748973892837004, abs=1e-12)
    w = dict(step_weights(g, 0, 10.0, 0.1))
    assert w[0] / w[1] == pytest.approx(2 * math.exp(0.5) / math.exp(0.1), rel=1e-12)


def test_alpha_zero_weights_only_by_size():
    g = G([((0, 1), 1.0), ((0, 2), 7.0), ((0, 3, 4), 8.0)])
    _, p = step_probabilities(g, 0, 10.0, 0.0)
    assert p.tolist() == pytest.approx([0.25, 0.25, 0.5], abs=1e-15)


def test_no_history():
    g = G([((0, 1), 5.0)])
    assert step_weights(g, 0, 5.0, 0.1) == []
    w = sample_walk(g, 0, 5.0, SamplerConfig(M=1, m=2), 0)
    assert w.steps == ((0, 5.0),) and w.truncated


def test_single_outcome_walk():
    g = G([((0, 1), 2.0)])
    cfg = SamplerConfig(M=50, m=1, alpha=3.0)
    ws = sample_walks(g, 0, 3.0, cfg)
    assert set(map(tuple, ws.nodes.tolist())) == {(0, 1)}
    assert walk_probability(g, ws.walk(0), 3.0) == 1.0


def test_symmetric_two_edges():
    g = G([((0, 1, 2), 4.0), ((0, 3, 4), 4.0)])
    probs = enumerate_walks(g, 0, 6.0, 1, 0.7)
    assert len(probs) == 4
    assert all(p == pytest.approx(0.5 * 0.5, abs=1e-15) for p in probs.values())


def test_extreme_alpha_does_not_overflow():
    g = G([((0, 1), 0.0), ((0, 2), 1e6)])
    _, p = step_probabilities(g, 0, 2e6, 1.0)
    assert np.all(np.isfinite(p)) and p.sum() == pytest.approx(1.0)


def test_larger_alpha_shifts_mass_to_older_edges():
    # exp(alpha * (t_l - t)) grows with the gap, so older hyperedges gain weight as alpha grows
    g = G([((0, 1), 1.0), ((0, 2), 5.0), ((0, 3), 9.0)])
    prev = None
    for alpha in (0.0, 0.05, 0.1, 0.5, 1.0):
        _, p = step_probabilities(g, 0, 10.0, alpha)
        if prev is not None:
            assert p[0] > prev[0] and p[2] < prev[2]
        prev = p


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_alpha_monotone_pairwise(seed, a1, a2):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 8, 20, t_max=20)
    z = int(rng.integers(8))
    eids, w1 = step_probabilities(g, z, 25.0, min(a1, a2))
    _, w2 = step_probabilities(g, z, 25.0, max(a1, a2))
    t = g.edge_time[eids]
    for i in range(len(eids)):
        for j in range(len(eids)):
            if t[i] < t[j]:
                # odds of the older edge never fall as alpha grows
                assert w2[i] / w2[j] >= w1[i] / w1[j] * (1 - 1e-12)


@pytest.mark.parametrize("fixture", sampler_fixtures(), ids=lambda f: f[0])
@pytest.mark.parametrize("m", [1, 2])
def test_enumerated_walks_sum_to_one(fixture, m):
    _, g, root, t0 = fixture
    probs = enumerate_walks(g, root, t0, m, 0.3)
    assert math.fsum(probs.values()) == pytest.approx(1.0, abs=1e-12)
    for w, p in probs.items():
        assert walk_probability(g, w, 0.3) == pytest.approx(p, rel=1e-12)


def test_sample_walk_matches_row_of_batch():
    g = next(f for f in sampler_fixtures() if f[0] == "repeats")[1]
    cfg = SamplerConfig(alpha=0.4, M=16, m=2, master_seed=3)
    ws = sample_walks(g, 0, 3.0, cfg)
    for j in (0, 5, 15):
        assert sample_walk(g, 0, 3.0, cfg, j) == ws.walk(j)


def test_determinism_and_seed_sensitivity():
    g = random_graph(np.random.default_rng(1), 20, 60)
    tr = Triplet(25.0, 0, 1, 2)
    cfg = SamplerConfig(alpha=0.1, M=32, m=3, master_seed=5)
    a = sample_triplet_context(g, tr, cfg)
    b = sample_triplet_context(g, tr, cfg)
    c = sample_triplet_context(g, tr, SamplerConfig(alpha=0.1, M=32, m=3, master_seed=6))
    assert all(np.array_equal(x.nodes, y.nodes) and np.array_equal(x.times, y.times, equal_nan=True)
               for x, y in zip(a, b))
    assert any(not np.array_equal(x.nodes, y.nodes) for x, y in zip(a, c))
    assert all(len(s) == 32 for s in a)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 40.0), st.integers(1, 3))
def test_walks_go_strictly_back_in_time(seed, t0, m):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 12, 30)
    z = int(rng.integers(12))
    ws = sample_walks(g, z, t0, SamplerConfig(alpha=0.2, M=20, m=m, master_seed=seed))
    for w in ws.walks:
        times = [t for _, t in w.steps]
        assert all(b < a for a, b in zip(times, times[1:]))
        assert w.steps[0] == (z, t0)
        assert w.realized_len <= m + 1
        # a truncated walk really had nowhere to go
        if w.truncated:
            last, tl = w.steps[-1]
            assert g.history_cutoff(last, tl) == 0
        for (a, ta), (b, tb) in zip(w.steps, w.steps[1:]):
            assert any(a in nodes and b in nodes and te == tb for nodes, te in g.edge_list())


def test_inconsistent_walk_rejected():
    g = G([((0, 1), 2.0)])
    with pytest.raises(InconsistentWalkError):
        walk_probability(g, Walk(((0, 3.0), (1, 4.0)), 1), 0.1)
    with pytest.raises(InconsistentWalkError):
        walk_probability(g, Walk(((0, 3.0), (5, 2.0)), 1), 0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(alpha=-1.0)
    with pytest.raises(ValueError):
        SamplerConfig(M=0)


def test_walk_dump_format():
    g = G([((0, 1), 2.0)])
    ws = sample_walks(g, 0, 3.0, SamplerConfig(M=1, m=2))
    buf = io.StringIO()
    write_walks([ws], buf)
    assert buf.getvalue() == "(0,3.0)\t(1,2.0)\tT\n"
