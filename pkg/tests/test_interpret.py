import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperpattern.encoder import context_arrays
from hyperpattern.interpret import (aggregate_categories, categorize, category_string, parse_category,
                                    walk_categories_from_spd, write_category_csv)
from hyperpattern.patterns import Triplet
from hyperpattern.walks import SamplerConfig, WalkSet, sample_triplet_context
from oracles import random_graph


def _walkset(rows, root, anchor=10.0, m=2):
    nodes = np.full((len(rows), m + 1), -1)
    times = np.full((len(rows), m + 1), np.nan)
    for j, r in enumerate(rows):
        nodes[j, :len(r)] = r
        times[j, :len(r)] = anchor - np.arange(len(r))
    return WalkSet(root, anchor, nodes, times, np.array([len(r) for r in rows]))


def _sets():
    S_u = _walkset([[0, 3, 1], [0, 4]], 0)
    S_v = _walkset([[1, 3, 0], [1, 3, 5]], 1)
    S_w = _walkset([[2, 4, 0], [2, 6]], 2)
    return S_u, S_v, S_w


def test_root_position_and_unseen_padding():
    S_u, S_v, S_w = _sets()
    cat = categorize(S_u.walk(1), S_u, S_v, S_w)
    # 0 is u itself and two hops from v and w; 4 is a first hop of u and w, unseen from v;
    # the walk stops after one step
    assert cat == (((0, 2), 2), ((1, 3), 1), ((3, 3), 3))
    assert category_string(cat, 2) == "({0,2},2)({1,x},1)({x,x},x)"


def test_uv_swap_leaves_categories_unchanged():
    S_u, S_v, S_w = _sets()
    for S in (S_u, S_v, S_w):
        for j in range(2):
            assert categorize(S.walk(j), S_u, S_v, S_w) == categorize(S.walk(j), S_v, S_u, S_w)


def test_categories_from_context_arrays():
    g = random_graph(np.random.default_rng(0), 12, 30)
    sets = sample_triplet_context(g, Triplet(28.0, 0, 1, 2), SamplerConfig(alpha=0.1, M=5, m=2, master_seed=3))
    ctx = context_arrays(sets)
    direct = [categorize(S.walk(j), *sets) for S in sets for j in range(5)]
    assert walk_categories_from_spd(ctx.spd) == direct


def test_aggregate_matches_recount():
    rng = np.random.default_rng(1)
    cats = [(((int(a), int(a)), 0),) for a in rng.integers(0, 4, 500)]
    scores = rng.normal(size=500)
    flags = rng.random(500) < 0.3
    reps = aggregate_categories(cats, scores, flags, min_support=1)
    for r in reps:
        sel = [c == r.category for c in cats]
        assert r.count == sum(sel)
        assert r.mean_score == pytest.approx(scores[sel].mean(), rel=1e-12)
        assert r.class_ratio == flags[sel].mean()
    assert [r.mean_score for r in reps] == sorted((r.mean_score for r in reps), reverse=True)


def test_ties_and_support():
    a, b, c = (((0, 0), 0),), (((1, 1), 1),), (((2, 2), 2),)
    reps = aggregate_categories([b, a, c, c], [1.0, 1.0, 5.0, 5.0], [True, False, True, True], min_support=1)
    assert [r.category for r in reps] == [c, a, b]
    assert [r.category for r in aggregate_categories([b, a, c, c], [1.0] * 4, [True] * 4, min_support=2)] == [c]


def test_category_csv():
    reps = aggregate_categories([(((0, 1), 3),)] * 2, [0.5, 1.5], [True, False], min_support=1)
    buf = io.StringIO()
    write_category_csv(reps, 2, buf, header="h")
    assert buf.getvalue() == "# h\ncategory,mean_C_W,count,class_ratio\n\"({0,1},x)\",1.0,2,0.5\n"


@given(st.integers(1, 3).flatmap(lambda m: st.tuples(st.just(m), st.lists(
    st.tuples(st.integers(0, m + 1), st.integers(0, m + 1), st.integers(0, m + 1)), min_size=m + 1,
    max_size=m + 1))))
def test_category_string_round_trip(arg):
    m, raw = arg
    cat = tuple(((min(a, b), max(a, b)), c) for a, b, c in raw)
    assert parse_category(category_string(cat, m), m) == cat
