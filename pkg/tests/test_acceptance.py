"""Acceptance criteria, one test per criterion.

Every test records a PASS/FAIL/SKIP line that pytest prints in an
"acceptance criteria" section at the end of the run.

Criteria 1-4 need the public datasets: set ``HYPERPATTERN_DATA`` to a
directory holding one sub-directory per dataset (``tags-math-sx/``,
``tags-ask-ubuntu/``, ...), each with the ``*-nverts.txt``,
``*-simplices.txt`` and ``*-times.txt`` files.  Criterion 4 also needs
``HYPERPATTERN_EXTENDED=1``.
"""

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
import torch

from hyperpattern.baselines import FEATURE_NAMES, feature_table, instance_arrays, train_heuristic_head
from hyperpattern.config import RunConfig
from hyperpattern.decoders import mixture_nll
from hyperpattern.hypergraph import find_benson_files, ingest_benson_graph, normalize_time, stats
from hyperpattern.metrics import auc_1v1, mean_std
from hyperpattern.patterns import Pattern, SplitConfig, balance_classes, count_patterns, enumerate_instances
from hyperpattern.suites import (CORRUPT_MIN, GRAD_EPS, GRAD_TOL, gradient_suite, planted_category_rank,
                                 planted_pattern_suite, planted_time_check, sampler_suite, theorem_suite)
from hyperpattern.synthetic import PlantedConfig, planted_dataset
from hyperpattern.training import run_seeds
from oracles import brute_instances, random_graph

pytestmark = pytest.mark.acceptance

# n_nodes, n_hyperedges, avg size, and the size std where it is published
PUBLISHED_STATS = {
    "tags-math-sx": (1.63e3, 822e3, 2.75, 0.89),
    "tags-ask-ubuntu": (3.03e3, 271e3, 3.11, None),
    "congress-bills": (1.72e3, 260e3, 7.55, None),
    "DAWN": (2.56e3, 2.27e6, 2.59, None),
    "threads-ask-ubuntu": (125e3, 192e3, 2.30, None),
}
MATH_SX_COUNTS = {Pattern.CLOSURE: 23.6e3, Pattern.TRIANGLE: 68.5e3, Pattern.WEDGE: 3.07e6}
AA_MEAN_UBUNTU = 69.74
HIT_UBUNTU = 78.83
SEEDS = (0, 1, 2, 3, 4)


def _data_dir(criterion, n):
    root = os.environ.get("HYPERPATTERN_DATA")
    if not root:
        criterion(n, None, "HYPERPATTERN_DATA not set; public datasets unavailable")
        pytest.skip("HYPERPATTERN_DATA not set")
    return Path(root)


def _dataset(criterion, n, name):
    d = _data_dir(criterion, n) / name
    if not d.is_dir():
        criterion(n, None, f"{d} missing")
        pytest.skip(f"{d} missing")
    return ingest_benson_graph(*find_benson_files(d))


def _sig3(x):
    return f"{x:.3g}"


def test_criterion_1_ingestion_fidelity(criterion):
    root = _data_dir(criterion, 1)
    present = [name for name in PUBLISHED_STATS if (root / name).is_dir()]
    if not present:
        criterion(1, None, f"no known dataset under {root}")
        pytest.skip("no datasets")
    problems, slowest = [], 0.0
    for name in present:
        start = time.perf_counter()
        s = stats(ingest_benson_graph(*find_benson_files(root / name)))
        slowest = max(slowest, time.perf_counter() - start)
        nodes, edges, avg, std = PUBLISHED_STATS[name]
        got = (_sig3(s.n_nodes), _sig3(s.n_hyperedges), _sig3(s.avg_size))
        if got != (_sig3(nodes), _sig3(edges), _sig3(avg)):
            problems.append(f"{name}: got {got}")
        if std is not None and round(s.std_size, 2) != std:
            problems.append(f"{name}: std {s.std_size:.3f} vs {std}")
    ok = not problems and slowest < 60
    criterion(1, ok, f"{len(present)} datasets, slowest ingest {slowest:.1f}s; " + ("; ".join(problems) or "all match"))
    assert ok, problems


@pytest.mark.slow
def test_criterion_2_pattern_counts(criterion):
    g = normalize_time(_dataset(criterion, 2, "tags-math-sx"))
    start = time.perf_counter()
    counts = count_patterns(g, SplitConfig(window_fraction=0.1))
    elapsed = time.perf_counter() - start
    rel = {p: counts[p] / target - 1 for p, target in MATH_SX_COUNTS.items()}
    ok = all(abs(r) <= 0.15 for r in rel.values()) and elapsed <= 3600
    detail = ", ".join(f"{p.name.capitalize()} {counts[p]} ({100 * r:+.1f}%)" for p, r in rel.items())
    criterion(2, ok, f"{detail}; {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_3_aa_baseline(criterion):
    start = time.perf_counter()
    g = normalize_time(_dataset(criterion, 3, "tags-ask-ubuntu"))
    cfg = RunConfig()
    inst = balance_classes(enumerate_instances(g, cfg.split_config(), policy=cfg.policy), seed=cfg.master_seed)
    tr_t, y_tr = instance_arrays([i for i in inst if i.split == "train"])
    te_t, y_te = instance_arrays([i for i in inst if i.split == "test"])
    j = FEATURE_NAMES.index("aa_mean")
    x_tr, x_te = feature_table(g, tr_t)[:, j], feature_table(g, te_t)[:, j]
    aucs = [auc_1v1(train_heuristic_head(x_tr, y_tr, seed=s).predict_proba(x_te), y_te) for s in SEEDS]
    mean, std = mean_std(aucs)
    elapsed = time.perf_counter() - start
    ok = abs(mean - AA_MEAN_UBUNTU) <= 3.0 and elapsed <= 7200
    criterion(3, ok, f"AA mean AUC {mean:.2f} +- {std:.2f} (target {AA_MEAN_UBUNTU} +- 3.0); {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_4_extended_hit_run(criterion):
    if os.environ.get("HYPERPATTERN_EXTENDED") != "1":
        criterion(4, None, "optional extended run; set HYPERPATTERN_EXTENDED=1 and HYPERPATTERN_DATA")
        pytest.skip("extended run not requested")
    g = normalize_time(_dataset(criterion, 4, "tags-ask-ubuntu"))
    cfg = RunConfig()
    inst = balance_classes(enumerate_instances(g, cfg.split_config(), policy=cfg.policy), seed=cfg.master_seed)
    splits = [[i for i in inst if i.split == s] for s in ("train", "valid", "test")]
    out = run_seeds(cfg.model_config("q1", g.time_range), g, *splits, cfg.train_config())
    mean, std = out["aggregate"]["auc_1v1"]
    ok = abs(mean - HIT_UBUNTU) <= 3.0
    criterion(4, ok, f"HIT AUC {mean:.2f} +- {std:.2f} (target {HIT_UBUNTU} +- 3.0)")
    assert ok


def test_criterion_5_gradient_suite(criterion):
    start = time.perf_counter()
    res = gradient_suite(eps=GRAD_EPS)
    elapsed = time.perf_counter() - start
    paths = {k: v.max_rel_error for k, v in res.items() if k != "corrupted"}
    ok = (set(paths) == {"encoder", "q1", "q2", "q3"} and max(paths.values()) <= GRAD_TOL
          and res["corrupted"].max_rel_error > CORRUPT_MIN and elapsed < 300)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in paths.items())
    criterion(5, ok, f"{detail}; corrupted {res['corrupted'].max_rel_error:.2e}; {elapsed:.1f}s")
    assert ok


def test_criterion_6_theorem_suite(criterion):
    start = time.perf_counter()
    rep = theorem_suite()
    elapsed = time.perf_counter() - start
    worst = max(max(r.max_walk_diff, r.max_appear_diff, r.max_de_diff) for r in rep.results.values())
    ok = len(rep.results) >= 5 and rep.passed and worst <= 1e-12 and elapsed < 60
    criterion(6, ok, f"{len(rep.results)} witnesses, worst diff {worst:.1e}; control rejected="
                     f"{rep.control_rejected} differs={not rep.control_result.passed}; {elapsed:.1f}s")
    assert ok


def test_criterion_7_sampler(criterion):
    start = time.perf_counter()
    reports = sampler_suite(n=100_000, trials=20)
    elapsed = time.perf_counter() - start
    sums = max(abs(r.total_probability - 1) for r in reports)
    rates = {r.name: r.pass_rate(0.01) for r in reports}
    ok = sums <= 1e-12 and min(rates.values()) >= 0.95 and elapsed < 300
    criterion(7, ok, f"{len(reports)} fixtures, max |sum-1| {sums:.1e}, min pass rate {min(rates.values()):.2f}; "
                     f"{elapsed:.0f}s")
    assert ok


def test_criterion_8_oracle_equivalence(criterion):
    start = time.perf_counter()
    mismatches, compared = [], 0
    for s in range(100):
        rng = np.random.default_rng(1000 + s)
        g = random_graph(rng, int(rng.integers(8, 26)), int(rng.integers(20, 121)))
        sc = SplitConfig(window_fraction=float(rng.uniform(0.05, 0.5)))
        got = [(i.triplet.key, (i.label, i.times.wedge, i.times.triangle, i.times.closure))
               for i in enumerate_instances(g, sc, policy="exhaustive")]
        compared += len(got)
        if got != brute_instances(g, sc):
            mismatches.append(s)
    z = torch.zeros(1, 1, dtype=torch.float64)
    nll = mixture_nll(z, z, z, torch.ones(1, dtype=torch.float64)).item()
    nll_err = abs(nll - 0.5 * math.log(2 * math.pi))
    elapsed = time.perf_counter() - start
    ok = not mismatches and nll_err <= 1e-9 and elapsed < 300
    criterion(8, ok, f"100 graphs, {compared} instances, mismatching graphs {mismatches}; "
                     f"NLL error {nll_err:.1e}; {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_9_planted_end_to_end(criterion):
    start = time.perf_counter()
    hit, no_de, pa3, ranks = [], [], [], []
    for seed in SEEDS:
        data = planted_dataset(PlantedConfig(seed=seed))
        rep = planted_pattern_suite(seed, data)
        hit.append(rep.hit_auc)
        no_de.append(rep.no_de_auc)
        pa3.append(rep.baseline_auc["pa3"])
        ranks.append(planted_category_rank(seed, data).rank)
    elapsed = time.perf_counter() - start
    top2 = sum(r is not None and r < 2 for r in ranks)
    ok = (np.mean(hit) >= 90 and np.mean(pa3) <= 60 and np.mean(no_de) < np.mean(hit) and top2 >= 4
          and elapsed <= 1800)
    criterion(9, ok, f"HIT {np.mean(hit):.2f}, no-DE {np.mean(no_de):.2f}, 3-PA {np.mean(pa3):.2f}, "
                     f"planted category ranks {ranks} (top-2 in {top2}/5); {elapsed:.0f}s")
    assert ok


def test_criterion_10_time_head(criterion):
    start = time.perf_counter()
    rep = planted_time_check(0)
    elapsed = time.perf_counter() - start
    gap = max(abs(ce - rep.entropy) for ce in rep.cross_entropy.values())
    ok = rep.max_weight_error <= 1e-12 and rep.max_quadrature_error <= 1e-4 and gap <= 0.1 and elapsed < 600
    nll = ", ".join(f"{k} {v:.3f}" for k, v in rep.test_nll.items())
    criterion(10, ok, f"weights {rep.max_weight_error:.1e}, quadrature {rep.max_quadrature_error:.1e}, "
                      f"expected NLL - entropy {gap:.4f} nat (entropy {rep.entropy:.4f}; test NLL {nll}); "
                      f"{elapsed:.0f}s")
    assert ok
