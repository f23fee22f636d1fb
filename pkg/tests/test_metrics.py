import numpy as np
import pytest
import torch

from hyperpattern.metrics import (auc_1v1, auc_ovr, binary_auc, confusion_matrix, grad_check, mae_log,
                                  mean_std)


def _onehot(labels, n=4):
    return np.eye(n)[labels]


def test_perfect_and_constant_auc():
    y = np.repeat(np.arange(4), 5)
    assert auc_1v1(_onehot(y), y) == 100.0
    assert auc_1v1(np.full((20, 4), 0.25), y) == 50.0
    assert auc_ovr(_onehot(y), y) == 100.0


def test_binary_auc_matches_pair_count():
    rng = np.random.default_rng(0)
    s = rng.integers(0, 5, 60).astype(float)
    pos = rng.random(60) < 0.4
    wins = sum((a > b) + 0.5 * (a == b) for a in s[pos] for b in s[~pos])
    assert binary_auc(s, pos) == pytest.approx(wins / (pos.sum() * (~pos).sum()), abs=1e-15)
    with pytest.raises(ValueError):
        binary_auc([1.0, 2.0], [True, True])


def test_random_scores_average_to_fifty():
    rng = np.random.default_rng(1)
    vals = [auc_1v1(rng.dirichlet(np.ones(4), 500), rng.integers(0, 4, 500)) for _ in range(100)]
    assert abs(np.mean(vals) - 50) <= 2


def test_missing_class_pairs_are_skipped():
    y = np.array([0, 0, 1, 1])
    rep = auc_1v1(_onehot(y), y, report=True)
    assert rep.value == 100.0 and list(rep.pairs) == [(0, 1)] and len(rep.skipped) == 5
    with pytest.raises(ValueError):
        auc_1v1(_onehot(np.zeros(3, int)), np.zeros(3, int))


def test_confusion_matrix():
    y = np.array([0, 1, 1, 2, 3, 3, 3])
    assert np.array_equal(confusion_matrix(y, y), np.diag([1, 2, 1, 3]))
    const = confusion_matrix(np.full(7, 2), y)
    assert const[:, 2].tolist() == [1, 2, 1, 3] and const.sum() == 7
    rng = np.random.default_rng(2)
    pred = rng.integers(0, 4, 7)
    assert confusion_matrix(pred, y).sum(1).tolist() == np.bincount(y, minlength=4).tolist()


def test_mean_std_uses_population_divisor():
    assert mean_std([1.0, 3.0]) == (2.0, 1.0)
    assert mean_std([5.0]) == (5.0, 0.0)


def test_mae_log():
    assert mae_log([1.0, np.e], [np.e, 1.0]) == pytest.approx(1.0, abs=1e-15)


def test_grad_check_flags_a_wrong_gradient():
    x = torch.tensor([0.5, -0.3, 1.1], dtype=torch.float64, requires_grad=True)
    ok = grad_check(lambda: (x ** 3).sum(), [x])
    bad = grad_check(lambda: (x ** 3).sum(), [x], corrupt=lambda _, g: g * 1.1)
    assert ok.max_rel_error <= 1e-8 and ok.n_checked == 3
    assert bad.max_rel_error > 1e-2
