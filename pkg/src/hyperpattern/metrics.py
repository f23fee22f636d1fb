"""Evaluation metrics and the finite-difference gradient check."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch
from scipy.stats import rankdata

N_CLASSES = 4


def binary_auc(scores, positive) -> float:
    """ROC-AUC in [0, 1] via the rank-sum statistic; tied scores count 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("binary AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass
class AucReport:
    value: float                      # percent
    pairs: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)


def auc_1v1(probs, labels, n_classes: int = N_CLASSES, report: bool = False):
    """Unweighted mean over class pairs of the AUC of ``p(c1) - p(c2)`` on rows labelled c1 or c2.

    Pairs missing a class are skipped (and listed when ``report=True``).
    Returns a percentage.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    pairs = {}
    skipped = []
    for c1, c2 in itertools.combinations(range(n_classes), 2):
        sel = (labels == c1) | (labels == c2)
        if not (labels == c1).any() or not (labels == c2).any():
            skipped.append((c1, c2))
            continue
        pairs[(c1, c2)] = binary_auc(probs[sel, c1] - probs[sel, c2], labels[sel] == c1)
    if not pairs:
        raise ValueError("need at least two classes present")
    value = 100.0 * float(np.mean(list(pairs.values())))
    return AucReport(value, pairs, skipped) if report else value


def auc_ovr(probs, labels, n_classes: int = N_CLASSES) -> float:
    """One-vs-rest alternative: mean over present classes of AUC(p(c), label == c)."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    vals = [binary_auc(probs[:, c], labels == c) for c in range(n_classes)
            if (labels == c).any() and (labels != c).any()]
    if not vals:
        raise ValueError("need at least two classes present")
    return 100.0 * float(np.mean(vals))


def confusion_matrix(pred, labels, n_classes: int = N_CLASSES) -> np.ndarray:
    """Rows are ground truth, columns are predictions."""
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (np.asarray(labels, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return out


def mae_log(t_true, t_pred) -> float:
    return float(np.mean(np.abs(np.log(np.asarray(t_true, float)) - np.log(np.asarray(t_pred, float)))))


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population (n-divisor) standard deviation."""
    a = np.asarray(values, dtype=np.float64)
    return float(a.mean()), float(a.std(ddof=0))


# -- gradient check ----------------------------------------------------------

@dataclass
class GradCheckResult:
    max_rel_error: float
    n_checked: int
    worst: tuple[str, int] | None


def grad_check(loss_fn: Callable[[], torch.Tensor], params: dict[str, torch.Tensor] | Sequence[torch.Tensor],
               eps: float = 1e-5, max_coords: int = 12, seed: int = 0, floor: float = 1e-6,
               corrupt: Callable[[str, torch.Tensor], torch.Tensor] | None = None) -> GradCheckResult:
    """Compare autograd against central differences on a sampled subset of coordinates.

    ``rel = |a - n| / max(|a|, |n|, floor)``.  ``corrupt`` may rewrite the
    analytic gradient before comparison (negative controls).
    """
    if not isinstance(params, dict):
        params = {str(i): p for i, p in enumerate(params)}
    params = {k: p for k, p in params.items() if p.requires_grad}
    for p in params.values():
        p.grad = None
    loss = loss_fn()
    grads = torch.autograd.grad(loss, list(params.values()), allow_unused=True)
    rng = np.random.default_rng(seed)
    worst_err, worst, n = 0.0, None, 0
    with torch.no_grad():
        for (name, p), g in zip(params.items(), grads):
            g = torch.zeros_like(p) if g is None else g
            if corrupt is not None:
                g = corrupt(name, g)
            flat = p.view(-1)
            gflat = g.reshape(-1)
            idx = np.arange(flat.numel())
            if flat.numel() > max_coords:
                idx = rng.choice(flat.numel(), max_coords, replace=False)
            for i in idx.tolist():
                old = flat[i].item()
                flat[i] = old + eps
                up = loss_fn().item()
                flat[i] = old - eps
                down = loss_fn().item()
                flat[i] = old
                num = (up - down) / (2 * eps)
                ana = gflat[i].item()
                err = abs(ana - num) / max(abs(ana), abs(num), floor)
                n += 1
                if err > worst_err:
                    worst_err, worst = err, (name, i)
    return GradCheckResult(worst_err, n, worst)
