"""Walk categories by role-aware SPD codes and their ranking by Q3 scores."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .encoder import collate, spd_code
from .hypergraph import TemporalHypergraph
from .model import HIT
from .patterns import LabeledInstance
from .training import EVAL_SALT, Q3_PAIRS, TrainConfig, build_contexts
from .walks import Walk, WalkSet

# one position: ((spd_u, spd_v) sorted, spd_w); m + 1 encodes "unseen"
Position = tuple[tuple[int, int], int]
WalkCategory = tuple[Position, ...]

DEFAULT_MIN_SUPPORT = 30
DEFAULT_SAMPLE = 3000
CATEGORY_COLUMNS = ("category", "mean_C_W", "count", "class_ratio")


def _position(codes: Sequence[int]) -> Position:
    a, b, c = (int(x) for x in codes)
    return ((a, b) if a <= b else (b, a), c)


def categorize(walk: Walk, S_u: WalkSet, S_v: WalkSet, S_w: WalkSet) -> WalkCategory:
    m = S_u.m
    unseen = ((m + 1, m + 1), m + 1)
    out = []
    for i in range(m + 1):
        if i >= walk.realized_len:
            out.append(unseen)
            continue
        a = walk.steps[i][0]
        out.append(_position([spd_code(a, S) for S in (S_u, S_v, S_w)]))
    return tuple(out)


def category_string(cat: WalkCategory, m: int) -> str:
    def code(x):
        return "x" if x > m else str(x)

    return "".join(f"({{{code(a)},{code(b)}}},{code(c)})" for (a, b), c in cat)


def parse_category(s: str, m: int) -> WalkCategory:
    def code(x):
        return m + 1 if x == "x" else int(x)

    out = []
    for part in s.strip("()").split(")("):
        pair, w = part.rsplit(",", 1)
        a, b = pair.strip("{}").split(",")
        out.append(_position([code(a), code(b), code(w)]))
    return tuple(out)


@dataclass(frozen=True)
class CategoryReport:
    category: WalkCategory
    mean_score: float
    count: int
    class_ratio: float

    def row(self, m: int) -> tuple:
        return (category_string(self.category, m), self.mean_score, self.count, self.class_ratio)


def aggregate_categories(categories: Sequence[WalkCategory], scores: Sequence[float], is_p1: Sequence[bool],
                         min_support: int = DEFAULT_MIN_SUPPORT) -> list[CategoryReport]:
    """Mean score, count and class-1 share per category, sorted by mean score descending.

    Ties are broken by the category tuple itself, so the order is deterministic.
    """
    total = defaultdict(float)
    count = defaultdict(int)
    pos = defaultdict(int)
    for c, s, y in zip(categories, scores, is_p1):
        total[c] += float(s)
        count[c] += 1
        pos[c] += bool(y)
    reports = [CategoryReport(c, total[c] / count[c], count[c], pos[c] / count[c])
               for c in count if count[c] >= min_support]
    reports.sort(key=lambda r: (-r.mean_score, r.category))
    return reports


def walk_categories_from_spd(spd: np.ndarray) -> list[WalkCategory]:
    """Categories of all walks of one triplet from its (3, M, L, 3) SPD code array."""
    S, M, L, _ = spd.shape
    return [tuple(_position(spd[s, j, i]) for i in range(L)) for s in range(S) for j in range(M)]


def score_walks(model: HIT, graph: TemporalHypergraph, instances: Sequence[LabeledInstance], config: TrainConfig,
                batch_size: int = 64):
    """Per-walk categories, scores ``C_W`` and the instance's class-1 flag, flattened over all walks."""
    if model.config.task != "q3":
        raise ValueError("walk scores need a Q3 model")
    pos, neg = Q3_PAIRS[config.q3_pair]
    instances = [i for i in instances if i.label in pos + neg]
    contexts = build_contexts(graph, instances, config.sampler, EVAL_SALT)
    cats, scores, flags = [], [], []
    model.eval()
    with torch.no_grad():
        for s in range(0, len(instances), batch_size):
            ctx = contexts[s:s + batch_size]
            _, c_w = model(collate(ctx))
            for k, cx in enumerate(ctx):
                cats.extend(walk_categories_from_spd(cx.spd))
                scores.extend(c_w[k].reshape(-1).tolist())
                flags.extend([instances[s + k].label in pos] * c_w[k].numel())
    return cats, np.asarray(scores), np.asarray(flags, dtype=bool)


def rank_categories(model: HIT, graph: TemporalHypergraph, instances: Sequence[LabeledInstance],
                    config: TrainConfig, sample_size: int = DEFAULT_SAMPLE, min_support: int = DEFAULT_MIN_SUPPORT,
                    seed: int = 0) -> list[CategoryReport]:
    pos, neg = Q3_PAIRS[config.q3_pair]
    pool = sorted((i for i in instances if i.label in pos + neg), key=lambda i: i.triplet.key)
    if len(pool) > sample_size:
        idx = np.sort(np.random.default_rng(seed).choice(len(pool), sample_size, replace=False))
        pool = [pool[i] for i in idx]
    cats, scores, flags = score_walks(model, graph, pool, config)
    return aggregate_categories(cats, scores, flags, min_support)


def write_category_csv(reports: Sequence[CategoryReport], m: int, fh, header: str | None = None) -> None:
    if header is not None:
        fh.write(f"# {header}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CATEGORY_COLUMNS)
    for r in reports:
        cat, mean, n, ratio = r.row(m)
        w.writerow([cat, repr(mean), n, repr(ratio)])
