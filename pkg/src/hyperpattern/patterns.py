"""Triplets of interest, pattern labels, first-formation times and splits."""

from __future__ import annotations

import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .hypergraph import TemporalHypergraph

logger = logging.getLogger(__name__)


class Pattern(enum.IntEnum):
    EDGE = 0
    WEDGE = 1
    TRIANGLE = 2
    CLOSURE = 3

    @property
    def short(self) -> str:
        return "EWTC"[self.value]

    @classmethod
    def parse(cls, s) -> "Pattern":
        if isinstance(s, Pattern):
            return s
        if isinstance(s, (int, np.integer)):
            return cls(int(s))
        s = str(s).strip().lower()
        for p in cls:
            if s in (p.name.lower(), p.short.lower()):
                return p
        raise ValueError(f"unknown pattern {s!r}")


TIMED_PATTERNS = (Pattern.WEDGE, Pattern.TRIANGLE, Pattern.CLOSURE)
SPLITS = ("train", "valid", "test")


class TripletError(ValueError):
    """A triplet violates the triplet-of-interest constraints."""


@dataclass(frozen=True, order=True)
class Triplet:
    """``({u, v}, w, t)``; ``u < v`` is enforced so the pair is canonical."""

    t: float
    u: int
    v: int
    w: int

    def __post_init__(self):
        if self.u > self.v:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        if len({self.u, self.v, self.w}) != 3:
            raise TripletError(f"triplet nodes must be distinct: {self.u}, {self.v}, {self.w}")

    @property
    def key(self) -> tuple:
        return (self.t, self.u, self.v, self.w)


@dataclass(frozen=True)
class PatternTimes:
    """Offsets from the anchor; ``None`` when not formed inside the window."""

    wedge: float | None = None
    triangle: float | None = None
    closure: float | None = None

    def get(self, p: Pattern) -> float | None:
        return {Pattern.WEDGE: self.wedge, Pattern.TRIANGLE: self.triangle,
                Pattern.CLOSURE: self.closure}.get(Pattern.parse(p))


@dataclass(frozen=True)
class SplitConfig:
    boundaries: tuple[float, float, float, float] = (0.4, 0.75, 0.825, 0.9)
    window_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        b = tuple(self.boundaries)
        if len(b) != 4 or not all(0 < x < 1 for x in b) or any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError(f"split boundaries must be strictly increasing in (0,1): {b}")
        if self.window_fraction <= 0:
            raise ValueError("window_fraction must be positive")

    def split_of(self, frac: float) -> str | None:
        b = self.boundaries
        if b[0] <= frac < b[1]:
            return "train"
        if b[1] <= frac < b[2]:
            return "valid"
        if b[2] <= frac < b[3]:
            return "test"
        return None


@dataclass(frozen=True)
class LabeledInstance:
    triplet: Triplet
    label: Pattern
    times: PatternTimes
    split: str

    def to_record(self) -> str:
        tr = self.triplet

        def na(x):
            return "NA" if x is None else repr(float(x))

        return "\t".join([str(tr.u), str(tr.v), str(tr.w), repr(float(tr.t)), self.label.name.capitalize(),
                          na(self.times.wedge), na(self.times.triangle), na(self.times.closure), self.split])

    @classmethod
    def from_record(cls, line: str) -> "LabeledInstance":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 9:
            raise ValueError(f"expected 9 tab-separated fields, got {len(parts)}")
        u, v, w = (int(x) for x in parts[:3])
        if parts[8] not in SPLITS:
            raise ValueError(f"unknown split {parts[8]!r}")

        def opt(x):
            return None if x == "NA" else float(x)

        return cls(Triplet(float(parts[3]), u, v, w), Pattern.parse(parts[4]),
                   PatternTimes(opt(parts[5]), opt(parts[6]), opt(parts[7])), parts[8])


INSTANCE_COLUMNS = ("u", "v", "w", "t", "label", "t_wedge", "t_triangle", "t_closure", "split")


# -- pair index -------------------------------------------------------------

class PairIndex:
    """Per-pair sorted co-coverage times, built in one sweep over the edges."""

    def __init__(self, graph: TemporalHypergraph):
        times: dict[tuple[int, int], list[float]] = defaultdict(list)
        et = graph.edge_time.tolist()
        ptr = graph.edge_ptr.tolist()
        nodes = graph.edge_nodes.tolist()
        for e in range(graph.n_edges):
            t = et[e]
            for pair in combinations(nodes[ptr[e]:ptr[e + 1]], 2):
                lst = times[pair]
                if not lst or lst[-1] != t:
                    lst.append(t)
        self.times = dict(times)

    def first(self, a: int, b: int) -> float:
        lst = self.times.get((a, b) if a < b else (b, a))
        return lst[0] if lst else math.inf

    def covered_before(self, a: int, b: int, t: float, inclusive: bool = False) -> bool:
        f = self.first(a, b)
        return f <= t if inclusive else f < t


def first_interactions(graph: TemporalHypergraph, lo: float, hi: float,
                       index: PairIndex | None = None) -> list[tuple[tuple[int, int], float]]:
    """Pairs whose first co-covering hyperedge has time in ``[lo, hi)``, sorted by (t, pair)."""
    index = index or PairIndex(graph)
    out = [(pair, lst[0]) for pair, lst in index.times.items() if lo <= lst[0] < hi]
    out.sort(key=lambda x: (x[1], x[0]))
    return out


# -- candidates -----------------------------------------------------------

def _neighbors_before(graph: TemporalHypergraph, z: int, t: float) -> set[int]:
    eids, _ = graph.incidence(z)
    k = graph.history_cutoff(z, t)
    out: set[int] = set()
    for e in eids[:k]:
        out.update(graph.nodes_of(int(e)).tolist())
    out.discard(z)
    return out


def _is_valid_third(index: PairIndex, u: int, v: int, w: int, t: float) -> bool:
    return w != u and w != v and index.first(u, w) > t and index.first(v, w) > t


def candidate_thirds(graph: TemporalHypergraph, pair: tuple[int, int], t: float, policy: str = "two_hop",
                     n: int | None = None, rng: np.random.Generator | None = None,
                     index: PairIndex | None = None) -> list[int]:
    """Third nodes ``w`` forming a triplet of interest with ``pair`` anchored at ``t``.

    ``policy`` is one of ``exhaustive``, ``two_hop``, ``uniform`` (``n`` random
    valid nodes) or ``two_hop+uniform`` (two-hop plus as many uniform draws).
    """
    index = index or PairIndex(graph)
    u, v = sorted(pair)
    if index.first(u, v) != t:
        raise TripletError(f"pair {(u, v)} does not first interact at {t}")
    if policy == "exhaustive":
        return [w for w in range(graph.n_nodes) if _is_valid_third(index, u, v, w, t)]
    if policy in ("two_hop", "two_hop+uniform"):
        hop = set()
        for z in (u, v):
            for x in _neighbors_before(graph, z, t):
                hop |= _neighbors_before(graph, x, t)
        two = sorted(w for w in hop if _is_valid_third(index, u, v, w, t))
        if policy == "two_hop":
            return two
        extra = _uniform_thirds(graph, index, u, v, t, len(two), rng, exclude=set(two))
        return sorted(set(two) | set(extra))
    if policy == "uniform":
        if n is None:
            raise ValueError("uniform policy needs n")
        return sorted(_uniform_thirds(graph, index, u, v, t, n, rng))
    raise ValueError(f"unknown candidate policy {policy!r}")


def _uniform_thirds(graph, index, u, v, t, n, rng, exclude=()):
    if n <= 0:
        return []
    rng = rng if rng is not None else np.random.default_rng(0)
    picked: set[int] = set()
    perm = rng.permutation(graph.n_nodes)
    for w in perm.tolist():
        if len(picked) >= n:
            break
        if w in exclude:
            continue
        if _is_valid_third(index, u, v, w, t):
            picked.add(w)
    return list(picked)


# -- labeling ---------------------------------------------------------------

def check_triplet(graph: TemporalHypergraph, triplet: Triplet, index: PairIndex | None = None) -> None:
    """Raise :class:`TripletError` unless ``triplet`` is a triplet of interest."""
    index = index or PairIndex(graph)
    u, v, w, t = triplet.u, triplet.v, triplet.w, triplet.t
    if index.first(u, v) != t:
        raise TripletError(f"{{{u},{v}}} does not first interact at t={t}")
    if index.first(u, w) <= t or index.first(v, w) <= t:
        raise TripletError(f"w={w} was covered with u or v at or before t={t}")


def label_triplet(graph: TemporalHypergraph, triplet: Triplet, window: float,
                  index: PairIndex | None = None, check: bool = True) -> tuple[Pattern, PatternTimes]:
    """Label the pattern formed within ``(t, t + window]`` and its first-formation offsets."""
    if window <= 0:
        raise ValueError("window must be positive")
    if check:
        check_triplet(graph, triplet, index)
    u, v, w, t = triplet.u, triplet.v, triplet.w, triplet.t
    hi = t + window
    eids, times = graph.incidence(w)
    lo_k = int(np.searchsorted(times, t, side="right"))
    hi_k = int(np.searchsorted(times, hi, side="right"))
    t_uw = t_vw = t_uvw = None
    for e, te in zip(eids[lo_k:hi_k].tolist(), times[lo_k:hi_k].tolist()):
        nodes = graph.nodes_of(e)
        has_u = _contains(nodes, u)
        has_v = _contains(nodes, v)
        if has_u and t_uw is None:
            t_uw = te
        if has_v and t_vw is None:
            t_vw = te
        if has_u and has_v:
            t_uvw = te
            break
    return _label_from_times(t, t_uw, t_vw, t_uvw)


def _contains(sorted_nodes: np.ndarray, x: int) -> bool:
    k = np.searchsorted(sorted_nodes, x)
    return k < len(sorted_nodes) and sorted_nodes[k] == x


def _label_from_times(t, t_uw, t_vw, t_uvw) -> tuple[Pattern, PatternTimes]:
    pair_times = [x for x in (t_uw, t_vw) if x is not None]
    t_wedge = min(pair_times) - t if pair_times else None
    t_tri = max(pair_times) - t if len(pair_times) == 2 else None
    t_clo = t_uvw - t if t_uvw is not None else None
    if t_clo is not None:
        label = Pattern.CLOSURE
    elif t_tri is not None:
        label = Pattern.TRIANGLE
    elif t_wedge is not None:
        label = Pattern.WEDGE
    else:
        label = Pattern.EDGE
    return label, PatternTimes(t_wedge, t_tri, t_clo)


# -- enumeration --------------------------------------------------------------

def _relative(graph: TemporalHypergraph, t: float) -> float:
    T = graph.time_range
    return (t - graph.t_min) / T if T > 0 else 0.0


def enumerate_instances(graph: TemporalHypergraph, split_config: SplitConfig = SplitConfig(),
                        policy: str = "two_hop+uniform", index: PairIndex | None = None) -> list[LabeledInstance]:
    """All labeled triplets of interest whose anchors fall in the train/valid/test ranges.

    Output is sorted by ``(t, u, v, w)``.
    """
    index = index or PairIndex(graph)
    T = graph.time_range
    window = split_config.window_fraction * T
    b = split_config.boundaries
    lo = graph.t_min + b[0] * T
    hi = graph.t_min + b[3] * T
    out: list[LabeledInstance] = []
    for (u, v), t in first_interactions(graph, lo, hi, index):
        split = split_config.split_of(_relative(graph, t))
        if split is None:
            continue
        rng = np.random.default_rng([split_config.seed, u, v])
        for w in candidate_thirds(graph, (u, v), t, policy, rng=rng, index=index):
            tr = Triplet(t, u, v, w)
            label, times = label_triplet(graph, tr, window, index, check=False)
            out.append(LabeledInstance(tr, label, times, split))
    out.sort(key=lambda inst: inst.triplet.key)
    counts = split_counts(out)
    for s in SPLITS:
        if sum(counts[s].values()) == 0:
            logger.warning("split %s has no instances", s)
    return out


def count_patterns(graph: TemporalHypergraph, split_config: SplitConfig = SplitConfig(),
                   index: PairIndex | None = None) -> dict[Pattern, int]:
    """Counts of Wedge/Triangle/Closure over all valid third nodes.

    Equivalent to exhaustive enumeration restricted to non-Edge labels, but only
    visits nodes that interact with ``u`` or ``v`` inside the window.
    """
    index = index or PairIndex(graph)
    T = graph.time_range
    window = split_config.window_fraction * T
    b = split_config.boundaries
    counts = {p: 0 for p in Pattern}
    for (u, v), t in first_interactions(graph, graph.t_min + b[0] * T, graph.t_min + b[3] * T, index):
        firsts: dict[int, list] = {}
        for side, z in enumerate((u, v)):
            eids, times = graph.incidence(z)
            lo_k = int(np.searchsorted(times, t, side="right"))
            hi_k = int(np.searchsorted(times, t + window, side="right"))
            for e, te in zip(eids[lo_k:hi_k].tolist(), times[lo_k:hi_k].tolist()):
                nodes = graph.nodes_of(e).tolist()
                triple = side == 0 and _contains(graph.nodes_of(e), v)
                for w in nodes:
                    if w == u or w == v:
                        continue
                    rec = firsts.setdefault(w, [None, None, None])
                    if rec[side] is None:
                        rec[side] = te
                    if triple and rec[2] is None:
                        rec[2] = te
        for w, (t_uw, t_vw, t_uvw) in firsts.items():
            if not _is_valid_third(index, u, v, w, t):
                continue
            label, _ = _label_from_times(t, t_uw, t_vw, t_uvw)
            counts[label] += 1
    return counts


def split_counts(instances: Iterable[LabeledInstance]) -> dict[str, dict[Pattern, int]]:
    counts = {s: {p: 0 for p in Pattern} for s in SPLITS}
    for inst in instances:
        counts[inst.split][inst.label] += 1
    return counts


class EmptyClassError(ValueError):
    pass


def balance_classes(instances: Sequence[LabeledInstance], seed: int = 0,
                    classes: Sequence[Pattern] = tuple(Pattern)) -> list[LabeledInstance]:
    """Downsample every class of every split to that split's smallest class size."""
    groups: dict[tuple[str, Pattern], list[LabeledInstance]] = defaultdict(list)
    for inst in sorted(instances, key=lambda i: i.triplet.key):
        groups[(inst.split, inst.label)].append(inst)
    out: list[LabeledInstance] = []
    for s_i, split in enumerate(SPLITS):
        sizes = {p: len(groups[(split, p)]) for p in classes}
        if not any(sizes.values()):
            continue
        empty = [p.name.capitalize() for p, n in sizes.items() if n == 0]
        if empty:
            raise EmptyClassError(f"class {', '.join(empty)} is empty in split {split}")
        k = min(sizes.values())
        for p in classes:
            g = groups[(split, p)]
            rng = np.random.default_rng([seed, s_i, int(p)])
            idx = np.sort(rng.choice(len(g), size=k, replace=False))
            out.extend(g[i] for i in idx)
    out.sort(key=lambda inst: inst.triplet.key)
    return out


# -- serialization ----------------------------------------------------------

def write_instances(instances: Iterable[LabeledInstance], fh, header: str | None = None) -> None:
    if header is not None:
        fh.write(f"# {header}\n")
    fh.write("\t".join(INSTANCE_COLUMNS) + "\n")
    for inst in instances:
        fh.write(inst.to_record() + "\n")


class InstanceFormatError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def read_instances(fh) -> list[LabeledInstance]:
    out = []
    for lineno, line in enumerate(fh, 1):
        if line.startswith("#") or not line.strip():
            continue
        if line.startswith("u\t"):
            continue
        try:
            out.append(LabeledInstance.from_record(line))
        except (ValueError, TypeError) as e:
            raise InstanceFormatError(str(e), lineno) from None
    return out
