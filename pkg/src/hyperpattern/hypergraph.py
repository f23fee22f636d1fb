"""Temporal hypergraph storage, ingestion and time normalization.

Hyperedges are kept in CSR form (``edge_ptr``/``edge_nodes``) sorted by time,
ties broken by ingestion order.  Each node has a time-sorted incidence list so
that "hyperedges of ``z`` strictly before ``t``" is a single binary search.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CACHE_MAGIC = b"THGC"
CACHE_VERSION = 1
DEFAULT_INTENSITY = 1e-5


class HypergraphFormatError(ValueError):
    """Raised for malformed or inconsistent input files."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class DegenerateTimeError(ValueError):
    """All timestamps are equal, so the time range is zero."""


@dataclass(frozen=True)
class TemporalHyperedge:
    edge_id: int
    nodes: tuple[int, ...]
    time: float

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a hyperedge needs at least two nodes")
        if any(a >= b for a, b in zip(self.nodes, self.nodes[1:])):
            raise ValueError("hyperedge nodes must be strictly increasing")


@dataclass(frozen=True)
class DatasetStats:
    n_nodes: int
    n_hyperedges: int
    avg_size: float
    std_size: float
    time_range: float
    edge_intensity: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


class TemporalHypergraph:
    """Immutable time-sorted hyperedge store with per-node incidence indexes.

    Build with :meth:`from_edges`.  Arrays are exposed read-only:

    ``edge_ptr``, ``edge_nodes``
        CSR layout; nodes of edge ``e`` are ``edge_nodes[edge_ptr[e]:edge_ptr[e+1]]``.
    ``edge_time``, ``edge_size``
        Per-edge timestamp and cardinality.
    ``inc_ptr``, ``inc_edge``, ``inc_time``, ``inc_pos``
        CSR incidence; entries of node ``z`` are sorted by time then edge id.
        ``inc_pos`` is the node's offset inside the hyperedge.
    """

    def __init__(self, edge_ptr, edge_nodes, edge_time, n_nodes: int, node_labels=None):
        self.edge_ptr = _readonly(np.asarray(edge_ptr, dtype=np.int64))
        self.edge_nodes = _readonly(np.asarray(edge_nodes, dtype=np.int64))
        self.edge_time = _readonly(np.asarray(edge_time, dtype=np.float64))
        self.edge_size = _readonly(np.diff(self.edge_ptr))
        self.n_nodes = int(n_nodes)
        if node_labels is None:
            node_labels = np.arange(self.n_nodes, dtype=np.int64)
        self.node_labels = _readonly(np.asarray(node_labels, dtype=np.int64))
        if len(self.edge_time) and np.any(np.diff(self.edge_time) < 0):
            raise ValueError("edges must be sorted by time")
        if len(self.edge_size) and self.edge_size.min() < 2:
            raise ValueError("hyperedges must have at least two nodes")
        self._build_incidence()

    def _build_incidence(self):
        n_edges = len(self.edge_time)
        edge_of_slot = np.repeat(np.arange(n_edges, dtype=np.int64), self.edge_size)
        # stable sort by node keeps edge (hence time) order inside each node
        order = np.argsort(self.edge_nodes, kind="stable")
        nodes_sorted = self.edge_nodes[order]
        counts = np.bincount(nodes_sorted, minlength=self.n_nodes) if n_edges else np.zeros(self.n_nodes, np.int64)
        ptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        self.inc_ptr = _readonly(ptr)
        self.inc_edge = _readonly(edge_of_slot[order])
        self.inc_time = _readonly(self.edge_time[self.inc_edge])
        # position of the node inside its hyperedge, per incidence slot
        self.inc_pos = _readonly(order - self.edge_ptr[self.inc_edge])

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[Sequence[int], float]], n_nodes: int | None = None,
                   node_labels=None) -> "TemporalHypergraph":
        """Build from ``(nodes, time)`` pairs or :class:`TemporalHyperedge` objects.

        Node sets are deduplicated and sorted; the edge list is stably sorted by
        time.  Duplicate hyperedges are kept.
        """
        node_lists = []
        times = []
        for item in edges:
            nodes, t = (item.nodes, item.time) if isinstance(item, TemporalHyperedge) else item
            ns = sorted(set(int(x) for x in nodes))
            if len(ns) < 2:
                raise ValueError(f"hyperedge {nodes!r} has fewer than two distinct nodes")
            node_lists.append(ns)
            times.append(float(t))
        times_arr = np.asarray(times, dtype=np.float64)
        order = np.argsort(times_arr, kind="stable")
        sizes = np.array([len(node_lists[i]) for i in order], dtype=np.int64)
        ptr = np.zeros(len(order) + 1, dtype=np.int64)
        np.cumsum(sizes, out=ptr[1:])
        flat = np.fromiter((x for i in order for x in node_lists[i]), dtype=np.int64, count=int(ptr[-1]))
        if n_nodes is None:
            n_nodes = int(flat.max()) + 1 if len(flat) else 0
        elif len(flat) and flat.max() >= n_nodes:
            raise ValueError("node id out of range")
        return cls(ptr, flat, times_arr[order], n_nodes, node_labels)

    # -- accessors --------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edge_time)

    def nodes_of(self, e: int) -> np.ndarray:
        return self.edge_nodes[self.edge_ptr[e]:self.edge_ptr[e + 1]]

    def edge(self, e: int) -> TemporalHyperedge:
        return TemporalHyperedge(int(e), tuple(int(x) for x in self.nodes_of(e)), float(self.edge_time[e]))

    @property
    def edges(self) -> list[TemporalHyperedge]:
        return [self.edge(e) for e in range(self.n_edges)]

    def incidence(self, z: int) -> tuple[np.ndarray, np.ndarray]:
        """All ``(edge_ids, times)`` of node ``z``, sorted by time."""
        a, b = self.inc_ptr[z], self.inc_ptr[z + 1]
        return self.inc_edge[a:b], self.inc_time[a:b]

    def history_cutoff(self, z: int, t: float) -> int:
        """Number of incidences of ``z`` with time strictly less than ``t``."""
        a, b = self.inc_ptr[z], self.inc_ptr[z + 1]
        return int(np.searchsorted(self.inc_time[a:b], t, side="left"))

    @property
    def t_min(self) -> float:
        return float(self.edge_time[0]) if self.n_edges else 0.0

    @property
    def t_max(self) -> float:
        return float(self.edge_time[-1]) if self.n_edges else 0.0

    @property
    def time_range(self) -> float:
        return self.t_max - self.t_min

    def with_times(self, new_times: np.ndarray) -> "TemporalHypergraph":
        new_times = np.asarray(new_times, dtype=np.float64)
        return TemporalHypergraph(self.edge_ptr, self.edge_nodes, new_times, self.n_nodes, self.node_labels)

    def edge_list(self) -> list[tuple[tuple[int, ...], float]]:
        return [(tuple(int(x) for x in self.nodes_of(e)), float(self.edge_time[e])) for e in range(self.n_edges)]

    def __eq__(self, other):
        if not isinstance(other, TemporalHypergraph):
            return NotImplemented
        return (self.n_nodes == other.n_nodes
                and np.array_equal(self.edge_ptr, other.edge_ptr)
                and np.array_equal(self.edge_nodes, other.edge_nodes)
                and np.array_equal(self.edge_time, other.edge_time)
                and np.array_equal(self.node_labels, other.node_labels))

    def __repr__(self):
        return f"TemporalHypergraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def incident_before(graph: TemporalHypergraph, z: int, t: float) -> list[tuple[int, float]]:
    """Incidences of ``z`` with time strictly less than ``t``, sorted by time."""
    if not 0 <= z < graph.n_nodes:
        raise IndexError(f"node {z} out of range")
    eids, times = graph.incidence(z)
    k = np.searchsorted(times, t, side="left")
    return [(int(e), float(s)) for e, s in zip(eids[:k], times[:k])]


def stats(graph: TemporalHypergraph) -> DatasetStats:
    if graph.n_edges == 0:
        raise ValueError("stats of an empty hypergraph")
    sizes = graph.edge_size.astype(np.float64)
    n_nodes = graph.n_nodes
    avg = float(sizes.mean())
    T = graph.time_range
    intensity = 2.0 * graph.n_edges * avg ** 2 / (n_nodes * T) if T > 0 else float("inf")
    return DatasetStats(
        n_nodes=n_nodes,
        n_hyperedges=graph.n_edges,
        avg_size=avg,
        std_size=float(sizes.std()),
        time_range=T,
        edge_intensity=intensity,
    )


def normalize_time(graph: TemporalHypergraph, target_intensity: float = DEFAULT_INTENSITY) -> TemporalHypergraph:
    """Shift the first timestamp to 0 and rescale so edge intensity equals ``target_intensity``."""
    if graph.n_edges == 0:
        raise ValueError("cannot normalize an empty hypergraph")
    if target_intensity <= 0:
        raise ValueError("target_intensity must be positive")
    T = graph.time_range
    if T <= 0:
        raise DegenerateTimeError("all timestamps are equal; time range is zero")
    s = stats(graph)
    new_T = 2.0 * s.n_hyperedges * s.avg_size ** 2 / (s.n_nodes * target_intensity)
    shifted = graph.edge_time - graph.t_min
    return graph.with_times(shifted * (new_T / T))


# -- text ingestion -------------------------------------------------------

def _read_column(path: str | os.PathLike, kind) -> list:
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s:
                continue
            try:
                out.append(kind(s))
            except ValueError:
                raise HypergraphFormatError(f"cannot parse {s!r} as {kind.__name__}", str(path), lineno) from None
    return out


def _parse_int(s: str) -> int:
    v = float(s)
    if v != int(v):
        raise ValueError(s)
    return int(v)


_parse_int.__name__ = "int"


def read_benson_raw(nverts_path, simplices_path, times_path):
    """Parse the three-file layout into (sizes, flat node ids, times) arrays."""
    nverts = _read_column(nverts_path, _parse_int)
    simplices = _read_column(simplices_path, _parse_int)
    times = _read_column(times_path, float)
    if len(nverts) != len(times):
        raise HypergraphFormatError(
            f"nverts has {len(nverts)} entries but times has {len(times)}", str(times_path))
    if sum(nverts) != len(simplices):
        raise HypergraphFormatError(
            f"nverts sums to {sum(nverts)} but simplices has {len(simplices)} entries", str(simplices_path))
    if any(n < 1 for n in nverts):
        bad = next(i for i, n in enumerate(nverts) if n < 1)
        raise HypergraphFormatError("simplex size must be positive", str(nverts_path), bad + 1)
    return (np.asarray(nverts, dtype=np.int64), np.asarray(simplices, dtype=np.int64),
            np.asarray(times, dtype=np.float64))


def ingest_benson(nverts_path, simplices_path, times_path) -> list[TemporalHyperedge]:
    """Read a simplicial dataset; returns hyperedges in file order with dense node ids.

    Node ids are remapped to ``0..|V|-1`` in order of first appearance.
    Singleton simplices are dropped (repeated vertices inside one simplex are
    collapsed first, so ``[4, 4]`` is a singleton too).
    """
    edges, _ = _ingest(nverts_path, simplices_path, times_path)
    return edges


def _ingest(nverts_path, simplices_path, times_path):
    sizes, flat, times = read_benson_raw(nverts_path, simplices_path, times_path)
    ptr = np.zeros(len(sizes) + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    remap: dict[int, int] = {}
    edges: list[TemporalHyperedge] = []
    dropped = 0
    for i in range(len(sizes)):
        raw = list(dict.fromkeys(flat[ptr[i]:ptr[i + 1]].tolist()))
        if len(raw) < 2:
            dropped += 1
            continue
        for x in raw:
            if x not in remap:
                remap[x] = len(remap)
        edges.append(TemporalHyperedge(len(edges), tuple(sorted(remap[x] for x in raw)), float(times[i])))
    if dropped:
        logger.info("dropped %d simplices with fewer than two distinct nodes", dropped)
    labels = np.empty(len(remap), dtype=np.int64)
    for raw_id, dense in remap.items():
        labels[dense] = raw_id
    return edges, labels


def ingest_benson_graph(nverts_path, simplices_path, times_path) -> TemporalHypergraph:
    edges, labels = _ingest(nverts_path, simplices_path, times_path)
    return TemporalHypergraph.from_edges(((e.nodes, e.time) for e in edges), n_nodes=len(labels),
                                         node_labels=labels)


def find_benson_files(directory) -> tuple[Path, Path, Path]:
    """Locate ``*-nverts.txt``, ``*-simplices.txt`` and ``*-times.txt`` in a dataset directory."""
    d = Path(directory)
    found = []
    for suffix in ("nverts", "simplices", "times"):
        hits = sorted(d.glob(f"*-{suffix}.txt"))
        if len(hits) != 1:
            raise FileNotFoundError(f"expected exactly one *-{suffix}.txt in {d}, found {len(hits)}")
        found.append(hits[0])
    return tuple(found)


def write_benson(graph: TemporalHypergraph, prefix) -> tuple[Path, Path, Path]:
    """Write the graph back out in the three-file layout, using original node labels."""
    prefix = str(prefix)
    paths = tuple(Path(f"{prefix}-{s}.txt") for s in ("nverts", "simplices", "times"))
    paths[0].parent.mkdir(parents=True, exist_ok=True)
    with open(paths[0], "w") as f:
        f.writelines(f"{int(s)}\n" for s in graph.edge_size)
    with open(paths[1], "w") as f:
        f.writelines(f"{int(graph.node_labels[x])}\n" for x in graph.edge_nodes)
    with open(paths[2], "w") as f:
        f.writelines(f"{t!r}\n" for t in graph.edge_time.tolist())
    return paths


# -- binary cache ---------------------------------------------------------

_HEADER = struct.Struct("<4sIqqq")


def save_cache(graph: TemporalHypergraph, path) -> None:
    """Write the versioned binary cache (header, then little-endian arrays)."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, graph.n_nodes, graph.n_edges, len(graph.edge_nodes)))
        f.write(graph.node_labels.astype("<i8").tobytes())
        f.write(graph.edge_time.astype("<f8").tobytes())
        f.write(graph.edge_size.astype("<i4").tobytes())
        f.write(graph.edge_nodes.astype("<i4").tobytes())
    os.replace(tmp, path)


def load_cache(path) -> TemporalHypergraph:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise HypergraphFormatError("truncated cache header", str(path))
    magic, version, n_nodes, n_edges, n_slots = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise HypergraphFormatError("not a hypergraph cache file", str(path))
    if version != CACHE_VERSION:
        raise HypergraphFormatError(f"unsupported cache version {version}", str(path))
    off = _HEADER.size
    need = off + 8 * n_nodes + 8 * n_edges + 4 * n_edges + 4 * n_slots
    if len(raw) != need:
        raise HypergraphFormatError(f"cache size {len(raw)} does not match header ({need})", str(path))
    labels = np.frombuffer(raw, "<i8", n_nodes, off).astype(np.int64)
    off += 8 * n_nodes
    times = np.frombuffer(raw, "<f8", n_edges, off).astype(np.float64)
    off += 8 * n_edges
    sizes = np.frombuffer(raw, "<i4", n_edges, off).astype(np.int64)
    off += 4 * n_edges
    nodes = np.frombuffer(raw, "<i4", n_slots, off).astype(np.int64)
    ptr = np.zeros(n_edges + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    return TemporalHypergraph(ptr, nodes, times, n_nodes, labels)
