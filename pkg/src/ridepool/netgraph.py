"""Road network representation and shortest-path queries.

A network is a directed graph of named locations.  Shortest paths minimize
travel time; the mileage reported for a query is the mileage along that
time-optimal path (ties broken toward the lexicographically smallest node
sequence).  All-pairs tables are precomputed lazily and shared, since a
simulation reuses a small set of origin/destination pairs heavily.

Distances are miles, durations seconds, stored as exact micro-units.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _sp_kernels
from ._sp_kernels import INF
from .units import UMILE, USEC, umiles_from_miles, usec_from_seconds, fraction_from, round_fraction


class InvalidParameter(ValueError):
    """A network construction parameter is out of range or inconsistent."""


class Unreachable(Exception):
    """No path exists between the queried locations."""

    def __init__(self, origin: str, destination: str):
        super().__init__(f"no path from {origin!r} to {destination!r}")
        self.origin = origin
        self.destination = destination


@dataclass(frozen=True)
class PathResult:
    """A time-minimal path: total miles, total seconds and the node sequence."""

    distance: float
    duration: float
    node_sequence: tuple[str, ...]


class RoadNetwork:
    """Directed road graph with memoized all-pairs shortest-path tables.

    Node ids are strings; internally nodes are the indices of the sorted id
    list, which makes index order and lexicographic id order coincide.
    Instances are read-only after construction and safe to query from
    multiple threads; table construction is guarded by a lock.
    """

    def __init__(self, nodes, arcs, coordinates=None):
        """nodes: iterable of ids; arcs: (from, to, length_mi, time_s)."""
        node_ids = sorted(set(nodes))
        if not node_ids:
            raise InvalidParameter("network needs at least one node")
        self.node_ids: tuple[str, ...] = tuple(node_ids)
        self._index: dict[str, int] = {nid: i for i, nid in enumerate(self.node_ids)}
        self.coordinates = dict(coordinates or {})

        seen: set[tuple[int, int]] = set()
        rows = []
        for frm, to, length_mi, time_s in arcs:
            if frm not in self._index or to not in self._index:
                raise InvalidParameter(f"arc ({frm!r}, {to!r}) references unknown node")
            if frm == to:
                raise InvalidParameter(f"self-loop arc at {frm!r}")
            key = (self._index[frm], self._index[to])
            if key in seen:
                raise InvalidParameter(f"duplicate arc ({frm!r}, {to!r})")
            seen.add(key)
            len_umi = umiles_from_miles(length_mi)
            dur_us = usec_from_seconds(time_s)
            if len_umi <= 0 or dur_us <= 0:
                raise InvalidParameter(f"arc ({frm!r}, {to!r}) needs positive length and time")
            rows.append((key[0], key[1], len_umi, dur_us))
        rows.sort()
        self._arc_from = np.array([r[0] for r in rows], dtype=np.int64)
        self._arc_to = np.array([r[1] for r in rows], dtype=np.int64)
        self._arc_len = np.array([r[2] for r in rows], dtype=np.int64)
        self._arc_dur = np.array([r[3] for r in rows], dtype=np.int64)

        self._lock = threading.Lock()
        self._tables = None
        self._path_cache: dict[tuple[int, int], tuple[int, ...]] = {}
        self._arc_map: dict[tuple[int, int], tuple[int, int]] = {
            (int(f), int(t)): (int(l), int(d))
            for f, t, l, d in zip(self._arc_from, self._arc_to, self._arc_len, self._arc_dur)
        }

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    # -- construction helpers -------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_arcs(self) -> int:
        return int(self._arc_from.shape[0])

    def index(self, node: str) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise InvalidParameter(f"unknown node {node!r}") from None

    def has_node(self, node: str) -> bool:
        return node in self._index

    def arcs(self):
        """Yield (from_id, to_id, length_umiles, time_usec)."""
        for i in range(self.n_arcs):
            yield (
                self.node_ids[self._arc_from[i]],
                self.node_ids[self._arc_to[i]],
                int(self._arc_len[i]),
                int(self._arc_dur[i]),
            )

    # -- shortest paths --------------------------------------------------------

    def _ensure_tables(self):
        if self._tables is None:
            with self._lock:
                if self._tables is None:
                    n = self.n_nodes
                    dur = np.full((n, n), INF, dtype=np.int64)
                    np.fill_diagonal(dur, 0)
                    adj = np.full((n, n), INF, dtype=np.int64)
                    dur[self._arc_from, self._arc_to] = self._arc_dur
                    adj[self._arc_from, self._arc_to] = self._arc_len
                    self._tables = _sp_kernels.build_tables(
                        dur, adj, self._arc_from, self._arc_to, self._arc_dur
                    )
        return self._tables

    def duration_usec(self, i: int, j: int) -> int:
        """Travel time between node indices; raises Unreachable."""
        d = int(self._ensure_tables()[0][i, j])
        if d >= INF:
            raise Unreachable(self.node_ids[i], self.node_ids[j])
        return d

    def distance_umiles(self, i: int, j: int) -> int:
        """Mileage along the canonical time-minimal path between indices."""
        self.duration_usec(i, j)
        return int(self._ensure_tables()[2][i, j])

    def reachable(self, i: int, j: int) -> bool:
        return int(self._ensure_tables()[0][i, j]) < INF

    def arc_attrs(self, i: int, j: int) -> tuple[int, int]:
        """(length_umiles, time_usec) of the direct arc between node indices."""
        return self._arc_map[(i, j)]

    def path_indices(self, i: int, j: int) -> tuple[int, ...]:
        """Node-index sequence of the canonical path, memoized per pair."""
        cached = self._path_cache.get((i, j))
        if cached is not None:
            return cached
        d, nxt, _ = self._ensure_tables()
        if d[i, j] >= INF:
            raise Unreachable(self.node_ids[i], self.node_ids[j])
        seq = [i]
        cur = i
        while cur != j:
            cur = int(nxt[cur, j])
            seq.append(cur)
        out = tuple(seq)
        with self._lock:
            self._path_cache[(i, j)] = out
        return out

    def shortest_path(self, origin: str, destination: str) -> PathResult:
        """Time-minimal path from origin to destination.

        Deterministic for a fixed network: among equal-duration paths the
        lexicographically smallest node sequence is returned, and the
        reported distance is measured along that path.
        """
        i, j = self.index(origin), self.index(destination)
        dur = self.duration_usec(i, j)
        dist = self.distance_umiles(i, j)
        seq = tuple(self.node_ids[k] for k in self.path_indices(i, j))
        return PathResult(distance=dist / UMILE, duration=dur / USEC, node_sequence=seq)


def make_grid(rows: int, cols: int, edge_length: float, speed: float) -> RoadNetwork:
    """Bidirectional 4-neighbor grid; per-arc time is edge_length / speed.

    edge_length is in miles, speed in miles per hour.  Node ids encode the
    row/column so the sorted order is the row-major grid order.
    """
    if rows < 2 or cols < 2:
        raise InvalidParameter("grid needs at least 2 rows and 2 columns")
    if rows > 1000 or cols > 1000:
        raise InvalidParameter("grid larger than 1000x1000 is not supported")
    len_umi = umiles_from_miles(edge_length)
    speed_frac = fraction_from(speed)
    if len_umi <= 0 or speed_frac <= 0:
        raise InvalidParameter("edge_length and speed must be positive")
    # hours -> seconds cancels the micro scaling: usec = umiles * 3600 / mph
    dur_us = round_fraction(Fraction(len_umi * 3600, 1) / speed_frac)
    if dur_us <= 0:
        raise InvalidParameter("edge travel time rounds to zero")

    def nid(r, c):
        return f"n{r:03d}x{c:03d}"

    length = Fraction(len_umi, UMILE)
    time_s = Fraction(dur_us, USEC)
    nodes = [nid(r, c) for r in range(rows) for c in range(cols)]
    arcs = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                arcs.append((nid(r, c), nid(r, c + 1), length, time_s))
                arcs.append((nid(r, c + 1), nid(r, c), length, time_s))
            if r + 1 < rows:
                arcs.append((nid(r, c), nid(r + 1, c), length, time_s))
                arcs.append((nid(r + 1, c), nid(r, c), length, time_s))
    coords = {nid(r, c): (float(c), float(r)) for r in range(rows) for c in range(cols)}
    return RoadNetwork(nodes, arcs, coords)


def load_network_csv(path) -> RoadNetwork:
    """Read a network file with `node,id,x,y` and `arc,from,to,length_mi,time_s` rows."""
    nodes = []
    arcs = []
    coords = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            kind = row[0].strip().lower()
            if kind == "node":
                if len(row) < 2:
                    raise InvalidParameter(f"line {lineno}: node row needs an id")
                nodes.append(row[1].strip())
                if len(row) >= 4:
                    coords[row[1].strip()] = (float(row[2]), float(row[3]))
            elif kind == "arc":
                if len(row) < 5:
                    raise InvalidParameter(f"line {lineno}: arc row needs from,to,length_mi,time_s")
                arcs.append((row[1].strip(), row[2].strip(), row[3].strip(), row[4].strip()))
            else:
                raise InvalidParameter(f"line {lineno}: unknown row kind {row[0]!r}")
    return RoadNetwork(nodes, arcs, coords)


def save_network_csv(net: RoadNetwork, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for nid in net.node_ids:
            x, y = net.coordinates.get(nid, (0.0, 0.0))
            writer.writerow(["node", nid, x, y])
        for frm, to, len_umi, dur_us in net.arcs():
            writer.writerow(["arc", frm, to, len_umi / UMILE, dur_us / USEC])
