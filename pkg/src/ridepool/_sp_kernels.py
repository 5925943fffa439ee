"""All-pairs shortest-path table kernels.

This is the one numerically hot loop of the package.  Tables are built once
per network and memoized, so the cost is front-loaded:

* ``duration`` -- min-plus closure of the arc travel-time matrix,
* ``next_hop`` -- first hop of the lexicographically smallest time-minimal
  path (smallest successor node index wins among ties),
* ``lex_dist`` -- mileage along exactly that path.

Two interchangeable backends exist: a numba-jitted kernel and a pure-numpy
fallback.  ``RIDEPOOL_NUMBA=0`` (or ``false``/``no``/``off``) forces the
numpy path; the numpy path is also used when numba is not importable.  Both
operate on int64 micro-units, so their outputs are bit-identical.
"""

from __future__ import annotations

import os

import numpy as np

INF = np.int64(2**61)

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


def numba_enabled() -> bool:
    flag = os.environ.get("RIDEPOOL_NUMBA", "1").strip().lower()
    return _HAVE_NUMBA and flag not in ("0", "false", "no", "off")


def backend_name() -> str:
    return "numba" if numba_enabled() else "numpy"


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _closure_numpy(dur: np.ndarray) -> np.ndarray:
    d = dur.copy()
    n = d.shape[0]
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    np.minimum(d, INF, out=d)
    return d


def _next_hop_numpy(d, arc_from, arc_to, arc_dur) -> np.ndarray:
    n = d.shape[0]
    nxt = np.full((n, n), -1, dtype=np.int32)
    np.fill_diagonal(nxt, np.arange(n, dtype=np.int32))
    # descending successor order so the smallest tied successor wins last
    order = np.lexsort((arc_to, arc_from))[::-1]
    for a in order:
        s = arc_from[a]
        hit = arc_dur[a] + d[arc_to[a], :] == d[s, :]
        hit[s] = False
        nxt[s, hit] = arc_to[a]
    return nxt


def _lex_dist_numpy(d, nxt, adj_dist) -> np.ndarray:
    n = d.shape[0]
    lex = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(lex, 0)
    # along the next-hop chain the remaining duration strictly decreases,
    # so filling pairs in ascending duration order resolves all dependencies
    for flat in np.argsort(d, axis=None):
        s, t = divmod(int(flat), n)
        if s == t or d[s, t] >= INF:
            continue
        step = nxt[s, t]
        lex[s, t] = adj_dist[s, step] + lex[step, t]
    return lex


def _build_numpy(dur, adj_dist, arc_from, arc_to, arc_dur):
    d = _closure_numpy(dur)
    nxt = _next_hop_numpy(d, arc_from, arc_to, arc_dur)
    lex = _lex_dist_numpy(d, nxt, adj_dist)
    return d, nxt, lex


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

@njit(cache=True)
def _build_jit(dur, adj_dist, arc_from, arc_to, arc_dur):  # pragma: no cover
    n = dur.shape[0]
    d = dur.copy()
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            if dik >= INF:
                continue
            for j in range(n):
                alt = dik + d[k, j]
                if alt < d[i, j]:
                    d[i, j] = alt

    nxt = np.full((n, n), -1, dtype=np.int32)
    for i in range(n):
        nxt[i, i] = i
    for a in range(arc_from.shape[0]):
        s = arc_from[a]
        step = arc_to[a]
        w = arc_dur[a]
        for t in range(n):
            if t == s:
                continue
            if w + d[step, t] == d[s, t] and (nxt[s, t] == -1 or step < nxt[s, t]):
                nxt[s, t] = step

    lex = np.full((n, n), INF, dtype=np.int64)
    for i in range(n):
        lex[i, i] = 0
    order = np.argsort(d.ravel())
    for f in range(order.shape[0]):
        flat = order[f]
        s = flat // n
        t = flat % n
        if s == t or d[s, t] >= INF:
            continue
        step = nxt[s, t]
        lex[s, t] = adj_dist[s, step] + lex[step, t]
    return d, nxt, lex


def build_tables(dur, adj_dist, arc_from, arc_to, arc_dur):
    """Build (duration, next_hop, lex_dist) tables with the active backend."""
    if numba_enabled():
        return _build_jit(dur, adj_dist, arc_from, arc_to, arc_dur)
    return _build_numpy(dur, adj_dist, arc_from, arc_to, arc_dur)
