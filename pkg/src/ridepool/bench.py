"""Benchmark of the all-pairs shortest-path kernels.

Builds square grids of increasing size and times the table construction
once per backend.  The jitted kernel is warmed on a tiny instance first so
compilation does not pollute the numbers.  Outputs are also compared
element-wise; both paths must agree exactly.

Run as ``python -m ridepool.bench`` or ``ridepool bench``.
"""

from __future__ import annotations

import time

import numpy as np

from . import _sp_kernels
from ._sp_kernels import INF
from .netgraph import make_grid


def _inputs(net):
    n = net.n_nodes
    dur = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(dur, 0)
    adj = np.full((n, n), INF, dtype=np.int64)
    dur[net._arc_from, net._arc_to] = net._arc_dur
    adj[net._arc_from, net._arc_to] = net._arc_len
    return dur, adj, net._arc_from, net._arc_to, net._arc_dur


def run_benchmark(sizes=(10, 20, 30), repeats=3) -> None:
    if _sp_kernels._HAVE_NUMBA:
        _sp_kernels._build_jit(*_inputs(make_grid(3, 3, 0.2, 30)))  # warm the JIT

    print(f"{'grid':>8} {'nodes':>6} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8}  equal")
    for size in sizes:
        net = make_grid(size, size, 0.2, 30)
        args = _inputs(net)

        t0 = time.perf_counter()
        for _ in range(repeats):
            res_np = _sp_kernels._build_numpy(*args)
        t_np = (time.perf_counter() - t0) / repeats

        if _sp_kernels._HAVE_NUMBA:
            t0 = time.perf_counter()
            for _ in range(repeats):
                res_nb = _sp_kernels._build_jit(*args)
            t_nb = (time.perf_counter() - t0) / repeats
            equal = all(np.array_equal(a, b) for a, b in zip(res_np, res_nb))
            print(
                f"{size:>4}x{size:<3} {net.n_nodes:>6} {t_np:>10.4f} {t_nb:>10.4f}"
                f" {t_np / t_nb:>7.1f}x  {equal}"
            )
        else:
            print(f"{size:>4}x{size:<3} {net.n_nodes:>6} {t_np:>10.4f} {'n/a':>10} {'n/a':>8}  n/a")


if __name__ == "__main__":
    run_benchmark()
