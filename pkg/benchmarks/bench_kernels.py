"""Compare the compiled kernels against the pure-numpy fallback path.

Run twice to see both sides, or let this script do it for you: it re-executes
itself with GRAPHNOTICE_NO_NUMBA=1 for the fallback column.

    python3 benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np


def build_graph(n, p, seed):
    from graphnotice.graph import Graph
    from graphnotice.rng import DeterministicRng
    gen = DeterministicRng(seed).generator
    iu, ju = np.triu_indices(n, k=1)
    mask = gen.random(iu.size) < p
    edges = {(int(u), int(v)) for u, v in zip(iu[mask], ju[mask])}
    return Graph(n=n, edges=edges)


def bench(fn, repeats=3):
    fn()  # warmup (includes jit compilation when enabled)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite():
    from graphnotice import _kernels, gstats
    from graphnotice.rng import DeterministicRng
    g = build_graph(400, 0.05, seed=1)
    indptr, indices = g.csr_arrays()
    gen = DeterministicRng(2).generator
    x = np.sort(gen.normal(size=20000))
    y = np.sort(gen.normal(size=20000))
    rows = [
        ("betweenness n=400", lambda: gstats.betweenness_centrality(g)),
        ("triangle counts n=400",
         lambda: _kernels.triangle_edge_counts(indptr, indices, g.n)),
        ("ks merge 20k vs 20k",
         lambda: _kernels.ks_statistic_sorted(x, y)),
    ]
    mode = "fallback" if os.environ.get("GRAPHNOTICE_NO_NUMBA") else "numba"
    print(f"# mode={mode} (USE_NUMBA={_kernels.USE_NUMBA})")
    for name, fn in rows:
        print(f"{name:28s} {bench(fn) * 1e3:10.2f} ms")


if __name__ == "__main__":
    run_suite()
    sys.stdout.flush()
    if not os.environ.get("GRAPHNOTICE_NO_NUMBA"):
        env = dict(os.environ, GRAPHNOTICE_NO_NUMBA="1")
        subprocess.run([sys.executable, os.path.abspath(__file__)], env=env,
                       check=True)
