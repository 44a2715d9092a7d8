#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallback path.

Runs each hot kernel on representative workloads and prints a timing
table.  The numpy path is the same code the package uses when
TWODESIGN_NO_NUMBA=1 is set; results of the two paths agree to round-off
(see tests/test_kernels.py), so this script is purely about speed.

Usage: python benchmarks/bench_kernels.py [--n 16] [--batch 64] [--reps 5]
"""

import argparse
import time

import numpy as np

from twodesign import kernels
from twodesign.architectures import brickwork_layers, make_family


def _time(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()

    n, m = args.n, args.batch
    rng = np.random.default_rng(0)
    block = rng.standard_normal((m, 1 << n))
    scratch = np.empty_like(block)
    edges = make_family("linear", n).edges
    layer = brickwork_layers(n, "open")[0]
    masks = rng.integers(0, 1 << n, size=m).astype(np.uint64)
    c = 0.4

    if not kernels.USE_NUMBA:
        print("numba is disabled (TWODESIGN_NO_NUMBA set); only the numpy "
              "path will run")

    cases = []

    def gate_nb():
        kernels.gate_apply_batch(block, 2, 9, c)

    def gate_np():
        kernels._gate_apply_batch_np(block, 2, 9, c)

    cases.append(("two-site gate", gate_nb, gate_np))

    ei = np.asarray([e[0] for e in edges])
    ej = np.asarray([e[1] for e in edges])

    def graph_nb():
        kernels.graph_step_batch(block, scratch, edges, c)

    def graph_np():
        kernels._graph_step_batch_np(block, scratch, ei, ej, c)

    cases.append((f"graph step ({len(edges)} edges)", graph_nb, graph_np))

    pi = np.asarray([p[0] for p in layer])
    pj = np.asarray([p[1] for p in layer])

    def layer_nb():
        kernels.layer_apply_batch(block, layer, c)

    def layer_np():
        kernels._layer_apply_batch_np(block, pi, pj, c)

    cases.append((f"brickwork layer ({len(layer)} gates)", layer_nb,
                  layer_np))

    out = np.empty(m)

    def dot_nb():
        kernels.signed_dot_batch(block, masks)

    def dot_np():
        kernels._signed_dot_batch_np(block, masks, out)

    cases.append(("signed contraction", dot_nb, dot_np))

    print(f"batch of {m} states on {n} sites (2^{n} = {1 << n} entries "
          f"each), best of {args.reps}")
    print(f"{'kernel':30s} {'jit [ms]':>10s} {'numpy [ms]':>11s} "
          f"{'speedup':>8s}")
    for name, fn_nb, fn_np in cases:
        if kernels.USE_NUMBA:
            fn_nb()  # compile outside the timing loop
            t_nb = _time(fn_nb, args.reps) * 1e3
        else:
            t_nb = float("nan")
        t_np = _time(fn_np, args.reps) * 1e3
        speed = t_np / t_nb if t_nb == t_nb else float("nan")
        print(f"{name:30s} {t_nb:10.2f} {t_np:11.2f} {speed:8.1f}x")


if __name__ == "__main__":
    main()
