"""Compare the compiled and pure-Python kernels.

Run from the repository root::

    python benchmarks/bench_kernels.py [--repeat 3]

Each case is timed on both backends with identical inputs; the last column
is the speed-up of the compiled kernels and the max abs difference of the
outputs is printed as a parity check.
"""

import argparse
import time

import numpy as np

from hyperdescent import _pykernels as py
from hyperdescent.graphs import complete_binary_tree

try:
    from hyperdescent import _ckernels as cy
except ImportError:  # extension not built
    cy = None


def _cases(rng):
    n = 20000
    P = rng.uniform(-0.5, 0.5, (n, 2))
    V = rng.normal(size=(n, 2))
    Q = rng.uniform(-0.5, 0.5, (n, 2))
    g = complete_binary_tree(5, "undirected")
    nn = g.non_neighbors()
    X = rng.uniform(-0.5, 0.5, (g.num_nodes, 2))

    def term_steps(k):
        Y = X.copy()
        out = 0.0
        for i in range(200):
            u = i % g.num_nodes
            v = (u - 1) // 2 if u else 1
            out += k.softmax_term_step(Y, u, v, nn[u], 2, 0.01, 1.0, 1e-10)[0]
        return np.append(Y.ravel(), out)

    return [
        ("expmap_batch (20k)", lambda k: k.expmap_batch(P, V)),
        ("dist_batch (20k)", lambda k: k.dist_batch(P, Q)),
        ("dist_grad x2000", lambda k: np.array([k.dist_grad(P[i], Q[i])[1] for i in range(2000)])),
        ("geodesic step x2000", lambda k: np.array([k.step(P[i], V[i], 2, 0.1)[0] for i in range(2000)])),
        ("softmax term step x200", term_steps),
    ]


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled kernels are not built; only the Python backend is available")
    rng = np.random.default_rng(0)
    print(f"{'case':<26}{'python [s]':>12}{'cython [s]':>12}{'speed-up':>10}{'max diff':>11}")
    for name, fn in _cases(rng):
        tp, outp = _best(lambda: fn(py), args.repeat)
        if cy is None:
            print(f"{name:<26}{tp:>12.4f}")
            continue
        tc, outc = _best(lambda: fn(cy), args.repeat)
        diff = float(np.max(np.abs(np.asarray(outp) - np.asarray(outc))))
        print(f"{name:<26}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
