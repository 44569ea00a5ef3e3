"""Benchmark the compiled coordinate-ascent kernel against the fallback.

Runs identical epoch workloads through both backends and reports per-epoch
wall time plus the speedup.  Invoke from the repo root:

    python benchmarks/bench_kernels.py [--n 20000] [--d 200] [--nnz 15]
"""

from __future__ import annotations

import argparse
import time

import numpy as np
import scipy.sparse as sp

from ratecon._kernels import _sdca_py

try:
    from ratecon._kernels import _sdca_cy
except ImportError:
    _sdca_cy = None


def make_workload(n, d, nnz, seed=0):
    rng = np.random.default_rng(seed)
    density = min(1.0, nnz / d)
    X = sp.random(n, d, density=density, format="csr", dtype=np.float64,
                  random_state=np.random.RandomState(seed))
    lam = 1.0 / n
    inv = 1.0 / (lam * n)
    sq_over = np.asarray(X.multiply(X).sum(axis=1)).ravel() * inv
    a_plus = rng.uniform(0.0, 1.0, size=n)
    a_minus = rng.uniform(0.0, 1.0, size=n)
    return X, sq_over, a_plus, a_minus, inv


def time_epochs(kernel, X, sq_over, a_plus, a_minus, inv, epochs, seed=1):
    n, d = X.shape
    xi = np.zeros(n)
    w = np.zeros(d)
    indptr = X.indptr.astype(np.int64)
    indices = X.indices.astype(np.int32)
    order_rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    for _ in range(epochs):
        order = order_rng.integers(0, n, size=n)
        kernel(indptr, indices, X.data, sq_over, a_plus, a_minus,
               order, xi, w, 0.1, inv)
    return (time.perf_counter() - t0) / epochs, xi, w


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=20000)
    parser.add_argument("--d", type=int, default=200)
    parser.add_argument("--nnz", type=int, default=15)
    parser.add_argument("--epochs", type=int, default=10)
    args = parser.parse_args()

    workload = make_workload(args.n, args.d, args.nnz)
    print(f"workload: n={args.n} d={args.d} ~{args.nnz} nnz/example, "
          f"{args.epochs} epochs")

    py_time, xi_py, w_py = time_epochs(_sdca_py.sdca_epoch, *workload,
                                       epochs=args.epochs)
    print(f"python  : {py_time * 1e3:9.2f} ms/epoch")
    if _sdca_cy is None:
        print("cython  : not built (pip install -e . compiles it)")
        return
    cy_time, xi_cy, w_cy = time_epochs(_sdca_cy.sdca_epoch, *workload,
                                       epochs=args.epochs)
    print(f"cython  : {cy_time * 1e3:9.2f} ms/epoch")
    print(f"speedup : {py_time / cy_time:9.1f}x")
    drift = float(np.max(np.abs(w_py - w_cy)))
    print(f"agreement: max |w_py - w_cy| = {drift:.2e}")


if __name__ == "__main__":
    main()
