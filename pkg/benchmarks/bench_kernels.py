#!/usr/bin/env python3
"""Time the numba and numpy kernel flavours side by side.

Both flavours live in ``rbfonline.kernels.IMPLEMENTATIONS`` regardless of
RBFONLINE_BACKEND, so one process can compare them. The numba column
excludes compilation (each kernel is warmed up first). Every row also
reports the max abs difference between the two outputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]
"""
import argparse
import time

import numpy as np

from rbfonline._backend import HAVE_NUMBA
from rbfonline.kernels import IMPLEMENTATIONS
from rbfonline.prototypes import fit_prototypes


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _prequential_case(n, d, k, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    labels = np.tanh(X[:, 0]) + 0.1 * rng.standard_normal(n)
    pset = fit_prototypes(X[: n // 2], k)

    def run(impl):
        theta, P = np.zeros(k + 1), np.eye(k + 1)
        p = pset.copy()
        preds = np.empty(n)
        impl["prequential_rbf"](X, labels, 3, theta, P, 0.99, p.means, p.scatters, p.chols,
                                p.weights, p.decay, p.shrinkage, p.eps, True, True, preds)
        return preds

    return run


def _ewrls_case(n, dim, seed=1):
    rng = np.random.default_rng(seed)
    Phi = rng.standard_normal((n, dim))
    y = rng.standard_normal(n)

    def run(impl):
        theta, P = np.zeros(dim), np.eye(dim)
        priors = np.empty(n)
        impl["ewrls_run"](theta, P, Phi, y, 0.99, priors)
        return priors

    return run


def _rbf_matrix_case(n, d, k, seed=2):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    pset = fit_prototypes(X, k)
    return lambda impl: impl["rbf_matrix"](X, pset.means, pset.chols)


def _assign_case(n, d, k, seed=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    C = rng.standard_normal((k, d))
    return lambda impl: impl["assign"](X, C)[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare against")
    scale = 0.1 if args.quick else 1.0
    n = int(20_000 * scale)
    cases = [
        (f"prequential_rbf n={n // 4} d=3 k=18", _prequential_case(n // 4, 3, 18)),
        (f"ewrls_run n={n} dim=19", _ewrls_case(n, 19)),
        (f"rbf_matrix n={n} d=3 k=18", _rbf_matrix_case(n, 3, 18)),
        (f"assign n={n * 5} d=3 k=18", _assign_case(n * 5, 3, 18)),
    ]
    nb, npy = IMPLEMENTATIONS["numba"], IMPLEMENTATIONS["numpy"]
    print(f"{'kernel':<36} {'numba s':>10} {'numpy s':>10} {'speedup':>8} {'max |diff|':>11}")
    for name, case in cases:
        case(nb)  # compile / load the cached machine code
        t_nb, out_nb = _best(lambda: case(nb), args.repeat)
        t_np, out_np = _best(lambda: case(npy), max(1, args.repeat // 2))
        diff = float(np.nanmax(np.abs(np.asarray(out_nb) - np.asarray(out_np))))
        print(f"{name:<36} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>7.1f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
