"""Time the compiled and pure-Python kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--n-max 20000] [--N 1000] [--samples 200] [--repeat 3]
"""

import argparse
import time

from percop import kernels
from percop.charges import build_kernels, normalize
from percop.partition import partition_table
from percop.limits import asymptotic_constants, defective_kernel, gibbs_vectors
from percop.sampler import sample_finite, sample_infinite
from percop.walk import first_return_law


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=20000)
    ap.add_argument("--N", type=int, default=1000)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if kernels.BACKEND != "compiled":
        raise SystemExit("compiled extension not built; nothing to compare")

    law = first_return_law(0.3, 2 ** 16)
    c = normalize([0.3, -0.1, 0.2], [0.1, 0.4], [0.2], [0.0])
    ks = build_kernels(c, law)
    tab = partition_table(ks, args.N)
    a = tab.a  # per-class holding weights fed to the renewal recursion
    dks = build_kernels(normalize([0, 0], [1, -1], [-2], [0]), law)
    ac = asymptotic_constants(dks)
    gd = gibbs_vectors(dks, ac)
    dk = defective_kernel(dks, ac, 0, "free", n_cut=2 ** 12)

    rows = []
    for name in ("compiled", "python"):
        be = kernels.get_backend(name)
        res = {"first_return_law": best_of(
            lambda: be.first_return_law(0.3, args.n_max), args.repeat)}
        res["renewal_convolve"] = best_of(
            lambda: be.renewal_convolve(a, args.N, args.N), args.repeat)
        res["sample_finite"] = best_of(
            lambda: sample_finite(ks, tab, "free", n_samples=args.samples,
                                  seed=1, backend=name), args.repeat)
        res["sample_infinite"] = best_of(
            lambda: sample_infinite(dks, dk, gd, horizon=500,
                                    n_samples=args.samples, seed=1,
                                    backend=name), args.repeat)
        rows.append((name, res))

    keys = list(rows[0][1])
    width = max(len(k) for k in keys)
    print(f"{'kernel':<{width}}  {'compiled':>10}  {'python':>10}  speedup")
    for k in keys:
        tc, tp = rows[0][1][k], rows[1][1][k]
        print(f"{k:<{width}}  {tc:10.4f}  {tp:10.4f}  {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
