"""Time the water-filling kernels on the compiled and pure-Python backends.

Run ``python benchmarks/bench_kernels.py [--repeat 5]``. Each row reports the
best per-call time of a public entry point with the backend pinned, plus the
largest absolute difference between the two backends' outputs.
"""

import argparse
import timeit

import numpy as np

from crspec._kernels import available_backends
from crspec.waterfill import price_wf_batch, solve_a1, solve_multi_mu, standard_wf


def _cases(rng):
    lam8 = np.sort(rng.exponential(size=8))[::-1] + 1e-3
    alpha8 = rng.exponential(0.1, size=8)
    lam4 = np.sort(rng.exponential(size=4))[::-1] + 1e-3
    A = rng.exponential(0.1, size=(3, 4))
    lam_b = rng.exponential(size=(64, 2)) + 1e-3
    alpha_b = rng.exponential(0.1, size=(64, 2))
    return {
        "standard_wf (M=8)": lambda b: standard_wf(lam8, 10.0, backend=b).sigma,
        "solve_a1 (M=8)": lambda b: solve_a1(lam8, alpha8, 10.0, 0.1, backend=b).sigma,
        "solve_multi_mu (M=4, K=3)": lambda b: solve_multi_mu(lam4, A, 10.0, [0.1, 0.05, 0.2], backend=b).sigma,
        "price_wf_batch (64 tones)": lambda b: price_wf_batch(lam_b, alpha_b, 0.5, 0.1, backend=b)[0],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    cases = _cases(np.random.default_rng(args.seed))
    print(f"backends: {', '.join(backends)}")
    head = f"{'kernel':28s}" + "".join(f"{b + ' us':>12s}" for b in backends)
    if len(backends) > 1:
        head += f"{'speedup':>9s}{'max diff':>11s}"
    print(head)
    for name, fn in cases.items():
        times = {}
        for b in backends:
            t = timeit.Timer(lambda: fn(b))
            n, _ = t.autorange()
            times[b] = min(t.repeat(args.repeat, n)) / n * 1e6
        line = f"{name:28s}" + "".join(f"{times[b]:12.1f}" for b in backends)
        if len(backends) > 1:
            diff = np.max(np.abs(np.asarray(fn("cython")) - np.asarray(fn("python"))))
            line += f"{times['python'] / times['cython']:8.1f}x{diff:11.1e}"
        print(line)


if __name__ == "__main__":
    main()
