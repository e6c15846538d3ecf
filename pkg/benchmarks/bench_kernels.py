"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--end-to-end]

Each kernel is called on the same inputs through both backends; the table
shows the best-of-N time per call and the speedup. ``--end-to-end`` also
times a full ``pi_norm_lb`` run under each backend in a fresh interpreter.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from opideal.kernels import available_backends, load_backend


def cases(rng):
    d, k = 4, 8
    X = rng.standard_normal((k, d))
    logc = rng.standard_normal(k)
    x = rng.standard_normal(d)
    w = np.ones(d)
    G = rng.standard_normal((6, 2 * d))
    V = np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T
    return {
        "lr_norm r=3": lambda m: m.lr_norm(x, 3.0, w),
        "norming r=3": lambda m: m.norming(x, 3.0, w),
        "log_power_sum": lambda m: m.log_power_sum(X, logc, 2.5, x),
        "power_sum_grad": lambda m: m.power_sum_grad(X, logc, 2.5, x, 1e-8),
        "vertex sums (16 vertices)": lambda m: m.vertex_log_power_sums(X, logc, 2.0, V),
        "min-norm weights (6 dirs)": lambda m: m.min_norm_weights(G @ G.T, 500),
        "ascend 200 iterations": lambda m: m.ascend_power_sum(
            X, logc, 1.5, 2.0, w, 2.0, w, x, 200, 0.5, 0.97, 1e-8),
    }


def bench(repeat):
    rng = np.random.default_rng(0)
    backends = {name: load_backend(name) for name in available_backends()}
    if "cython" not in backends:
        print("compiled backend not built; only the numpy fallback is available")
    print(f"{'kernel':28s}" + "".join(f"{b:>14s}" for b in backends) + "     speedup")
    for name, fn in cases(rng).items():
        times = {}
        for b, mod in backends.items():
            n = 200
            times[b] = min(timeit.repeat(lambda: fn(mod), number=n, repeat=repeat)) / n
        row = f"{name:28s}" + "".join(f"{times[b] * 1e6:11.2f} us" for b in backends)
        if len(times) == 2:
            row += f"   {times['python'] / times['cython']:8.1f}x"
        print(row)


SCRIPT = (
    "import time, opideal as o\n"
    "u = o.Operator.identity(o.NormedSpace(3, 2))\n"
    "t = time.perf_counter()\n"
    "r = o.pi_norm_lb(u, o.SummingParams(2, 2, 0.3), k_max=3, config=o.SearchConfig(restarts=4, iterations=100))\n"
    "print(o.BACKEND, r.value, time.perf_counter() - t)\n"
)


def end_to_end():
    for pure in ("0", "1"):
        env = dict(os.environ, OPIDEAL_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
        backend, value, secs = out.stdout.split()
        print(f"pi_norm_lb identity l_2^3 [{backend:6s}]  value {float(value):.12f}  {float(secs):7.2f} s")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    bench(args.repeat)
    if args.end_to_end:
        end_to_end()
    return 0


if __name__ == "__main__":
    sys.exit(main())
