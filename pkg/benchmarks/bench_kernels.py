"""Compare the numba and pure-numpy kernels on memory-state sized inputs.

    python benchmarks/bench_kernels.py [--max-n 7] [--repeat 5]

Reports the best-of-``repeat`` wall time per call for the per-qubit channel
kernel and the partial-trace kernel, plus an end-to-end ``store`` with each
backend (run in a subprocess with ``PSARNOISE_DISABLE_NUMBA`` set or not).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from psarnoise import _accel
from psarnoise.channel import NoiseModel, noisy_phase_gate


def best_time(fn, repeat):
    fn()  # warm-up / JIT compile
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(max_n, repeat):
    rng = np.random.default_rng(0)
    kraus = noisy_phase_gate(NoiseModel.depolarizing(0.5), 0.3).stacked()
    for n in range(2, max_n + 1):
        dim = 2**n * (n + 1)
        rho = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        left, right = 2 ** (n // 2), dim // (2 ** (n // 2) * 2)
        t_np = best_time(lambda: _accel.local_channel_numpy(rho, kraus, left, right), repeat)
        t_nb = best_time(lambda: _accel.local_channel_numba(rho, kraus, left, right), repeat)
        yield "local_channel", n, dim, t_np, t_nb
        t4 = rho.reshape(2**n, n + 1, 2**n, n + 1)
        t_np = best_time(lambda: _accel.partial_trace_numpy(t4), repeat)
        t_nb = best_time(lambda: _accel.partial_trace_numba(t4), repeat)
        yield "partial_trace", n, dim, t_np, t_nb


STORE_SNIPPET = (
    "import timeit;from psarnoise.psar import store;from psarnoise.channel import NoiseModel;"
    "f=lambda: store({n}, NoiseModel.depolarizing(0.5), 0.3);f();"
    "print(min(timeit.repeat(f, number=1, repeat={repeat})))"
)


def store_time(n, repeat, disable):
    env = dict(os.environ, PSARNOISE_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", STORE_SNIPPET.format(n=n, repeat=repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-n", type=int, default=7)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not _accel.HAS_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    print(f"{'kernel':<14} {'n':>2} {'dim':>6} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8}")
    for name, n, dim, t_np, t_nb in kernel_rows(args.max_n, args.repeat):
        print(f"{name:<14} {n:>2} {dim:>6} {t_np:>11.3e} {t_nb:>11.3e} {t_np / t_nb:>8.2f}")
    print()
    print(f"{'store end-to-end':<17} {'n':>2} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8}")
    for n in range(3, args.max_n + 1, 2):
        t_np = store_time(n, args.repeat, disable=True)
        t_nb = store_time(n, args.repeat, disable=False)
        print(f"{'store':<17} {n:>2} {t_np:>11.3e} {t_nb:>11.3e} {t_np / t_nb:>8.2f}")


if __name__ == "__main__":
    main()
