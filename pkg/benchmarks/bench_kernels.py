"""Time the compiled kernels against the pure-Python fallback.

Run twice:

    python3 benchmarks/bench_kernels.py
    SWITCHLAB_NO_NUMBA=1 python3 benchmarks/bench_kernels.py

The backend is chosen at import time from the environment, so the
comparison needs two processes.
"""

import time

import numpy as np

from switchlab._kernels import backend, planar_endpoint
from switchlab.core import SystemParams
from switchlab.simulate import Exponential, estimate_chi_mc
from switchlab.tail import DecenteredSystem, yn_chain


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def bench(label, fn, repeats=3):
    fn()  # warm-up (includes jit compilation on the numba path)
    best = min(_timed(fn) for _ in range(repeats))
    print(f"{label:42s} {best * 1e3:10.2f} ms   [{backend()}]")


def main():
    params = SystemParams(a=0.15, b=3.0, beta=2.0, u=0.5)
    law = Exponential.from_params(params)

    waits = np.random.default_rng(0).standard_exponential(200_000)
    bench(
        "planar_endpoint, 200k segments",
        lambda: planar_endpoint(waits, 0, 1.0, 0.0, 0.15, 3.0, 1e12, 0.0, 0.0),
    )
    bench(
        "estimate_chi_mc, T=2e3 x 16 replicas",
        lambda: estimate_chi_mc(params, law, T=2e3, replicas=16, seed=0),
    )
    sysd = DecenteredSystem(
        A0=np.array([[-0.1, 2.0], [-0.5, -0.1]]),
        A1=np.array([[-0.1, 0.5], [-2.0, -0.1]]),
        b0=np.array([1.0, 0.0]),
        b1=np.array([-1.0, 0.0]),
        lam0=0.25,
        lam1=0.25,
    )
    bench(
        "yn_chain, 100k two-phase steps",
        lambda: yn_chain(sysd, np.zeros(2), 100_000, seed=0),
    )


if __name__ == "__main__":
    main()
