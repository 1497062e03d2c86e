"""Compare the numba and numpy kernel backends.

Times the batch kernels on synthetic inputs and one full decentralized run.
Usage: python benchmarks/bench_kernels.py [--agents N] [--products P] [--repeat R]
"""

import argparse
import time

import numpy as np

from flowecon import kernels
from flowecon.markets import parse_config, run_decentralized


def _best(fn, repeat):
    fn()  # warm-up (triggers numba compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(agents, products, repeat):
    rng = np.random.default_rng(0)
    n = rng.uniform(0.5, 3.0, (agents, products))
    w = np.c_[np.ones(agents), rng.uniform(0.5, 2.0, (agents, products - 1))]
    perm = rng.permutation(agents)
    ia, ib = perm[0::2], perm[1::2]
    forced = np.full(ia.size, -1)
    proc_in = np.array([[0, -1], [1, -1]])
    proc_rate = np.array([[0.5, 0.0], [0.5, 0.0]])
    proc_out = np.array([1, 0])
    allowed = np.ones((agents, 2), dtype=bool)
    cfg = parse_config("steady_5_3").with_overrides(n_agents=agents)

    rows = []
    for name in kernels.available_backends():
        kernels.set_backend(name)
        g, h = kernels.ces_derivatives(n, w, 0.5)
        rows.append((name, {
            "derivatives": _best(lambda: kernels.ces_derivatives(n, w, 0.5), repeat),
            "barter_choice": _best(lambda: kernels.barter_choice(g, h, n, ia, ib, forced), repeat),
            "metabolism_choice": _best(lambda: kernels.metabolism_choice(
                g, h, n, proc_in, proc_rate, proc_out, allowed), repeat),
            "run_200_steps": _best(lambda: run_decentralized(cfg), max(1, repeat // 10)),
        }))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--agents", type=int, default=10_000)
    ap.add_argument("--products", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    prev = kernels.backend()
    try:
        rows = bench(args.agents, args.products, args.repeat)
    finally:
        kernels.set_backend(prev)
    keys = list(rows[0][1])
    print("N=%d P=%d (best of %d; times in ms)" % (args.agents, args.products, args.repeat))
    print("%-20s" % "kernel" + "".join("%12s" % name for name, _ in rows))
    for k in keys:
        print("%-20s" % k + "".join("%12.3f" % (1e3 * r[k]) for _, r in rows))


if __name__ == "__main__":
    main()
