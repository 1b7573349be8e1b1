"""Benchmark the compiled clearing kernel against the numpy reference.

Times both kernels on the same batch of market-clearing instances (the
bundled 3-bus system, congested and uncongested, under random bid profiles)
and checks that they return identical results while timing them.

Usage:
    python benchmarks/bench_clearing.py [--profiles 500] [--repeat 3]
"""
import argparse
import time

import numpy as np

from cournotla._kernel import python_kernel
from cournotla.dispatch import clear_market
from cournotla.model import BidProfile, threebus
from cournotla.ptdf import compute_ptdf

try:
    from cournotla._kernel._active_set_cy import solve_clearing as cython_kernel
except ImportError:
    cython_kernel = None


def build_instances(profiles, seed):
    """Kernel-level (w, v, a, f0, cap, total) tuples for random bid profiles."""
    instances = []
    rng = np.random.default_rng(seed)
    for congested in (False, True):
        sc = threebus(congested=congested)
        ptdf = compute_ptdf(sc.network)
        w = np.array([c.w for c in sc.consumers])
        v = np.array([c.v for c in sc.consumers])
        nodes = np.array([c.node for c in sc.consumers])
        bounded = [i for i, ln in enumerate(sc.network.lines) if ln.capacity is not None]
        a = ptdf[bounded][:, nodes] if bounded else np.zeros((0, len(sc.consumers)))
        cap = np.array([sc.network.lines[i].capacity for i in bounded], float)
        for _ in range(profiles):
            bids = rng.uniform(0.0, 2000.0, size=len(sc.suppliers))
            inj = np.zeros(sc.network.bus_count)
            for s, g in zip(sc.suppliers, bids):
                inj[s.node] += g
            f0 = ptdf[bounded] @ inj if bounded else np.zeros(0)
            instances.append((w, v, a, f0, cap, float(inj.sum())))
    return instances


def run(kernel, instances):
    t0 = time.perf_counter()
    results = [kernel(*inst) for inst in instances]
    return time.perf_counter() - t0, results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--profiles", type=int, default=500,
                        help="random bid profiles per system variant")
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    instances = build_instances(args.profiles, args.seed)
    print(f"{len(instances)} clearing instances "
          f"({args.profiles} uncongested + {args.profiles} congested)")

    py = python_kernel()
    t_py = min(run(py, instances)[0] for _ in range(args.repeat))
    _, ref = run(py, instances)
    print(f"python kernel: {t_py:.3f} s best of {args.repeat} "
          f"({t_py / len(instances) * 1e6:.1f} us/clear)")

    if cython_kernel is None:
        print("cython kernel: not built (pip install -e . with Cython available)")
        return

    t_cy = min(run(cython_kernel, instances)[0] for _ in range(args.repeat))
    _, out = run(cython_kernel, instances)
    print(f"cython kernel: {t_cy:.3f} s best of {args.repeat} "
          f"({t_cy / len(instances) * 1e6:.1f} us/clear)")
    print(f"speedup: {t_py / t_cy:.1f}x")

    mismatches = 0
    for (s_a, d_a, lam_a, mu_a), (s_b, d_b, lam_b, mu_b) in zip(ref, out):
        if s_a != s_b or not np.allclose(d_a, d_b, atol=1e-8) \
                or abs(lam_a - lam_b) > 1e-8 or not np.allclose(mu_a, mu_b, atol=1e-8):
            mismatches += 1
    print(f"agreement: {len(instances) - mismatches}/{len(instances)} identical results")

    # end-to-end sanity number: one full clear_market call through the
    # selected kernel, dominated by the kernel on the congested system
    sc = threebus(congested=True)
    bids = BidProfile({"s1": 781.0, "s2": 1268.0, "s3": 645.0})
    t0 = time.perf_counter()
    n = 200
    for _ in range(n):
        clear_market(sc.network, bids, sc.suppliers, sc.consumers)
    dt = (time.perf_counter() - t0) / n
    print(f"clear_market end to end (congested): {dt * 1e6:.1f} us/call")


if __name__ == "__main__":
    main()
