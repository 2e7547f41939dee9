"""Replication-loop throughput: numba kernel vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--horizon 10000] [--reps 5]

Both backends are fed identical reward tapes; the script checks that their
outputs agree before reporting timings.  The numba time excludes the first
(compiling) call.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from sparse_ucb import _kernels as K
from sparse_ucb.experiment import geometric_checkpoints, replication_rng
from sparse_ucb.instance import equal_gap_instance, reward_tape


def _time(fn, reps):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()

    inst = equal_gap_instance(15, 7, 0.9, 0.25)
    T = args.horizon
    tape = reward_tape(inst, T, replication_rng(0, 0))
    ckpt = geometric_checkpoints(T)
    backends = ["numpy"] + (["numba"] if K.HAVE_NUMBA else [])

    print(f"d={inst.d} s={inst.s} T={T}, best of {args.reps}")
    print(f"{'policy':<11}{'backend':<8}{'seconds':>10}{'rounds/s':>14}")
    for name, policy in (("ucb", K.POLICY_UCB), ("sparse-ucb", K.POLICY_SPARSE_UCB)):
        run = {
            b: (lambda b=b: K.run_policy(policy, tape, inst.gaps, inst.good, 0, inst.s, T, ckpt, backend=b))
            for b in backends
        }
        if "numba" in run:
            run["numba"]()  # compile
        results = {}
        for b in backends:
            sec, results[b] = _time(run[b], args.reps)
            print(f"{name:<11}{b:<8}{sec:>10.4f}{T / sec:>14,.0f}")
        if "numba" in results:
            same = all(np.array_equal(x, y) for x, y in zip(results["numpy"], results["numba"]))
            print(f"{'':<11}outputs identical: {same}")


if __name__ == "__main__":
    main()
