"""Compare the numba and numpy kernel backends on representative workloads.

Each backend runs in its own interpreter because the choice is fixed at
import time by IRSBANDITS_BACKEND.  Usage::

    python benchmarks/bench_backends.py [--episodes 200] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from irsbandits import kernels
from irsbandits.bayes import bernoulli_instance
from irsbandits.bounds import w_irs_vzero, w_irs_vemax
from irsbandits.harness import simulate
from irsbandits.random_cost import two_arm_instance

episodes, repeat = int(sys.argv[1]), int(sys.argv[2])
k2 = bernoulli_instance((10, 20), 500)
rc = two_arm_instance(500)
jobs = {
    "simulate irs_vzero B=500": lambda: simulate(k2, "irs_vzero", episodes, 1),
    "simulate irs_index B=500": lambda: simulate(k2, "irs_index", episodes, 1),
    "simulate irs_vemax B=200": lambda: simulate(k2.with_budget(200), "irs_vemax", episodes // 4, 1),
    "simulate irs_vzero_pext B=500": lambda: simulate(rc, "irs_vzero_pext", episodes, 1),
    "bound irs_vzero 20000 samples": lambda: w_irs_vzero(k2, 20000, np.random.default_rng(1)),
    "bound irs_vemax 500 samples B=100": lambda: w_irs_vemax(k2.with_budget(100), 500,
                                                           np.random.default_rng(1)),
}
out = {"backend": kernels.BACKEND, "seconds": {}}
for name, job in jobs.items():
    job()  # compile / warm caches
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        job()
        best = min(best, time.perf_counter() - t0)
    out["seconds"][name] = best
print(json.dumps(out))
"""


def run_backend(backend, episodes, repeat):
    env = dict(os.environ, IRSBANDITS_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", WORKER, str(episodes), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--episodes", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    results = {b: run_backend(b, args.episodes, args.repeat) for b in ("numba", "numpy")}
    names = list(results["numba"]["seconds"])
    width = max(len(n) for n in names)
    print(f"{'workload':<{width}}  {'numba s':>9}  {'numpy s':>9}  {'speedup':>8}")
    for name in names:
        a, b = results["numba"]["seconds"][name], results["numpy"]["seconds"][name]
        print(f"{name:<{width}}  {a:9.3f}  {b:9.3f}  {b / a:8.1f}x")
    if results["numpy"]["backend"] != "numpy":
        print("warning: numpy backend was not selected", file=sys.stderr)


if __name__ == "__main__":
    main()
