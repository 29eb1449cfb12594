"""Compiled kernels versus the pure-numpy fallback.

Each mode runs in its own interpreter because STARE_DISABLE_JIT is read at
import time. The compiled timing excludes the first (compiling) call.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
from stare._jit import HAVE_NUMBA
from stare.integrator import IntegrationConfig, run_protocol
from stare.microscopic import CompositeParams, run_composite
from stare.schedules import SweepSpec

repeat = int(sys.argv[1])
cfg = IntegrationConfig(rtol=1e-8, atol=1e-10, output_grid=11)
jobs = {
    "qubit_os": lambda: run_protocol(SweepSpec(10.0, 30.0, -8.0, 8.0, "os"), config=cfg),
    "composite": lambda: run_composite(CompositeParams(x0=0.5, t_i=-5, t_f=5), cfg),
}
out = {"jit": HAVE_NUMBA}
for name, job in jobs.items():
    t = time.perf_counter()
    job()
    first = time.perf_counter() - t
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        job()
        best = min(best, time.perf_counter() - t)
    out[name] = {"first": first, "best": best}
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ)
    env.pop("STARE_DISABLE_JIT", None)
    if disable:
        env["STARE_DISABLE_JIT"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'workload':<12}{'numba (s)':>12}{'first call':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name in ("qubit_os", "composite"):
        f, s = fast[name], slow[name]
        print(f"{name:<12}{f['best']:>12.4f}{f['first']:>12.3f}{s['best']:>12.3f}"
              f"{s['best'] / f['best']:>9.0f}x")


if __name__ == "__main__":
    main()
