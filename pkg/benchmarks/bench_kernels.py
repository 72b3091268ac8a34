"""Time the hot kernels with numba on and off.

    python benchmarks/bench_kernels.py [--repeat 3]

Each backend runs in its own interpreter because the switch is read at import.
The compiled timings exclude the first (compiling) call.
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r'''
import json, sys, time
import numpy as np
from openkpz import _jit
from openkpz.asep_model import AsepParams, liggett_params, weak_asymmetry_params
from openkpz.asep_dynamics import simulate, coupled_simulate, she_martingale_residual
from openkpz.mpa import usw_rep, mpa_sample
from openkpz.kpz_stationary import sample_stationary
from openkpz.askey_wilson import AwProcessSpec, multitime_expectation

repeat = int(sys.argv[1])
p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 32)
lo, hi = liggett_params(0.5, 0.3, 0.4, 16), liggett_params(0.5, 0.6, 0.5, 16)
rep = usw_rep(weak_asymmetry_params(64, 1.0, 1.0), 66)
spec = AwProcessSpec.from_asep(weak_asymmetry_params(16, 1.0, 1.0))
cases = {
    "simulate (N=32, t=2000)": lambda: simulate(p, 2000.0, seed=1, record_events=False),
    "coupled (N=16, t=2000)": lambda: coupled_simulate(lo, hi, 2000.0, seed=1, record_events=False),
    "she replicas (N=4, 500 runs)": lambda: she_martingale_residual(liggett_params(0.5, 0.5, 0.5, 4), 500, 1.0, seed=1),
    "mpa_sample (N=64, 2000)": lambda: mpa_sample(rep, 64, 2000, seed=1),
    "kpz paths (4096 x 1024)": lambda: sample_stationary(1.0, 1.0, n_paths=4096, seed=1),
    "aw 3-time quadrature": lambda: multitime_expectation(spec, (0.9, 1.0, 1.1), panels=24, order=12),
}
out = {}
for name, fn in cases.items():
    fn()  # warm-up; compiles under numba
    ts = []
    for _ in range(repeat):
        s = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - s)
    out[name] = min(ts)
json.dump({"numba": _jit.NUMBA_ENABLED, "times": out}, sys.stdout)
'''


def run_backend(disable, repeat):
    env = dict(os.environ)
    env.pop("OPENKPZ_DISABLE_NUMBA", None)
    if disable:
        env["OPENKPZ_DISABLE_NUMBA"] = "1"
    r = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                       check=True)
    return json.loads(r.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    t0 = time.perf_counter()
    jit = run_backend(False, args.repeat)
    pure = run_backend(True, args.repeat)
    print(f"{'kernel':32s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, tj in jit["times"].items():
        tp = pure["times"][name]
        print(f"{name:32s} {tj:10.4f} {tp:10.4f} {tp / tj:8.1f}x")
    print(f"total wall time {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
