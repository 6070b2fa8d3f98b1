"""Compiled kernel vs pure-Python fallback on the same scenarios.

Each path runs in its own interpreter because the switch is read at import
time.  Reports best-of-k wall time per scenario and checks that both paths
produce the same trace digest.

    python3 benchmarks/bench_kernel.py [--repeat 3] [--quick]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_CHILD = r"""
import json, sys, time
from adrsim import JIT_ENABLED, Scenario, run
cases = json.loads(sys.argv[1]); repeat = int(sys.argv[2])
run(Scenario(n_devices=2, sim_duration_s=3600.0))  # compile or warm caches outside the timing
out = {}
for name, fields in cases.items():
    s = Scenario(**fields)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = run(s)
        best = min(best, time.perf_counter() - t0)
    out[name] = {"seconds": best, "digest": trace.digest(), "uplinks": len(trace.uplinks)}
print(json.dumps({"jit": JIT_ENABLED, "results": out}))
"""

CASES = {
    "lone device, 12 days": dict(n_devices=1, sim_duration_s=12 * 86_400.0, sigma_db=3.57),
    "100 devices, 1 day": dict(n_devices=100, sim_duration_s=86_400.0, sigma_db=1.785),
    "300 devices, 1 day, confirmed": dict(n_devices=300, sim_duration_s=86_400.0, confirmed_fraction=1.0),
}


def _measure(disable_jit: bool, cases: dict, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("ADRSIM_DISABLE_JIT", None)
    if disable_jit:
        env["ADRSIM_DISABLE_JIT"] = "1"
    proc = subprocess.run(
        [sys.executable, "-c", _CHILD, json.dumps(cases), str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="only the smallest scenario")
    args = ap.parse_args()
    cases = dict(list(CASES.items())[:1]) if args.quick else CASES

    fast = _measure(False, cases, args.repeat)
    slow = _measure(True, cases, 1)
    print(f"{'scenario':34s} {'uplinks':>8s} {'numba s':>9s} {'python s':>9s} {'speedup':>8s}  digest")
    for name in cases:
        f, s = fast["results"][name], slow["results"][name]
        same = "match" if f["digest"] == s["digest"] else "DIFFER"
        print(f"{name:34s} {f['uplinks']:8d} {f['seconds']:9.3f} {s['seconds']:9.3f} {s['seconds'] / f['seconds']:7.1f}x  {same}")


if __name__ == "__main__":
    main()
