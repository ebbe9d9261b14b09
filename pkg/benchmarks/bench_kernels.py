"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R] [--json PATH]

Each case runs on both backends with the same inputs; outputs are checked
for equality before the timings are reported.
"""
import argparse
import json
import sys
import time

import numpy as np

from rwre import _backend
from rwre.environment import law_from_spec
from rwre.estimator import ingest
from rwre.resampler import extract_pair
from rwre.walker import annealed_oracle, simulate_quenched, simulate_quenched_batch, simulate_reinforced

LAW = law_from_spec([[1], [-1]], {"kind": "dirichlet", "alphas": [2, 1]})


def cases(steps):
    source = simulate_quenched(LAW, 1, steps)
    runs = max(1, steps // 4)
    return {
        "quenched_walk": lambda b: simulate_quenched(LAW, 2, steps, backend=b).index,
        "quenched_batch": lambda b: simulate_quenched_batch(LAW, 3, runs, 4, backend=b),
        "reinforced_walk": lambda b: simulate_reinforced(annealed_oracle(LAW), LAW.jumps, 4, steps,
                                                         backend=b).index,
        "ingest": lambda b: ingest(source, backend=b).data,
        "replica_pair": lambda b: extract_pair(ingest(source, backend=b), backend=b)[0].trajectory.index,
    }


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--json", help="also write the results here")
    args = p.parse_args(argv)

    backends = _backend.available()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension to compare", file=sys.stderr)
    rows = []
    for name, fn in cases(args.steps).items():
        timings, outputs = {}, []
        for b in backends:
            t, out = best_of(lambda: fn(b), args.repeat)
            timings[b] = t
            outputs.append(np.asarray(out))
        same = all(np.array_equal(outputs[0], o) for o in outputs[1:])
        rows.append({"case": name, "seconds": timings, "identical": same})

    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends) + "   speedup  identical")
    for r in rows:
        secs = [r["seconds"][b] for b in backends]
        speed = f"{secs[-1] / secs[0]:8.1f}x" if len(secs) > 1 else "       -"
        print(f"{r['case']:<{width}}  " + "  ".join(f"{s:11.4f}s" for s in secs) + f"  {speed}  {r['identical']}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"steps": args.steps, "backends": backends, "results": rows}, fh, indent=2)
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
