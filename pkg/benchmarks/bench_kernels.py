"""Compare the compiled and NumPy kernels on the hot loops.

Runs the Gauss series on argument arrays of increasing size and the
Taylor march across (0, 1), checks both implementations agree, and
prints best-of-``repeat`` wall times with the speedup.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import sys
import timeit

import numpy as np

from tracehardy.kernels import available


def _cases():
    rng = np.random.default_rng(0)
    for size in (10, 1_000, 100_000):
        z = rng.uniform(-0.9, 0.9, size)
        yield (f"gauss_series[{size}]", "gauss_series",
               (0.7, 1.3, 2.1, z), {})
    yield ("gauss_series[z~0.99]", "gauss_series",
           (0.4, 0.9, 1.7, np.linspace(0.95, 0.99, 200)), {})
    targets = np.linspace(0.05, 0.95, 400)
    yield ("ode_march[400]", "ode_march",
           (0.6, 1.1, 1.8, 0.01, 1.0, 0.3667, targets), {})


def run(repeat=5):
    impls = available()
    rows = []
    for label, fn, args, kw in _cases():
        times, results = {}, {}
        for name, mod in impls.items():
            f = getattr(mod, fn)
            results[name] = f(*args, **kw)
            times[name] = min(timeit.repeat(lambda: f(*args, **kw),
                                            number=1, repeat=repeat))
        ref = np.asarray(results["python"][0])
        dev = max((float(np.max(np.abs(np.asarray(r[0]) - ref)
                                / np.maximum(np.abs(ref), 1e-300)))
                   for r in results.values()), default=0.0)
        row = {"case": label, "max_rel_diff": dev,
               **{f"{k}_s": v for k, v in times.items()}}
        if "cython" in times:
            row["speedup"] = times["python"] / times["cython"]
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None, help="also write results here")
    args = ap.parse_args(argv)
    rows = run(args.repeat)
    if "cython_s" not in rows[0]:
        print("compiled kernels not built; timing the fallback only",
              file=sys.stderr)
    print(f"{'case':24s} {'python [s]':>12s} {'cython [s]':>12s} "
          f"{'speedup':>8s} {'max rel diff':>13s}")
    for r in rows:
        print(f"{r['case']:24s} {r['python_s']:12.3e} "
              f"{r.get('cython_s', float('nan')):12.3e} "
              f"{r.get('speedup', float('nan')):8.1f} {r['max_rel_diff']:13.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
