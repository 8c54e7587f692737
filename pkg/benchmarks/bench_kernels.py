"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json]

Kernel timings are per call on a batch of points; the end-to-end rows
run a geodesic shot in a subprocess with each backend selected.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from sjlab import _kernels_py, kernels
from sjlab import jacobi as jc
from sjlab import siegel as sg

SHOT = """
import time
from sjlab import jacobi as jc, riemann as rm, siegel as sg, kernels
g = jc.jacobi_metric_field(1, 1)
p = jc.SiegelJacobiPoint.origin(1, 1)
q = jc.SiegelJacobiPoint(sg.SiegelPoint.from_omega([[2j]]), [[0.3 + 0.1j]])
t = time.perf_counter()
rm.geodesic_shoot_bvp(g, p.chart(), q.chart())
print(kernels.BACKEND, time.perf_counter() - t)
"""


def cases(batch):
    rng = np.random.default_rng(0)
    S2 = np.array([sg.random_siegel_point(rng, 2).chart() for _ in range(batch)])
    S3 = np.array([sg.random_siegel_point(rng, 3).chart() for _ in range(batch)])
    J21 = np.array([jc.random_siegel_jacobi_point(rng, 2, 1).chart() for _ in range(batch)])
    d = J21.shape[1]
    A = rng.normal(size=(batch, d, d))
    ginv = np.einsum("pij,pkj->pik", A, A) + np.eye(d)
    dg = rng.normal(size=(batch, d, d, d))
    dg = np.ascontiguousarray(dg + dg.transpose(0, 1, 3, 2))
    return {
        "siegel_metric n=2": lambda b: b.siegel_metric_batch(S2, 2, 1.0),
        "siegel_metric n=3": lambda b: b.siegel_metric_batch(S3, 3, 1.0),
        "jacobi_metric n=2 m=1": lambda b: b.jacobi_metric_batch(J21, 2, 1, 1.0, 1.0),
        "christoffel_contract d=10": lambda b: b.christoffel_contract(ginv, dg),
    }


def end_to_end():
    out = {}
    for label, env in (("compiled", {}), ("python", {"SJLAB_PURE_PYTHON": "1"})):
        proc = subprocess.run([sys.executable, "-c", SHOT], capture_output=True, text=True,
                              env={**os.environ, **env}, check=True)
        name, secs = proc.stdout.split()
        out[label] = (name, float(secs))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    backs = {b.BACKEND: b for b in kernels.backends()}
    if "cython" not in backs:
        print("compiled kernels unavailable; only the python backend will be timed", file=sys.stderr)
    rows = []
    for name, fn in cases(args.batch).items():
        row = {"kernel": name, "batch": args.batch}
        for label, b in backs.items():
            t = min(timeit.repeat(lambda: fn(b), number=3, repeat=args.repeat)) / 3
            row[label] = t
        if "cython" in row:
            np.testing.assert_allclose(fn(backs["cython"]), fn(_kernels_py), rtol=1e-10, atol=1e-12)
            row["speedup"] = row["python"] / row["cython"]
        rows.append(row)
    e2e = end_to_end()

    if args.json:
        print(json.dumps({"kernels": rows, "shoot": e2e}, indent=2))
        return
    print(f"{'kernel':28s} {'python':>11s} {'cython':>11s} {'speedup':>8s}")
    for r in rows:
        cy = f"{r['cython'] * 1e3:9.3f}ms" if "cython" in r else "        n/a"
        sp = f"{r['speedup']:7.1f}x" if "speedup" in r else "     n/a"
        print(f"{r['kernel']:28s} {r['python'] * 1e3:9.3f}ms {cy} {sp}")
    print()
    for label, (name, secs) in e2e.items():
        print(f"jacobi shot ({label:8s} -> backend {name}): {secs:.3f}s")


if __name__ == "__main__":
    main()
