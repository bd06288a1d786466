"""Time the numba and numpy kernel backends on the same inputs.

    python3 benchmarks/bench_backends.py [--resolution 1/512]

The end-to-end rows run a level-set extraction in a subprocess per backend,
because the backend is chosen once at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from plessner_lab.funcorpus import corpus_get
from plessner_lab.geometry import cover_region, quasi_full
from plessner_lab.kernels import REGION_DISC, numba_impl, numpy_impl
from plessner_lab.levelset import LevelMesh, LevelTarget


def best_of(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def kernel_inputs(resolution):
    region = quasi_full(0.2)
    cover = cover_region(region, resolution)
    mesh = LevelMesh(cover)
    fn = corpus_get("identity")
    v, _ = fn.evaluate(mesh.vertex_xy)
    g = LevelTarget.circle(0, 0.7).g(v)
    vsign = g > 0
    counts = numpy_impl.crossing_counts(mesh.ptr, mesh.vid, vsign)
    center = np.ones(counts.shape[0], dtype=bool)
    sa, sb, _ = numpy_impl.pair_crossings(mesh.ptr, mesh.vid, mesh.eid, vsign, center)
    edges = np.unique(np.concatenate([sa, sb]))
    na, nb = np.searchsorted(edges, sa), np.searchsorted(edges, sb)
    z = mesh.vertex_xy
    _, p = region._kernel_params()
    e = np.zeros(0)
    return {
        "pairwise_sum": lambda impl: impl.pairwise_sum(np.abs(z)),
        "region_phi": lambda impl: impl.region_phi(z.real, z.imag, REGION_DISC, p, e, e, e),
        "crossing_counts": lambda impl: impl.crossing_counts(mesh.ptr, mesh.vid, vsign),
        "pair_crossings": lambda impl: impl.pair_crossings(mesh.ptr, mesh.vid, mesh.eid, vsign, center),
        "walk_chains": lambda impl: impl.walk_chains(edges.size, na, nb),
    }, cover.n_cells


END_TO_END = r"""
import json, time
from plessner_lab import BACKEND
from plessner_lab.funcorpus import corpus_get
from plessner_lab.geometry import quasi_full
from plessner_lab.levelset import LevelField, LevelTarget
fn = corpus_get("identity")
t = time.perf_counter()
field = LevelField(fn, quasi_full(0.2), {res})
t_build = time.perf_counter() - t
field.extract(LevelTarget.circle(0, 0.7))  # warm-up (jit)
t = time.perf_counter()
for r in (0.3, 0.5, 0.7):
    field.extract(LevelTarget.circle(0, r))
print(json.dumps({{"backend": BACKEND, "build": t_build, "extract": (time.perf_counter() - t) / 3}}))
"""


def end_to_end(resolution):
    rows = []
    for flag in ("1", "0"):
        env = dict(os.environ, PLESSNER_LAB_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", END_TO_END.format(res=resolution)], env=env,
                             capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--resolution", default="1/512")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    res = float(Fraction(args.resolution))
    cases, n_cells = kernel_inputs(res)
    print(f"quasi-full disc, eps=0.2, resolution {args.resolution}: {n_cells} cells")
    if numba_impl is None:
        print("numba backend disabled (PLESSNER_LAB_NUMBA=0); timing numpy only")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, call in cases.items():
        t_np = best_of(lambda: call(numpy_impl), args.repeat)
        if numba_impl is not None:
            call(numba_impl)  # compile
            t_nb = best_of(lambda: call(numba_impl), args.repeat)
            print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<18}{t_np:>12.4f}{'-':>12}{'-':>10}")
    print()
    print(f"{'end-to-end':<18}{'mesh build [s]':>16}{'extract [s]':>14}")
    for row in end_to_end(res):
        print(f"{row['backend']:<18}{row['build']:>16.3f}{row['extract']:>14.3f}")


if __name__ == "__main__":
    main()
