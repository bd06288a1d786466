"""The numba and numpy kernel paths must agree bit for bit."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from plessner_lab.funcorpus import corpus_get
from plessner_lab.geometry import StolzRegion, cover_region
from plessner_lab.kernels import REGION_BOX, REGION_DISC, REGION_HALFPLANE, numba_impl, numpy_impl
from plessner_lab.levelset import LevelMesh, LevelTarget

pytestmark = pytest.mark.skipif(numba_impl is None, reason="numba backend disabled")


@pytest.mark.parametrize("n", [0, 1, 2, 7, 128, 1000, 12345])
def test_pairwise_sum_bitwise(n):
    x = np.random.default_rng(n).normal(size=n) * 10.0 ** np.random.default_rng(n + 1).integers(-8, 8, n)
    assert numpy_impl.pairwise_sum(x) == numba_impl.pairwise_sum(x)


@pytest.mark.parametrize("kind,p", [
    (REGION_DISC, np.array([0.6, 0.8, 0.5, np.sqrt(0.75), 0.01])),
    (REGION_HALFPLANE, np.array([0.2, 0.5, np.sqrt(0.75), 0.01])),
    (REGION_BOX, np.array([0.0, 1.0, 0.01, 1.0])),
])
def test_region_phi_bitwise(kind, p):
    rng = np.random.default_rng(3)
    x, y = rng.uniform(-1, 1, 5000), rng.uniform(-1, 1, 5000)
    hx, hy, hr = np.array([0.1, 0.5]), np.array([0.2, 0.1]), np.array([0.05, 0.01])
    a = numpy_impl.region_phi(x, y, kind, p, hx, hy, hr)
    b = numba_impl.region_phi(x, y, kind, p, hx, hy, hr)
    assert np.array_equal(a, b)


def _mesh_inputs():
    cover = cover_region(StolzRegion.disc(0.3, 0.5, 0.01), 1 / 64)
    mesh = LevelMesh(cover)
    fn = corpus_get("blaschke", [0.3, 0.5j])
    v, _ = fn.evaluate(mesh.vertex_xy)
    vsign = LevelTarget.circle(0.1, 0.6).g(v) > 0
    return mesh, vsign


def test_marching_kernels_equal():
    mesh, vsign = _mesh_inputs()
    ca = numpy_impl.crossing_counts(mesh.ptr, mesh.vid, vsign)
    cb = numba_impl.crossing_counts(mesh.ptr, mesh.vid, vsign)
    assert np.array_equal(ca, cb) and ca.any()
    center = np.random.default_rng(0).random(ca.shape[0]) < 0.5
    pa = numpy_impl.pair_crossings(mesh.ptr, mesh.vid, mesh.eid, vsign, center)
    pb = numba_impl.pair_crossings(mesh.ptr, mesh.vid, mesh.eid, vsign, center)
    for u, v in zip(pa, pb):
        assert np.array_equal(u, v)
    edges = np.unique(np.concatenate([pa[0], pa[1]]))
    na, nb = np.searchsorted(edges, pa[0]), np.searchsorted(edges, pa[1])
    wa = numpy_impl.walk_chains(edges.size, na, nb)
    wb = numba_impl.walk_chains(edges.size, na, nb)
    for u, v in zip(wa, wb):
        assert np.array_equal(u, v)


def test_walk_chains_open_and_closed():
    # a path 0-1-2 and a triangle 3-4-5
    a = np.array([0, 1, 3, 4, 5])
    b = np.array([1, 2, 4, 5, 3])
    for impl in (numpy_impl, numba_impl):
        nodes, segs, nptr, sptr, closed = impl.walk_chains(6, a, b)
        assert closed.tolist() == [False, True]
        assert nodes[nptr[0]:nptr[1]].tolist() == [0, 1, 2]
        assert sorted(nodes[nptr[1]:nptr[2]].tolist()) == [3, 4, 5]
        assert sptr[-1] == 5


SCRIPT = r"""
import json
from plessner_lab import BACKEND
from plessner_lab.funcorpus import corpus_get
from plessner_lab.geometry import StolzRegion
from plessner_lab.levelset import LevelTarget, extract
from plessner_lab.quad import arc_integral, spencer_integral
fn = corpus_get("blaschke", [0.3, 0.5j])
r = StolzRegion.disc(0.3, 0.5, 0.01)
polys = extract(fn, r, LevelTarget.circle(0.1, 0.6), 1 / 128)
print(json.dumps({"backend": BACKEND,
                  "verts": [[[z.real, z.imag] for z in p.vertices.tolist()] for p in polys],
                  "arc": arc_integral(polys, fn).value,
                  "spencer": spencer_integral(fn, r, 1 / 128, threads=1).value}))
"""


def test_end_to_end_backends_identical():
    outs = {}
    for flag in ("1", "0"):
        env = dict(os.environ, PLESSNER_LAB_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
        d = json.loads(r.stdout.strip().splitlines()[-1])
        outs[d.pop("backend")] = d
    assert set(outs) == {"numba", "numpy"}
    assert outs["numba"] == outs["numpy"]
