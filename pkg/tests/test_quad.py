import json
import math

import numpy as np
import pytest

from plessner_lab.errors import InvalidParamsError, MismatchError
from plessner_lab.funcorpus import corpus_get, scaled
from plessner_lab.geometry import BoxRegion, StolzRegion, quasi_full, stolz_contains
from plessner_lab.levelset import LevelTarget, extract
from plessner_lab.quad import (
    QuadResult,
    arc_integral,
    area_image_integral,
    coarea_check,
    spencer_integral,
    stein_integral,
)

IDENT = corpus_get("identity")
SQ = corpus_get("power", [2])


def test_quadresult_json():
    q = QuadResult(1.5, 1e-6, 10, 2)
    assert json.loads(q.to_json()) == {"value": 1.5, "err": 1e-6, "cells": 10, "levels": 2}


def test_arc_multiplicity_two():
    t = LevelTarget.circle(0, 0.25)
    q = arc_integral(extract(SQ, quasi_full(0.2), t, 1 / 256), SQ)
    assert abs(q.value / math.pi - 1) < 1e-2
    assert q.err >= 0 and q.levels == 2


def test_arc_stolz_piece():
    # on |z| = 0.7, sqrt(0.75) |z - 1| < 0.3  <=>  cos(theta) > (1.49 - 0.12) / 1.4
    exact = 0.7 * 2 * math.acos((1.49 - 0.12) / 1.4)
    assert abs(exact - 0.2902) < 5e-4  # quoted value is rounded
    t = LevelTarget.circle(0, 0.7)
    q = arc_integral(extract(IDENT, StolzRegion.disc(0.0, 0.5, 0.01), t, 1 / 256), IDENT)
    assert abs(q.value / exact - 1) < 1e-2


def test_arc_empty():
    assert arc_integral([], IDENT).value == 0.0


def test_arc_mismatch():
    polys = extract(IDENT, quasi_full(0.2), LevelTarget.circle(0, 0.5), 1 / 64)
    with pytest.raises(MismatchError):
        arc_integral(polys, SQ)


def test_arc_additivity():
    t = LevelTarget.circle(0, 0.8)
    p = extract(IDENT, StolzRegion.disc(0.0, 0.5, 0.01), t, 1 / 128)[0]
    whole = arc_integral([p], IDENT).value
    for k in (1, p.vertices.shape[0] // 2, p.vertices.shape[0] - 2):
        a, b = p.split(k)
        parts = arc_integral([a], IDENT).value + arc_integral([b], IDENT).value
        assert abs(whole - parts) <= 1e-12


def test_arc_scaling_covariance():
    fn = corpus_get("blaschke", [0.3, 0.5j])
    fn2 = scaled(fn, 2.0)
    region = StolzRegion.disc(0.5, 0.5, 0.01)
    a = arc_integral(extract(fn, region, LevelTarget.circle(0.1, 0.6), 1 / 256), fn).value
    b = arc_integral(extract(fn2, region, LevelTarget.circle(0.2, 1.2), 1 / 256), fn2).value
    assert a > 0 and abs(b / (2 * a) - 1) < 5e-3


def test_spencer_identity():
    q = spencer_integral(IDENT, quasi_full(1e-3), 1 / 128)
    assert abs(q.value / (math.pi / 2) - 1) < 1e-2


def test_spencer_constant_zero():
    assert spencer_integral(corpus_get("constant", [0.5]), quasi_full(0.1), 1 / 64).value == 0.0


def test_spencer_exp_inner_monotone():
    fn = corpus_get("exp-inner")
    vals = [spencer_integral(fn, StolzRegion.disc(0.0, 0.5, e), 1 / 256).value for e in (0.04, 0.02, 0.01)]
    # the added slivers contribute ~exp(-2/eps), below double rounding of the total
    assert vals[0] <= vals[1] <= vals[2]


def test_spencer_pole_finite():
    q = spencer_integral(corpus_get("pole", [0.4 + 0.1j]), quasi_full(0.05), 1 / 128)
    # spherical area of the image of a disc under a Moebius map is at most the sphere's area pi
    assert np.isfinite(q.value) and 0 < q.value <= math.pi


def test_spencer_rejects_harmonic():
    with pytest.raises(InvalidParamsError):
        spencer_integral(corpus_get("re-square"), BoxRegion(0, 1, 0, 1, 0.01))


def test_area_image():
    q = area_image_integral(IDENT, quasi_full(1e-3), 0, 0.4, 1 / 128)
    assert abs(q.value / (math.pi * 0.16) - 1) < 1e-2
    q = area_image_integral(SQ, quasi_full(1e-3), 0, 0.25, 1 / 128)
    assert abs(q.value / (2 * math.pi * 0.0625) - 1) < 1.5e-2


def test_area_empty_sublevel():
    assert area_image_integral(IDENT, StolzRegion.disc(0.0, 0.5, 0.01), 0, 1e-3, 1 / 128).value == 0.0


def test_stein_examples():
    box = BoxRegion(0, 1, 0, 1, 1e-3)
    q = stein_integral(corpus_get("coordinate"), box, 1 / 128)
    assert abs(q.value / box.area - 1) < 1e-2
    q = stein_integral(corpus_get("re-square"), box, 1 / 256)
    assert abs(q.value / (8 / 3) - 1) < 1e-2
    assert stein_integral(scaled(corpus_get("coordinate"), 0.0), box, 1 / 64).value == 0.0


def test_stein_on_halfplane_stolz():
    r = StolzRegion.halfplane(0.0, 0.5, 0.01)
    q = stein_integral(corpus_get("coordinate"), r, 1 / 256)
    rng = np.random.default_rng(5)
    xmin, xmax, ymin, ymax = r.bbox()
    n = 400_000
    pts = rng.uniform(xmin, xmax, n) + 1j * rng.uniform(ymin, ymax, n)
    mc = stolz_contains(r, pts).mean() * (xmax - xmin) * (ymax - ymin)
    assert abs(q.value / mc - 1) < 1e-2


@pytest.mark.parametrize("make", [
    lambda e: (spencer_integral, (corpus_get("blaschke", [0.3, 0.5j]), StolzRegion.disc(0.3, 0.5, e))),
    lambda e: (spencer_integral, (corpus_get("exp-inner"), StolzRegion.disc(0.0, 0.5, e))),
    lambda e: (area_image_integral, (IDENT, StolzRegion.disc(0.0, 0.9, e), 0.2, 0.9)),
    lambda e: (stein_integral, (corpus_get("poisson"), StolzRegion.halfplane(0.0, 0.5, e))),
])
def test_monotone_in_eps(make):
    vals = []
    for e in (0.2, 0.1, 0.05, 0.025):
        f, args = make(e)
        vals.append(f(*args, resolution=1 / 128).value)
    for a, b in zip(vals, vals[1:]):
        assert b >= a * (1 - 1e-12)


def test_thread_count_invariance():
    a = spencer_integral(IDENT, quasi_full(0.01), 1 / 128, threads=1)
    b = spencer_integral(IDENT, quasi_full(0.01), 1 / 128, threads=4)
    assert a == b


def test_coarea_identity_disc():
    c = coarea_check(IDENT, quasi_full(0.2), 0, 0.2, 0.4, 16, 1 / 256)
    exact = math.pi * (0.16 - 0.04)
    assert abs(c.lhs.value / exact - 1) < 1e-2 and abs(c.rhs.value / exact - 1) < 1e-2
    assert c.relative_gap <= 2e-2


def test_coarea_square():
    c = coarea_check(SQ, quasi_full(0.2), 0, 0.2, 0.4, 16, 1 / 256)
    assert c.relative_gap <= 2e-2
    # two sheets over the annulus
    assert abs(c.lhs.value / (2 * math.pi * 0.12) - 1) < 1e-2


def test_coarea_degenerate_and_invalid():
    c = coarea_check(IDENT, quasi_full(0.2), 0, 0.3, 0.3)
    assert c.lhs.value == 0 and c.rhs.value == 0 and c.relative_gap == 0
    with pytest.raises(InvalidParamsError):
        coarea_check(IDENT, quasi_full(0.2), 0, 0.4, 0.2)
    with pytest.raises(InvalidParamsError):
        coarea_check(IDENT, quasi_full(0.2), 0, 0.2, 0.4, n_levels=4)


def _band(fn, region, w, rng):
    xmin, xmax, ymin, ymax = region.bbox()
    pts = rng.uniform(xmin, xmax, 200_000) + 1j * rng.uniform(ymin, ymax, 200_000)
    pts = pts[stolz_contains(region, pts)]
    m = np.abs(fn.evaluate(pts)[0] - w)
    m = m[np.isfinite(m)]
    return float(np.quantile(m, 0.3)), float(np.quantile(m, 0.7))


@pytest.mark.parametrize("name,params,w", [
    ("identity", [], 0.0),
    ("affine", [], 0.0),
    ("power", [3], 0.1),
    ("blaschke", [0.3, 0.5j], 0.0),
    ("exp-inner", [], 0.0),
    ("singular-inner", [], 0.0),
    ("lacunary", [20], 0.0),
    ("pole", [0.2 + 0.1j], 0.0),
])
def test_coarea_consistency_corpus(name, params, w):
    fn = corpus_get(name, params)
    region = StolzRegion.disc(0.0, 0.5, 0.05)
    a, b = _band(fn, region, w, np.random.default_rng(1))
    c = coarea_check(fn, region, w, a, b, 16)
    assert c.lhs.value > 0 and c.relative_gap <= 2e-2


def test_coarea_harmonic():
    c = coarea_check(corpus_get("coordinate"), BoxRegion(0, 1, 0, 1, 1e-3), 0, 0.2, 0.6, 8, 1 / 128)
    exact = 0.4 * (1 - 1e-3)
    assert abs(c.lhs.value / exact - 1) < 1e-2 and abs(c.rhs.value / exact - 1) < 1e-2
