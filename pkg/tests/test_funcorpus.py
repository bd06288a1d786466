import math

import numpy as np
import pytest

from conftest import disc_points
from plessner_lab import funcorpus as fc
from plessner_lab.errors import DomainExitError, InvalidParamsError, NonConvergenceError, PoleError, UnknownFunctionError
from plessner_lab.geometry import BoxRegion, StolzRegion, quasi_full

HOLO = [
    ("identity", []),
    ("constant", [0.3 + 0.1j]),
    ("affine", []),
    ("power", [3]),
    ("blaschke", [0.3, 0.5j]),
    ("blaschke", [0.3, -0.3, [0.1, -0.6]]),
    ("exp-inner", []),
    ("singular-inner", []),
    ("lacunary", [20]),
    ("pole", [0.2 + 0.1j]),
]
HARM = [("coordinate", []), ("re-square", []), ("poisson", [])]


def test_eval_examples():
    r = fc.eval(fc.corpus_get("identity"), 0.5)
    assert r.value == 0.5 and r.derivative == 1 and not r.near_pole
    r = fc.eval(fc.corpus_get("exp-inner"), 0)
    assert abs(r.value - math.e) < 1e-15 and abs(r.derivative - 2 * math.e) < 1e-14
    assert fc.eval(fc.corpus_get("blaschke", [0.3]), 0.3).value == 0


def test_eval_domain_and_pole_errors():
    with pytest.raises(DomainExitError):
        fc.eval(fc.corpus_get("identity"), 1.0)
    with pytest.raises(DomainExitError):
        fc.eval(fc.corpus_get("re-square"), 0.5 + 0j)
    f = fc.corpus_get("pole", [0.2])
    with pytest.raises(PoleError):
        fc.eval(f, 0.2)
    assert fc.eval(f, 0.2 + 5e-5).near_pole
    assert not fc.eval(f, 0.2 + 2e-4).near_pole


def test_corpus_get_errors():
    with pytest.raises(UnknownFunctionError):
        fc.corpus_get("nope")
    with pytest.raises(InvalidParamsError):
        fc.corpus_get("blaschke", [1.0])
    with pytest.raises(InvalidParamsError):
        fc.corpus_get("pole", [1.2])


def test_required_names_registered():
    names = set(fc.corpus_names())
    for n in ["identity", "affine", "power", "blaschke", "exp-inner", "singular-inner", "lacunary", "pole",
              "coordinate", "re-square", "poisson"]:
        assert n in names


@pytest.mark.parametrize("name,params", HOLO)
def test_derivative_consistency(name, params, rng):
    f = fc.corpus_get(name, params)
    z = disc_points(rng, 100)
    for p in f.poles:
        z = z[np.abs(z - p) >= 0.01]
    h = 1e-5
    fd = (f.evaluate(z + h)[0] - f.evaluate(z - h)[0]) / (2 * h)
    d = f.evaluate(z)[1]
    assert np.max(np.abs(fd - d) / np.maximum(1.0, np.abs(d))) <= 1e-6


@pytest.mark.parametrize("name,params", HARM)
def test_harmonic_gradient_and_laplacian(name, params, rng):
    f = fc.corpus_get(name, params)
    # away from the Poisson singularity, where the 5-point stencil's own O(s^2) error is small
    z = rng.uniform(-2, 2, 100) + 1j * rng.uniform(1.0, 3.0, 100)
    h = 1e-5
    val = lambda q: f.evaluate(q)[0]
    gx = (val(z + h) - val(z - h)) / (2 * h)
    gy = (val(z + 1j * h) - val(z - 1j * h)) / (2 * h)
    g = f.evaluate(z)[1]
    assert np.max(np.abs(gx + 1j * gy - g) / np.maximum(1.0, np.abs(g))) <= 1e-6
    s = 1e-3
    lap = (val(z + s) + val(z - s) + val(z + 1j * s) + val(z - 1j * s) - 4 * val(z)) / s**2
    assert np.max(np.abs(lap)) <= 1e-5


def test_determinism(rng):
    z = disc_points(rng, 50)
    for name, params in HOLO:
        f = fc.corpus_get(name, params)
        a, b = f.evaluate(z), f.evaluate(z)
        assert np.array_equal(a[0], b[0], equal_nan=True) and np.array_equal(a[1], b[1], equal_nan=True)


def test_lacunary_against_naive_sum():
    f = fc.corpus_get("lacunary", [20])
    v = fc.eval(f, 0.5).value
    naive = sum(0.5 ** (2**n) for n in range(20))
    assert abs(v - naive) <= 1e-12
    z = 0.3 + 0.6j
    naive = sum(z ** (2**n) for n in range(20))
    assert abs(fc.eval(f, z).value - naive) <= 1e-12


def test_scaled_doubles_value_and_derivative():
    f = fc.corpus_get("power", [2])
    g = fc.scaled(f, 2.0)
    r, s = fc.eval(f, 0.3 + 0.2j), fc.eval(g, 0.3 + 0.2j)
    assert s.value == 2 * r.value and s.derivative == 2 * r.derivative


def _grid_sign_scan(fn, lo, hi, n=801):
    """Oracle: cells where both Re f' and Im f' change sign on a dense grid."""
    x = np.linspace(lo.real, hi.real, n)
    y = np.linspace(lo.imag, hi.imag, n)
    Z = x[None, :] + 1j * y[:, None]
    d = fn.evaluate(Z.ravel())[1].reshape(Z.shape)
    hits = []
    for comp in (d.real, d.imag):
        s = comp > 0
        ch = np.zeros(s[:-1, :-1].shape, dtype=bool)
        for a, b in ((s[:-1, :-1], s[1:, :-1]), (s[:-1, :-1], s[:-1, 1:]), (s[:-1, :-1], s[1:, 1:])):
            ch |= a != b
        hits.append(ch)
    both = hits[0] & hits[1]
    iy, ix = np.nonzero(both)
    return Z[iy, ix]


def test_critical_points_examples():
    assert fc.critical_points(fc.corpus_get("identity"), quasi_full(0.1)) == []
    # no Stolz region contains 0 itself (1 - |z| < delta < 1); 0 sits 1e-6 outside the quasi-full one
    assert fc.critical_points(fc.corpus_get("power", [2]), quasi_full(0.1)) == []
    c = fc.critical_points(fc.corpus_get("power", [2]), quasi_full(0.1), margin=1e-5)
    assert len(c) == 1 and abs(c[0]) <= 1e-10
    b = fc.corpus_get("blaschke", [0.3, -0.3])
    c = fc.critical_points(b, quasi_full(0.1), margin=1e-5)
    assert len(c) == 1 and abs(c[0].imag) <= 1e-10 and abs(c[0]) < 0.3
    near = _grid_sign_scan(b, -0.5 - 0.5j, 0.5 + 0.5j)
    assert near.size and np.min(np.abs(near - c[0])) < 2e-3
    assert abs(b.evaluate(np.array([c[0]]))[1][0]) <= 1e-10


def test_critical_points_harmonic():
    c = fc.critical_points(fc.corpus_get("re-square"), BoxRegion(-1, 1, 0, 1, 0.1))
    assert c == []
    assert fc.critical_points(fc.corpus_get("coordinate"), BoxRegion(-1, 1, 0, 1, 0.1)) == []


def test_critical_points_budget():
    with pytest.raises(NonConvergenceError):
        fc.critical_points(fc.corpus_get("exp-inner"), StolzRegion.disc(0.0, 0.5, 1e-4), max_cells=10_000)
