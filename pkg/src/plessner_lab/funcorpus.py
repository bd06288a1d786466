"""Registry of test functions with closed-form values and derivatives.

Holomorphic and meromorphic entries live on the unit disc. Harmonic entries
live on the upper halfplane and are stored through a holomorphic primitive
``F`` with ``h = Re F``; their gradient is encoded as the complex number
``dh/dx1 + i dh/dx2 = conj(F')``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    DomainExitError,
    InvalidParamsError,
    NonConvergenceError,
    PoleError,
    UnknownFunctionError,
)

HOLOMORPHIC = "holomorphic-disc"
MEROMORPHIC = "meromorphic-disc"
HARMONIC = "harmonic-halfplane"
KINDS = (HOLOMORPHIC, MEROMORPHIC, HARMONIC)

DEFAULT_POLE_EXCLUSION = 1e-4
DEFAULT_LACUNARY_TERMS = 20


# Each kernel maps a complex array to (F, F', F'').
def _identity(z):
    return z.copy(), np.ones_like(z), np.zeros_like(z)


def _constant(c):
    def kern(z):
        return np.full_like(z, c), np.zeros_like(z), np.zeros_like(z)

    return kern


def _affine(z):
    return (1.0 + z) / 2.0, np.full_like(z, 0.5), np.zeros_like(z)


def _power(k):
    def kern(z):
        if k == 0:
            return np.ones_like(z), np.zeros_like(z), np.zeros_like(z)
        f1 = k * z ** (k - 1)
        f2 = k * (k - 1) * z ** (k - 2) if k >= 2 else np.zeros_like(z)
        return z**k, f1, f2

    return kern


def _blaschke(zeros):
    def kern(z):
        p0 = np.ones_like(z)
        p1 = np.zeros_like(z)
        p2 = np.zeros_like(z)
        for a in zeros:
            den = 1.0 - np.conj(a) * z
            b0 = (a - z) / den
            b1 = (abs(a) ** 2 - 1.0) / den**2
            b2 = 2.0 * np.conj(a) * (abs(a) ** 2 - 1.0) / den**3
            p0, p1, p2 = p0 * b0, p1 * b0 + p0 * b1, p2 * b0 + 2.0 * p1 * b1 + p0 * b2
        return p0, p1, p2

    return kern


def _cayley(z):
    one_minus = 1.0 - z
    return (1.0 + z) / one_minus, 2.0 / one_minus**2, 4.0 / one_minus**3


def _exp_inner(sign):
    def kern(z):
        g0, g1, g2 = _cayley(z)
        g0, g1, g2 = sign * g0, sign * g1, sign * g2
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(g0)
            return e, g1 * e, (g2 + g1 * g1) * e

    return kern


def _lacunary(terms):
    def kern(z):
        f0 = np.zeros_like(z)
        f1 = np.zeros_like(z)
        f2 = np.zeros_like(z)
        p = z.copy()  # z^(2^n)
        q = np.ones_like(z)  # z^(2^n - 1)
        s = np.ones_like(z)  # z^(2^n - 2), valid from n = 1
        for n in range(terms):
            m = float(2**n)
            f0 += p
            f1 += m * q
            if n >= 1:
                f2 += m * (m - 1.0) * s
                s = s * s * z * z
            else:
                s = np.ones_like(z)
            p = p * p
            q = q * q * z
        return f0, f1, f2

    return kern


def _simple_pole(p):
    def kern(z):
        u = 1.0 / (z - p)
        return u, -u * u, 2.0 * u * u * u

    return kern


def _inv_rotated(z):
    # F = i/z, so Re F = x2 / (x1^2 + x2^2)
    u = 1.0 / z
    return 1j * u, -1j * u * u, 2j * u * u * u


class EvalResult(NamedTuple):
    value: complex | float
    derivative: complex | tuple
    near_pole: bool


@dataclass(frozen=True)
class TestFunction:
    """A corpus entry: closed-form values plus pole and series metadata."""

    __test__ = False  # keep pytest from collecting this class

    id: str
    kind: str
    params: tuple = ()
    truncation: int | None = None
    poles: tuple = ()
    pole_exclusion: float = DEFAULT_POLE_EXCLUSION
    scale: float = 1.0
    _kernel: Callable = field(default=None, repr=False, compare=False)

    @property
    def is_harmonic(self):
        return self.kind == HARMONIC

    @property
    def setting(self):
        return "halfplane" if self.is_harmonic else "disc"

    def holo(self, z):
        """``(F, F', F'')`` on a complex array, scale applied."""
        z = np.asarray(z, dtype=np.complex128)
        f0, f1, f2 = self._kernel(z)
        if self.scale != 1.0:
            f0, f1, f2 = self.scale * f0, self.scale * f1, self.scale * f2
        return f0, f1, f2

    def evaluate(self, z):
        """Vectorized ``(value, derivative)`` without domain checks.

        Harmonic entries return ``(h, conj(F'))``; the gradient is packed as
        a complex number.
        """
        f0, f1, _ = self.holo(z)
        if self.is_harmonic:
            return f0.real, np.conj(f1)
        return f0, f1

    def derivative_abs(self, z):
        """|f'| (or ||grad h||), the arc-length weight."""
        return np.abs(self.holo(z)[1])

    def near_pole(self, z, radius=None):
        z = np.asarray(z, dtype=np.complex128)
        rad = self.pole_exclusion if radius is None else radius
        out = np.zeros(z.shape, dtype=bool)
        for p in self.poles:
            out |= np.abs(z - p) < rad
        return out

    def to_dict(self):
        params = [[float(np.real(p)), float(np.imag(p))] if isinstance(p, complex) else p for p in self.params]
        return {"name": self.id, "params": params, "truncation": self.truncation}


def eval(fn: TestFunction, z) -> EvalResult:  # noqa: A001 - public name fixed by the API
    """Checked single-point evaluation."""
    z = complex(z)
    if fn.is_harmonic:
        if not z.imag > 0.0:
            raise DomainExitError(f"{fn.id}: point {z} not in the open upper halfplane")
    elif not abs(z) < 1.0:
        raise DomainExitError(f"{fn.id}: point {z} not in the open unit disc")
    for p in fn.poles:
        if z == p:
            raise PoleError(f"{fn.id}: evaluation at the pole {p}")
    value, deriv = fn.evaluate(np.array([z]))
    near = bool(fn.near_pole(np.array([z]))[0])
    if fn.is_harmonic:
        g = complex(deriv[0])
        return EvalResult(float(value[0]), (g.real, g.imag), near)
    return EvalResult(complex(value[0]), complex(deriv[0]), near)


def _as_complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise InvalidParamsError(f"complex parameter must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return complex(v)


def _as_real(v, what):
    c = _as_complex(v)
    if c.imag != 0.0:
        raise InvalidParamsError(f"{what} must be real, got {v!r}")
    return c.real


def _build_identity(params, truncation):
    _no_params("identity", params)
    return dict(kind=HOLOMORPHIC, kernel=_identity)


def _build_constant(params, truncation):
    if len(params) != 1:
        raise InvalidParamsError("constant takes exactly one parameter (the value)")
    c = _as_complex(params[0])
    return dict(kind=HOLOMORPHIC, kernel=_constant(c), params=(c,))


def _build_affine(params, truncation):
    _no_params("affine", params)
    return dict(kind=HOLOMORPHIC, kernel=_affine)


def _build_power(params, truncation):
    if len(params) != 1:
        raise InvalidParamsError("power takes one integer exponent k >= 0")
    k = _as_real(params[0], "power exponent")
    if k < 0 or k != int(k):
        raise InvalidParamsError(f"power exponent must be a non-negative integer, got {params[0]!r}")
    return dict(kind=HOLOMORPHIC, kernel=_power(int(k)), params=(int(k),))


def _build_blaschke(params, truncation):
    if not params:
        raise InvalidParamsError("blaschke needs at least one zero")
    zeros = tuple(_as_complex(a) for a in params)
    for a in zeros:
        if not abs(a) < 1.0:
            raise InvalidParamsError(f"Blaschke zero {a} must lie in the open unit disc")
    return dict(kind=HOLOMORPHIC, kernel=_blaschke(zeros), params=zeros)


def _build_exp_inner(params, truncation):
    _no_params("exp-inner", params)
    return dict(kind=HOLOMORPHIC, kernel=_exp_inner(1.0))


def _build_singular_inner(params, truncation):
    _no_params("singular-inner", params)
    return dict(kind=HOLOMORPHIC, kernel=_exp_inner(-1.0))


def _build_lacunary(params, truncation):
    if len(params) > 1:
        raise InvalidParamsError("lacunary takes at most one parameter (number of terms)")
    if params:
        truncation = params[0]
    if truncation is None:
        truncation = DEFAULT_LACUNARY_TERMS
    t = _as_real(truncation, "truncation")
    if t < 1 or t != int(t) or t > 62:
        raise InvalidParamsError(f"lacunary truncation must be an integer in [1, 62], got {truncation!r}")
    return dict(kind=HOLOMORPHIC, kernel=_lacunary(int(t)), truncation=int(t))


def _build_pole(params, truncation):
    if len(params) != 1:
        raise InvalidParamsError("pole takes one parameter p with |p| < 1")
    p = _as_complex(params[0])
    if not abs(p) < 1.0:
        raise InvalidParamsError(f"pole {p} must lie in the open unit disc")
    return dict(kind=MEROMORPHIC, kernel=_simple_pole(p), params=(p,), poles=(p,))


def _build_coordinate(params, truncation):
    _no_params("coordinate", params)
    return dict(kind=HARMONIC, kernel=_identity)


def _build_re_square(params, truncation):
    _no_params("re-square", params)
    return dict(kind=HARMONIC, kernel=_power(2))


def _build_poisson(params, truncation):
    _no_params("poisson", params)
    return dict(kind=HARMONIC, kernel=_inv_rotated)


def _no_params(name, params):
    if params:
        raise InvalidParamsError(f"{name} takes no parameters, got {list(params)!r}")


_REGISTRY = {
    "identity": _build_identity,
    "constant": _build_constant,
    "affine": _build_affine,
    "power": _build_power,
    "blaschke": _build_blaschke,
    "exp-inner": _build_exp_inner,
    "singular-inner": _build_singular_inner,
    "lacunary": _build_lacunary,
    "pole": _build_pole,
    "coordinate": _build_coordinate,
    "re-square": _build_re_square,
    "poisson": _build_poisson,
}

DESCRIPTIONS = {
    "identity": "f(z) = z",
    "constant": "f(z) = c",
    "affine": "f(z) = (1 + z)/2",
    "power": "f(z) = z^k",
    "blaschke": "finite Blaschke product with the given zeros",
    "exp-inner": "f(z) = exp((1 + z)/(1 - z))",
    "singular-inner": "f(z) = exp(-(1 + z)/(1 - z))",
    "lacunary": "truncated lacunary series sum_{n < T} z^(2^n)",
    "pole": "f(z) = 1/(z - p), |p| < 1",
    "coordinate": "h(x) = x1 on the upper halfplane",
    "re-square": "h(x) = Re((x1 + i x2)^2)",
    "poisson": "h(x) = x2/(x1^2 + x2^2)",
}


def corpus_names():
    return list(_REGISTRY)


def corpus_get(name, params=(), truncation=None, pole_exclusion=DEFAULT_POLE_EXCLUSION) -> TestFunction:
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise UnknownFunctionError(f"unknown corpus function {name!r}; known: {', '.join(_REGISTRY)}") from None
    if not pole_exclusion > 0.0:
        raise InvalidParamsError("pole_exclusion must be positive")
    spec = builder(list(params or ()), truncation)
    return TestFunction(
        id=name,
        kind=spec["kind"],
        params=tuple(spec.get("params", ())),
        truncation=spec.get("truncation"),
        poles=tuple(spec.get("poles", ())),
        pole_exclusion=float(pole_exclusion),
        _kernel=spec["kernel"],
    )


def scaled(fn: TestFunction, factor: float) -> TestFunction:
    """``factor * fn``; used for the scaling-covariance checks."""
    return replace(fn, scale=fn.scale * float(factor))


def critical_points(fn: TestFunction, region, max_cells: int = 1_000_000, tol: float = 1e-10,
                    margin: float = 0.0):
    """Zeros of f' (or of grad h) in the closed truncated region.

    Roots within ``margin`` outside the region are kept as well.

    Quadtree subdivision discards a cell once |f'(centre)| exceeds a bound on
    |f''| times the half-diagonal; surviving cells below the size floor are
    Newton-polished. The |f''| bound is sampled (centre and corners, doubled),
    not rigorous.
    """
    xmin, xmax, ymin, ymax = region.bbox()
    side = max(xmax - xmin, ymax - ymin)
    origin = complex(xmin, ymin)
    min_size = max(side * 2.0**-24, 1e-9)
    lip = region.lipschitz
    cells = np.zeros((1, 2), dtype=np.float64)
    size = side
    processed = 0
    seeds = []
    while cells.shape[0]:
        processed += cells.shape[0]
        if processed > max_cells:
            raise NonConvergenceError(
                f"critical-point search exceeded {max_cells} cells with {cells.shape[0]} cells undecided"
            )
        lo = origin + cells[:, 0] + 1j * cells[:, 1]
        c = lo + 0.5 * size * (1 + 1j)
        half = 0.5 * size * math.sqrt(2.0)
        keep = region.phi_plain(c) >= -(lip * half + margin)
        lo, c = lo[keep], c[keep]
        cells = cells[keep]
        if not cells.shape[0]:
            break
        with np.errstate(all="ignore"):
            _, d1, d2 = fn.holo(c)
            bound = np.abs(d2)
            for corner in (0, size, 1j * size, size + 1j * size):
                bound = np.maximum(bound, np.abs(fn.holo(lo + corner)[2]))
            alive = ~(np.abs(d1) > 2.0 * bound * half + 1e-300)
        if fn.poles:
            for p in fn.poles:
                alive &= np.abs(c - p) > half
        cells = cells[alive]
        c = c[alive]
        if size <= min_size:
            seeds.append(c)
            break
        size *= 0.5
        cells = np.concatenate(
            [cells, cells + [size, 0.0], cells + [0.0, size], cells + [size, size]], axis=0
        )
    if not seeds or not seeds[0].size:
        return []
    z = seeds[0]
    start = z.copy()
    with np.errstate(all="ignore"):
        for _ in range(200):
            _, d1, d2 = fn.holo(z)
            step = d1 / d2
            step[~np.isfinite(step)] = 0.0
            z = z - step
            if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(z))):
                break
        _, d1, d2 = fn.holo(z)
    ok = np.isfinite(z) & (np.abs(z - start) <= 4.0 * min_size) & (np.abs(d1) <= tol * np.maximum(1.0, np.abs(d2)))
    roots = []
    for r in z[ok]:
        if region.phi_plain(np.array([r]))[0] < -(tol + margin):
            continue
        if all(abs(r - q) > 1e-8 for q in roots):
            roots.append(complex(r))
    roots.sort(key=lambda q: (round(q.real, 9), round(q.imag, 9)))
    return roots
