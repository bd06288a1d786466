"""Weighted line integrals over level polylines, cell-midpoint area
integrals (spherical energy, image area, harmonic energy) and the co-area
cross-check tying the two together."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidParamsError, MismatchError
from .geometry import DEFAULT_MAX_CELLS, cover_region
from .levelset import DEFAULT_RESOLUTION, LevelField, LevelTarget, fn_key, refine_all
from .parallel import map_ordered

CHUNK = 1 << 17
# a cell is "band-partial" when |b(c)| <= PARTIAL_SAFETY * |grad b(c)| * half-diagonal
PARTIAL_SAFETY = 2.0

# 2x2 sub-cell midpoints (unit-square offsets) and 4x4 for band-partial cells
_SUB2 = np.array([0.25, 0.75])
_SUB4 = (np.arange(4) + 0.5) / 4.0


@dataclass(frozen=True)
class QuadResult:
    value: float
    err: float
    cells: int
    levels: int

    def to_dict(self):
        return {"value": self.value, "err": self.err, "cells": self.cells, "levels": self.levels}

    def to_json(self):
        return json.dumps(self.to_dict())


ZERO = QuadResult(0.0, 0.0, 0, 0)


def arc_integral(polys, fn, refine_factor: int = 2) -> QuadResult:
    """Sum of segment length times |f'| at the segment midpoint.

    The value is taken after one refinement pass; ``err`` is the change that
    pass produced.
    """
    if not polys:
        return QuadResult(0.0, 0.0, 0, 2)
    key = fn_key(fn)
    for p in polys:
        if p.source != key:
            raise MismatchError(f"polyline was extracted for {p.source}, not {key}")
    raw = np.concatenate([p.segment_lengths() * p.weights for p in polys])
    refined = []
    for target in _targets_in_order(polys):
        group = [p for p in polys if p.target == target]
        refined.extend(refine_all(group, fn, target, refine_factor))
    fine = np.concatenate([p.segment_lengths() * p.weights for p in refined])
    v_raw = kernels.pairwise_sum(raw)
    v_fine = kernels.pairwise_sum(fine)
    return QuadResult(v_fine, abs(v_fine - v_raw), int(fine.size), 2)


def _targets_in_order(polys):
    seen = []
    for p in polys:
        if p.target not in seen:
            seen.append(p.target)
    return seen


# --- area-type integrals -------------------------------------------------


class _Spencer:
    """|f'|^2 / (1 + |f|^2)^2 with the pole neighbourhoods clamped to their boundary."""

    band = False

    def __init__(self, fn):
        self.fn = fn

    def weight(self, z):
        fn = self.fn
        if fn.poles:
            z = z.copy()
            for p in fn.poles:
                d = z - p
                dist = np.abs(d)
                near = dist < fn.pole_exclusion
                if np.any(near):
                    unit = np.where(dist[near] > 0.0, d[near] / np.where(dist[near] > 0, dist[near], 1.0), 1.0)
                    z[near] = p + fn.pole_exclusion * unit
        with np.errstate(all="ignore"):
            v, d = fn.evaluate(z)
            m2 = v.real * v.real + v.imag * v.imag
            ad = np.abs(d)
            big = m2 > 1.0
            inv = np.where(big, 1.0 / np.where(big, m2, 1.0), 0.0)
            s = np.where(big, ad * inv / (inv + 1.0), ad / (1.0 + m2))
        s = np.where(np.isfinite(s), s, 0.0)
        return s * s


class _GradSquared:
    """|f'|^2 (or ||grad h||^2), optionally restricted to a band lo < b(z) < hi."""

    def __init__(self, fn, w=0j, lo=None, hi=None):
        self.fn = fn
        self.w = complex(w)
        self.lo = lo
        self.hi = hi
        self.band = lo is not None or hi is not None

    def _level(self, v, d):
        # band variable and the modulus of its gradient
        if self.fn.is_harmonic:
            return v, np.abs(d)
        e = v - self.w
        return np.abs(e), np.abs(d)

    def weight(self, z):
        return self.weight_ind_partial(z, None)[0]

    def weight_ind_partial(self, z, half):
        with np.errstate(all="ignore"):
            v, d = self.fn.evaluate(z)
            wt = np.abs(d) ** 2
            if not self.band:
                return np.where(np.isfinite(wt), wt, 0.0), None, None
            b, gb = self._level(v, d)
            ind = np.ones(z.shape, dtype=bool)
            part = np.zeros(z.shape, dtype=bool)
            for bound, above in ((self.lo, True), (self.hi, False)):
                if bound is None:
                    continue
                ind &= (b > bound) if above else (b < bound)
                part |= np.abs(b - bound) <= PARTIAL_SAFETY * gb * half
        wt = np.where(ind & np.isfinite(wt), wt, 0.0)
        return wt, ind, part


def _region_fraction(phi, lower_left, size, sub):
    """Fraction of sub-cell midpoints inside the region, per cell."""
    n = lower_left.shape[0]
    offs = (sub[None, :] + 1j * sub[:, None]).ravel()
    pts = lower_left[:, None] + size[:, None] * offs[None, :]
    inside = phi(pts.ravel()).reshape(n, -1) > 0.0
    return inside.mean(axis=1)


def _integrate_cells(integrand, phi, ll, size, partial):
    """Midpoint rule on the given cells; returns per-cell contributions."""
    n = ll.shape[0]
    area = size * size
    centers = ll + 0.5 * size * (1 + 1j)
    half = 0.5 * size * math.sqrt(2.0)
    frac = np.ones(n)
    if np.any(partial):
        frac[partial] = _region_fraction(phi, ll[partial], size[partial], _SUB2)
    if not integrand.band:
        return area * integrand.weight(centers) * frac
    wt, ind, bpart = integrand.weight_ind_partial(centers, half)
    out = area * wt * frac
    if np.any(bpart):
        k = np.flatnonzero(bpart)
        offs = (_SUB4[None, :] + 1j * _SUB4[:, None]).ravel()
        sub_pts = (ll[k][:, None] + size[k][:, None] * offs[None, :]).ravel()
        sw, _, _ = integrand.weight_ind_partial(sub_pts, np.repeat(half[k] / 4.0, offs.size))
        sw = sw * (phi(sub_pts) > 0.0)
        out[k] = (area[k] / offs.size) * sw.reshape(k.size, -1).sum(axis=1)
    return out


def _area_quadrature(fn, region, integrand, resolution, max_cells, threads, holes=()):
    cover = cover_region(region, resolution, max_cells, holes=holes)
    phi = cover.phi
    ll_all = cover.lower_left
    size_all = cover.size
    part_all = cover.partial
    n = cover.n_cells
    coarse = np.zeros(n)
    fine = np.zeros(n)

    def work(start):
        stop = min(start + CHUNK, n)
        ll = ll_all[start:stop]
        size = size_all[start:stop]
        part = part_all[start:stop]
        coarse[start:stop] = _integrate_cells(integrand, phi, ll, size, part)
        h = 0.5 * size
        acc = np.zeros(stop - start)
        for off in (0.0, 1.0, 1j, 1.0 + 1j):
            acc = acc + _integrate_cells(integrand, phi, ll + off * h, h, part)
        fine[start:stop] = acc

    map_ordered(work, range(0, n, CHUNK), threads)
    v_c = kernels.pairwise_sum(coarse)
    v_f = kernels.pairwise_sum(fine)
    return QuadResult(v_f, abs(v_f - v_c), n, 2)


def _require(fn, harmonic):
    if harmonic and not fn.is_harmonic:
        raise InvalidParamsError(f"{fn.id} is not a harmonic halfplane function")
    if not harmonic and fn.is_harmonic:
        raise InvalidParamsError(f"{fn.id} is harmonic; use the harmonic integrals")


def spencer_integral(fn, region, resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS, threads=None):
    """Integral of |f'|^2/(1+|f|^2)^2 over the truncated region."""
    _require(fn, harmonic=False)
    return _area_quadrature(fn, region, _Spencer(fn), resolution, max_cells, threads)


def area_image_integral(fn, region, w, r, resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS,
                        threads=None):
    """Integral of |f'|^2 over region and {|f - w| < r}: image area with multiplicity."""
    _require(fn, harmonic=False)
    if not r > 0.0:
        raise InvalidParamsError("r must be positive")
    return _area_quadrature(fn, region, _GradSquared(fn, w, None, float(r)), resolution, max_cells, threads)


def stein_integral(fn, region, resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS, threads=None):
    """Integral of ||grad h||^2 over the truncated region (N = 2, unit weight)."""
    _require(fn, harmonic=True)
    return _area_quadrature(fn, region, _GradSquared(fn), resolution, max_cells, threads)


@dataclass(frozen=True)
class CoareaResult:
    lhs: QuadResult
    rhs: QuadResult
    relative_gap: float
    levels: tuple = ()
    level_values: tuple = ()

    def to_dict(self):
        return {
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "relative_gap": self.relative_gap,
            "levels": list(self.levels),
            "level_values": list(self.level_values),
        }


def coarea_check(fn, region, w=0j, a=0.0, b=1.0, n_levels=16, resolution=DEFAULT_RESOLUTION,
                 max_cells=DEFAULT_MAX_CELLS, threads=None) -> CoareaResult:
    """Area side versus level-integrated arc side over the band a < level < b.

    Levels sit at the midpoints of ``n_levels`` equal subintervals. For
    holomorphic ``fn`` the level variable is |f - w|; for harmonic ``fn`` it
    is h and ``w`` is ignored.
    """
    if int(n_levels) != n_levels or n_levels < 8:
        raise InvalidParamsError("n_levels must be an integer >= 8")
    a, b = float(a), float(b)
    if b < a:
        raise InvalidParamsError("band needs a <= b")
    if not fn.is_harmonic and a < 0.0:
        raise InvalidParamsError("band radii must be >= 0")
    if a == b:
        return CoareaResult(QuadResult(0.0, 0.0, 0, 2), QuadResult(0.0, 0.0, 0, int(n_levels)), 0.0)
    integrand = _GradSquared(fn, w, a if (fn.is_harmonic or a > 0.0) else None, b)
    lhs = _area_quadrature(fn, region, integrand, resolution, max_cells, threads)

    field = LevelField(fn, region, resolution, max_cells)
    dt = (b - a) / n_levels
    levels = [a + (i + 0.5) * dt for i in range(int(n_levels))]

    def one(t):
        target = LevelTarget.harmonic(t) if fn.is_harmonic else LevelTarget.circle(w, t)
        return arc_integral(field.extract(target), fn)

    per_level = map_ordered(one, levels, threads)
    vals = np.array([q.value for q in per_level])
    errs = np.array([q.err for q in per_level])
    rhs = QuadResult(
        kernels.pairwise_sum(vals * dt),
        kernels.pairwise_sum(errs * dt),
        int(sum(q.cells for q in per_level)),
        int(n_levels),
    )
    top = max(lhs.value, rhs.value)
    gap = abs(lhs.value - rhs.value) / top if top > 0.0 else 0.0
    return CoareaResult(lhs, rhs, gap, tuple(levels), tuple(float(v) for v in vals))
