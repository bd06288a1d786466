"""Stolz regions, boundary arcs and graded quadtree covers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import BudgetError, InvalidParamsError, OutOfBandError

DEFAULT_MAX_CELLS = 4_000_000
QUASI_FULL_DELTA = 1.0 - 1e-6
# cells with depth bound d satisfy diameter <= d / GRADING, i.e. <= (1 - |z|)/8 pointwise
GRADING = 9.0
MAX_LEVEL = 30


def _holes_arrays(holes):
    if not holes:
        z = np.zeros(0)
        return z, z, z
    c = np.array([h[0] for h in holes], dtype=np.complex128)
    r = np.array([h[1] for h in holes], dtype=np.float64)
    return c.real.copy(), c.imag.copy(), r


class _RegionBase:
    """Shared behaviour: signed inside-function ``phi`` (> 0 inside)."""

    lipschitz = 1.0

    def _kernel_params(self):
        raise NotImplementedError

    def critical_holes(self):
        if self.rho_c > 0.0:
            return tuple((complex(c), self.rho_c) for c in self.critical)
        return ()

    def phi(self, z, extra_holes=()):
        z = np.asarray(z, dtype=np.complex128)
        kind, p = self._kernel_params()
        hx, hy, hr = _holes_arrays(self.critical_holes() + tuple(extra_holes))
        return kernels.region_phi(z.real, z.imag, kind, p, hx, hy, hr)

    def phi_plain(self, z):
        """``phi`` without the critical-point exclusion discs."""
        z = np.asarray(z, dtype=np.complex128)
        kind, p = self._kernel_params()
        e = np.zeros(0)
        return kernels.region_phi(z.real, z.imag, kind, p, e, e, e)

    def with_eps(self, eps):
        return replace(self, eps=float(eps))

    def with_critical(self, points, rho_c=None):
        rho = self.rho_c if rho_c is None else float(rho_c)
        return replace(self, critical=tuple(complex(c) for c in points), rho_c=rho)


@dataclass(frozen=True)
class StolzRegion(_RegionBase):
    """Truncated approach region S(zeta, delta) (disc) or S_2(y, delta) (halfplane).

    ``vertex`` is a unit complex number in the disc setting and a real
    abscissa in the halfplane setting.
    """

    setting: str
    vertex: complex | float
    delta: float
    eps: float
    rho_c: float = 0.0
    critical: tuple = field(default=())

    def __post_init__(self):
        if self.setting not in ("disc", "halfplane"):
            raise InvalidParamsError(f"unknown region setting {self.setting!r}")
        if not (0.0 < self.eps < self.delta < 1.0):
            raise InvalidParamsError(f"need 0 < eps < delta < 1, got eps={self.eps}, delta={self.delta}")
        if not self.rho_c >= 0.0:
            raise InvalidParamsError("rho_c must be >= 0")
        if self.setting == "disc":
            v = complex(self.vertex)
            m = abs(v)
            if abs(m - 1.0) > 1e-12:
                raise InvalidParamsError(f"disc vertex must be unit-modulus, |vertex| = {m!r}")
            object.__setattr__(self, "vertex", v / m)
        else:
            v = complex(self.vertex)
            if v.imag != 0.0:
                raise InvalidParamsError("halfplane vertex must be a real abscissa")
            object.__setattr__(self, "vertex", v.real)
        object.__setattr__(self, "critical", tuple(complex(c) for c in self.critical))

    @classmethod
    def disc(cls, angle=0.0, delta=0.5, eps=0.01, rho_c=0.0, critical=()):
        return cls("disc", complex(math.cos(angle), math.sin(angle)), delta, eps, rho_c, tuple(critical))

    @classmethod
    def halfplane(cls, y=0.0, delta=0.5, eps=0.01, rho_c=0.0, critical=()):
        return cls("halfplane", float(y), delta, eps, rho_c, tuple(critical))

    @property
    def kappa(self):
        return math.sqrt(1.0 - self.delta * self.delta)

    @property
    def lipschitz(self):
        return 1.0 + self.kappa

    @property
    def vertex_point(self):
        return complex(self.vertex)

    def depth(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if self.setting == "disc":
            return 1.0 - np.abs(z)
        return z.imag

    def _kernel_params(self):
        if self.setting == "disc":
            v = complex(self.vertex)
            return kernels.REGION_DISC, np.array([v.real, v.imag, self.delta, self.kappa, self.eps])
        return kernels.REGION_HALFPLANE, np.array([self.vertex, self.delta, self.kappa, self.eps])

    def bbox(self):
        reach = self.delta / self.kappa
        if self.setting == "disc":
            v = complex(self.vertex)
            lim = 1.0 - self.eps
            return (
                max(v.real - reach, -lim),
                min(v.real + reach, lim),
                max(v.imag - reach, -lim),
                min(v.imag + reach, lim),
            )
        return (self.vertex - reach, self.vertex + reach, self.eps, self.delta)

    def to_dict(self):
        if self.setting == "disc":
            vertex = math.atan2(self.vertex.imag, self.vertex.real)
        else:
            vertex = self.vertex
        return {
            "setting": self.setting,
            "vertex": vertex,
            "delta": self.delta,
            "eps": self.eps,
            "rho_c": self.rho_c,
        }


@dataclass(frozen=True)
class BoxRegion(_RegionBase):
    """Axis-aligned box in the upper halfplane, truncated at x2 >= eps."""

    x0: float
    x1: float
    y0: float
    y1: float
    eps: float
    rho_c: float = 0.0
    critical: tuple = field(default=())
    setting: str = field(default="box", init=False)

    def __post_init__(self):
        if not (self.x0 < self.x1 and 0.0 <= self.y0 < self.y1 and 0.0 < self.eps < self.y1):
            raise InvalidParamsError("box needs x0 < x1, 0 <= y0 < y1 and 0 < eps < y1")
        object.__setattr__(self, "critical", tuple(complex(c) for c in self.critical))

    def depth(self, z):
        return np.asarray(z, dtype=np.complex128).imag

    def _kernel_params(self):
        return kernels.REGION_BOX, np.array([self.x0, self.x1, max(self.y0, self.eps), self.y1])

    def bbox(self):
        return (self.x0, self.x1, max(self.y0, self.eps), self.y1)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - max(self.y0, self.eps))

    def to_dict(self):
        return {
            "setting": "box",
            "x": [self.x0, self.x1],
            "y": [self.y0, self.y1],
            "eps": self.eps,
            "rho_c": self.rho_c,
        }


def quasi_full(eps=1e-3, delta=QUASI_FULL_DELTA, angle=0.0):
    """Large-aperture Stolz region covering the disc up to depth ~eps."""
    return StolzRegion.disc(angle=angle, delta=delta, eps=eps)


def region_from_dict(d):
    d = dict(d)
    setting = d.get("setting", "disc")
    rho_c = float(d.get("rho_c", 0.0))
    if setting == "box":
        (x0, x1), (y0, y1) = d["x"], d["y"]
        return BoxRegion(float(x0), float(x1), float(y0), float(y1), float(d["eps"]), rho_c)
    if setting == "disc":
        return StolzRegion.disc(float(d["vertex"]), float(d["delta"]), float(d["eps"]), rho_c)
    if setting == "halfplane":
        return StolzRegion.halfplane(float(d["vertex"]), float(d["delta"]), float(d["eps"]), rho_c)
    raise InvalidParamsError(f"unknown region setting {setting!r}")


def stolz_contains(region, z):
    """Membership test with the strict inequalities of the definition.

    Vectorized over ``z``; returns a bool (scalar input) or bool array.
    """
    zz = np.asarray(z, dtype=np.complex128)
    if isinstance(region, BoxRegion):
        y_lo = max(region.y0, region.eps)
        inside = (zz.real > region.x0) & (zz.real < region.x1) & (zz.imag >= y_lo) & (zz.imag < region.y1)
    else:
        v = region.vertex_point
        d = region.depth(zz)
        inside = (region.kappa * np.abs(zz - v) < d) & (d < region.delta) & (d >= region.eps)
        if region.setting == "disc":
            inside &= np.abs(zz) < 1.0
    for c, rho in region.critical_holes():
        inside &= np.abs(zz - c) > rho
    if zz.ndim == 0:
        return bool(inside)
    return inside


@dataclass(frozen=True)
class BoundaryArc:
    """I(z, delta): boundary points eta with z in S(eta, delta)."""

    center: complex
    delta: float
    mid_angle: float
    half_width: float

    @property
    def measure(self):
        return 2.0 * self.half_width

    def contains(self, angle):
        diff = np.angle(np.exp(1j * (np.asarray(angle, dtype=np.float64) - self.mid_angle)))
        return np.abs(diff) < self.half_width

    def rotated(self, alpha):
        return BoundaryArc(self.center * complex(math.cos(alpha), math.sin(alpha)), self.delta,
                           math.remainder(self.mid_angle + alpha, 2 * math.pi), self.half_width)


def arc_interval(z, delta) -> BoundaryArc:
    """Closed-form arc I(z, delta) for 1 - delta < |z| < 1.

    With d = 1 - |z| the defining inequality reduces to
    1 - cos(theta) < d^2 delta^2 / (2 |z| (1 - delta^2)), evaluated through
    the half-angle form to keep precision for tiny arcs.
    """
    z = complex(z)
    m = abs(z)
    if not (0.0 < delta < 1.0):
        raise InvalidParamsError("delta must lie in (0, 1)")
    if not (1.0 - delta < m < 1.0):
        raise OutOfBandError(f"|z| = {m!r} outside the band (1 - delta, 1) = ({1.0 - delta!r}, 1)")
    d = 1.0 - m
    one_minus_cos = d * d * delta * delta / (2.0 * m * (1.0 - delta * delta))
    s = one_minus_cos / 2.0
    half = math.pi if s >= 1.0 else 2.0 * math.asin(math.sqrt(s))
    return BoundaryArc(z, float(delta), math.atan2(z.imag, z.real), half)


@dataclass(frozen=True)
class CellCover:
    """Leaves of a graded quadtree over a region's bounding square.

    Integer corner coordinates ``ix, iy`` and side ``isize`` are in units of
    ``side / 2**max_level``; ``partial`` marks cells that may meet the region
    boundary.
    """

    region: object
    resolution: float
    origin: complex
    side: float
    max_level: int
    ix: np.ndarray
    iy: np.ndarray
    isize: np.ndarray
    partial: np.ndarray
    holes: tuple = ()

    @property
    def n_cells(self):
        return int(self.ix.shape[0])

    @property
    def unit(self):
        return self.side / 2.0**self.max_level

    @property
    def size(self):
        return self.isize * self.unit

    @property
    def lower_left(self):
        u = self.unit
        return self.origin + self.ix * u + 1j * (self.iy * u)

    @property
    def centers(self):
        return self.lower_left + 0.5 * self.size * (1 + 1j)

    @property
    def diameters(self):
        return self.size * math.sqrt(2.0)

    def phi(self, z):
        return self.region.phi(z, self.holes)


def cover_region(region, resolution, max_cells=DEFAULT_MAX_CELLS, holes=()) -> CellCover:
    """Quadtree cover of the truncated region.

    A cell is split while its diameter exceeds ``min(resolution, dmax / 9)``
    where ``dmax`` bounds the depth (1 - |z| or x2) over the cell. The split
    rule does not depend on ``eps``, so covers for smaller ``eps`` contain the
    leaves of covers for larger ``eps``.
    """
    if not resolution > 0.0:
        raise InvalidParamsError("resolution must be positive")
    xmin, xmax, ymin, ymax = region.bbox()
    side = max(xmax - xmin, ymax - ymin) * (1.0 + 1e-9)
    origin = complex(xmin, ymin)
    sqrt2 = math.sqrt(2.0)
    lvl_res = max(0, math.ceil(math.log2(side * sqrt2 / resolution)))
    lvl_grade = max(0, math.ceil(math.log2(side * sqrt2 * GRADING / region.eps)) + 1)
    max_level = min(max(lvl_res, lvl_grade), MAX_LEVEL)
    if max(lvl_res, lvl_grade) > MAX_LEVEL:
        raise BudgetError(f"cover would need more than {MAX_LEVEL} quadtree levels")
    lip = region.lipschitz
    hx, hy, hr = _holes_arrays(region.critical_holes() + tuple(holes))
    kind, p = region._kernel_params()

    ix = np.zeros(1, dtype=np.int64)
    iy = np.zeros(1, dtype=np.int64)
    leaves_ix, leaves_iy, leaves_lvl, leaves_partial = [], [], [], []
    n_leaves = 0
    for level in range(max_level + 1):
        if not ix.size:
            break
        s = side / 2.0**level
        cx = origin.real + (ix + 0.5) * s
        cy = origin.imag + (iy + 0.5) * s
        half = 0.5 * s * sqrt2
        phi = kernels.region_phi(cx, cy, kind, p, hx, hy, hr)
        keep = phi >= -lip * half
        ix, iy, phi, cx, cy = ix[keep], iy[keep], phi[keep], cx[keep], cy[keep]
        if region.setting == "disc":
            dmax = 1.0 - np.sqrt(cx * cx + cy * cy) + half
        else:
            dmax = cy + half
        target = np.minimum(resolution, dmax / GRADING)
        leaf = (s * sqrt2 <= target) | (level == max_level)
        n_leaves += int(leaf.sum())
        n_split = int((~leaf).sum())
        if n_leaves + 4 * n_split > max_cells:
            raise BudgetError(f"cover exceeds max_cells={max_cells} at level {level}")
        shift = max_level - level
        leaves_ix.append(ix[leaf] << shift)
        leaves_iy.append(iy[leaf] << shift)
        leaves_lvl.append(np.full(int(leaf.sum()), level, dtype=np.int64))
        leaves_partial.append(~(phi[leaf] > lip * half))
        sx, sy = 2 * ix[~leaf], 2 * iy[~leaf]
        ix = np.concatenate([sx, sx + 1, sx, sx + 1])
        iy = np.concatenate([sy, sy, sy + 1, sy + 1])
    lix = np.concatenate(leaves_ix)
    liy = np.concatenate(leaves_iy)
    llv = np.concatenate(leaves_lvl)
    order = np.lexsort((lix, liy))
    return CellCover(
        region=region,
        resolution=float(resolution),
        origin=origin,
        side=side,
        max_level=max_level,
        ix=lix[order],
        iy=liy[order],
        isize=(np.int64(1) << (max_level - llv))[order],
        partial=np.concatenate(leaves_partial)[order],
        holes=tuple(holes),
    )
