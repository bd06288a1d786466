"""Level curves {|f - w| = r} and {h = t} inside a truncated region.

Marching squares runs on the leaves of the graded quadtree from
``geometry.cover_region``. Hanging nodes are handled by treating each leaf as
a polygon whose boundary includes every neighbouring leaf corner on it; the
elementary edges between consecutive boundary vertices are shared by
neighbours, so crossings (found once per edge by bisection) stitch exactly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CriticalProximityError, InvalidParamsError, NonConvergenceError, ProjectionFailureError
from .geometry import DEFAULT_MAX_CELLS, cover_region

DEFAULT_RESOLUTION = 1.0 / 256.0
VERTEX_TOL = 1e-10
GRAD_FLOOR = 1e-12


@dataclass(frozen=True)
class LevelTarget:
    mode: str
    w: complex = 0j
    r: float | None = None
    t: float | None = None

    def __post_init__(self):
        if self.mode == "circle-preimage":
            if self.r is None or not self.r > 0.0:
                raise InvalidParamsError("circle-preimage target needs r > 0")
            object.__setattr__(self, "w", complex(self.w))
            object.__setattr__(self, "r", float(self.r))
        elif self.mode == "harmonic-level":
            if self.t is None or not math.isfinite(self.t):
                raise InvalidParamsError("harmonic-level target needs a finite level t")
            object.__setattr__(self, "t", float(self.t))
        else:
            raise InvalidParamsError(f"unknown target mode {self.mode!r}")

    @classmethod
    def circle(cls, w, r):
        return cls("circle-preimage", w=complex(w), r=float(r))

    @classmethod
    def harmonic(cls, t):
        return cls("harmonic-level", t=float(t))

    def g(self, value):
        if self.mode == "circle-preimage":
            d = value - self.w
            with np.errstate(over="ignore", invalid="ignore"):
                out = d.real * d.real + d.imag * d.imag - self.r * self.r
            return np.where(np.isnan(out), np.inf, out)
        return value - self.t

    def grad_g(self, value, deriv):
        """Packed gradient dg/dx + i dg/dy."""
        if self.mode == "circle-preimage":
            with np.errstate(over="ignore", invalid="ignore"):
                return 2.0 * (value - self.w) * np.conj(deriv)
        return deriv

    def to_dict(self):
        if self.mode == "circle-preimage":
            return {"mode": self.mode, "w": [self.w.real, self.w.imag], "r": self.r, "t": None}
        return {"mode": self.mode, "w": None, "r": None, "t": self.t}


def _check_target(fn, target):
    want = "harmonic-level" if fn.is_harmonic else "circle-preimage"
    if target.mode != want:
        raise InvalidParamsError(f"{fn.id} ({fn.kind}) needs a {want} target, got {target.mode}")


def fn_key(fn):
    return (fn.id, tuple(fn.params), fn.truncation, fn.scale)


@dataclass
class LevelPolyline:
    """Piecewise-linear approximation of one level-curve component.

    Per-segment arrays have length ``n_segments`` (= n vertices for closed
    polylines, n - 1 otherwise).
    """

    vertices: np.ndarray
    closed: bool
    weights: np.ndarray
    residuals: np.ndarray
    cell_size: np.ndarray
    source: tuple = field(default=None)
    target: LevelTarget | None = None

    @property
    def n_segments(self):
        n = self.vertices.shape[0]
        return n if self.closed else max(n - 1, 0)

    def segment_ends(self):
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1)
        return v[:-1], v[1:]

    def segment_lengths(self):
        a, b = self.segment_ends()
        return np.abs(b - a)

    @property
    def length(self):
        return kernels.pairwise_sum(self.segment_lengths())

    @property
    def weighted_length(self):
        return kernels.pairwise_sum(self.segment_lengths() * self.weights)

    def split(self, k):
        """Split an open polyline at vertex ``k`` into two open polylines."""
        if self.closed:
            raise InvalidParamsError("split needs an open polyline")
        n = self.vertices.shape[0]
        if not 0 < k < n - 1:
            raise InvalidParamsError("split vertex must be interior")

        def part(vs, ve, ss, se):
            return LevelPolyline(
                self.vertices[vs:ve].copy(), False, self.weights[ss:se].copy(),
                self.residuals[ss:se].copy(), self.cell_size[ss:se].copy(), self.source, self.target,
            )

        return part(0, k + 1, 0, k), part(k, n, k, n - 1)


def _segment_data(fn, target, a, b):
    mid = 0.5 * (a + b)
    value, deriv = fn.evaluate(mid)
    return np.abs(deriv), np.abs(target.g(value))


def _make_polyline(fn, target, verts, closed, cell_size):
    verts = np.asarray(verts, dtype=np.complex128)
    if closed:
        a, b = verts, np.roll(verts, -1)
    else:
        a, b = verts[:-1], verts[1:]
    w, res = _segment_data(fn, target, a, b)
    return LevelPolyline(verts, bool(closed), w, res, np.asarray(cell_size, dtype=np.float64), fn_key(fn), target)


class LevelMesh:
    """Leaf boundary polygons (CSR) and elementary edges of a cover."""

    def __init__(self, cover):
        self.cover = cover
        n = cover.n_cells
        M = np.int64((1 << cover.max_level) + 1)
        x, y, s = cover.ix, cover.iy, cover.isize
        cxs = (x, x + s, x + s, x)
        cys = (y, y, y + s, y + s)
        corner_keys = [cxs[j] * M + cys[j] for j in range(4)]
        keys = np.unique(np.concatenate(corner_keys)) if n else np.zeros(0, dtype=np.int64)

        # interior vertices of each side, found by recursive midpoint lookup
        dirs = ((1, 0), (0, 1), (-1, 0), (0, -1))
        int_cell, int_side, int_param, int_key = [], [], [], []
        for j in range(4):
            dx, dy = dirs[j]
            cell = np.arange(n, dtype=np.int64)
            a = np.zeros(n, dtype=np.int64)
            b = s.copy()
            while cell.size:
                ok = (b - a) >= 2
                cell, a, b = cell[ok], a[ok], b[ok]
                if not cell.size:
                    break
                m = (a + b) // 2
                k = (cxs[j][cell] + dx * m) * M + (cys[j][cell] + dy * m)
                pos = np.searchsorted(keys, k)
                pos = np.minimum(pos, keys.size - 1)
                found = keys[pos] == k
                cell, a, b, m, k = cell[found], a[found], b[found], m[found], k[found]
                int_cell.append(cell)
                int_side.append(np.full(cell.size, j, dtype=np.int64))
                int_param.append(m)
                int_key.append(k)
                cell = np.concatenate([cell, cell])
                a, b = np.concatenate([a, m]), np.concatenate([m, b])
        int_cell = np.concatenate(int_cell) if int_cell else np.zeros(0, dtype=np.int64)
        int_side = np.concatenate(int_side) if int_side else np.zeros(0, dtype=np.int64)
        int_param = np.concatenate(int_param) if int_param else np.zeros(0, dtype=np.int64)
        int_key = np.concatenate(int_key) if int_key else np.zeros(0, dtype=np.int64)

        per_side = np.zeros((n, 4), dtype=np.int64)
        np.add.at(per_side, (int_cell, int_side), 1)
        counts = 4 + per_side.sum(axis=1)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        side_start = ptr[:-1, None] + np.arange(4)[None, :] + np.concatenate(
            [np.zeros((n, 1), dtype=np.int64), np.cumsum(per_side, axis=1)[:, :3]], axis=1
        )
        total = int(ptr[-1])
        vkey = np.empty(total, dtype=np.int64)
        for j in range(4):
            vkey[side_start[:, j]] = corner_keys[j]
        if int_cell.size:
            order = np.lexsort((int_param, int_side, int_cell))
            ic, isd, ik = int_cell[order], int_side[order], int_key[order]
            grp = ic * 4 + isd
            first = np.r_[True, grp[1:] != grp[:-1]]
            run_start = np.flatnonzero(first)
            rank = np.arange(ic.size) - np.repeat(run_start, np.diff(np.r_[run_start, ic.size]))
            vkey[side_start[ic, isd] + 1 + rank] = ik

        vid = np.searchsorted(keys, vkey)
        nxt = np.arange(1, total + 1, dtype=np.int64)
        if n:
            nxt[ptr[1:] - 1] = ptr[:-1]
        va, vb = vid, vid[nxt]
        lo, hi = np.minimum(va, vb), np.maximum(va, vb)
        nv = np.int64(keys.size)
        ekeys, eid = np.unique(lo * nv + hi, return_inverse=True)

        u = cover.unit
        self.vertex_xy = cover.origin + (keys // M) * u + 1j * ((keys % M) * u)
        self.ptr = ptr
        self.vid = vid
        self.eid = eid.astype(np.int64).ravel()
        self.edge_a = ekeys // nv
        self.edge_b = ekeys % nv
        self.n_vertices = int(keys.size)
        self.n_edges = int(ekeys.size)


class LevelField:
    """A cover, its mesh and the function sampled at the mesh vertices.

    Reused across many targets (co-area bands, profiles, scans): only the
    level function changes per target.
    """

    def __init__(self, fn, region, resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS, cover=None):
        if fn.setting != ("halfplane" if region.setting in ("halfplane", "box") else "disc"):
            raise InvalidParamsError(f"{fn.id} lives on the {fn.setting}, region is {region.setting}")
        self.fn = fn
        self.region = region
        holes = tuple((complex(p), fn.pole_exclusion) for p in fn.poles)
        self.cover = cover if cover is not None else cover_region(region, resolution, max_cells, holes=holes)
        self.holes = holes
        self.mesh = LevelMesh(self.cover)
        with np.errstate(all="ignore"):
            self.values, _ = fn.evaluate(self.mesh.vertex_xy)

    def phi(self, z):
        return self.region.phi(z, self.holes)

    def extract(self, target, clip=True):
        fn = self.fn
        _check_target(fn, target)
        mesh = self.mesh
        gv = target.g(self.values)
        vsign = gv > 0.0
        counts = kernels.crossing_counts(mesh.ptr, mesh.vid, vsign)
        if not np.any(counts):
            return []
        center_pos = np.ones(counts.shape[0], dtype=bool)
        saddle = np.flatnonzero(counts > 2)
        if saddle.size:
            zc = self.cover.centers[saddle]
            vc, _ = fn.evaluate(zc)
            center_pos[saddle] = target.g(vc) > 0.0
        seg_a, seg_b, seg_c = kernels.pair_crossings(mesh.ptr, mesh.vid, mesh.eid, vsign, center_pos)
        edges = np.unique(np.concatenate([seg_a, seg_b]))
        node_a = np.searchsorted(edges, seg_a)
        node_b = np.searchsorted(edges, seg_b)
        pts, grad = _edge_crossings(fn, target, mesh.vertex_xy[mesh.edge_a[edges]],
                                    mesh.vertex_xy[mesh.edge_b[edges]], gv[mesh.edge_a[edges]])
        if np.any(np.abs(grad) < GRAD_FLOOR):
            bad = pts[np.abs(grad) < GRAD_FLOOR][0]
            raise CriticalProximityError(f"level set passes within grid resolution of a critical point near {bad}")
        nodes, segs, node_ptr, seg_ptr, closed = kernels.walk_chains(edges.size, node_a, node_b)
        diam = self.cover.diameters
        polys = []
        for c in range(closed.shape[0]):
            nv = pts[nodes[node_ptr[c] : node_ptr[c + 1]]]
            cs = diam[seg_c[segs[seg_ptr[c] : seg_ptr[c + 1]]]]
            if nv.shape[0] < 2:
                continue
            polys.append(_make_polyline(fn, target, nv, bool(closed[c]), cs))
        if clip:
            polys = clip_polylines(polys, fn, target, self.phi)
        return polys


def _edge_crossings(fn, target, za, zb, ga, max_iter=100):
    """Bisection on each edge for g = 0; returns points and |grad g| there."""
    lo = np.zeros(za.shape[0])
    hi = np.ones(za.shape[0])
    neg_at_lo = ~(ga > 0.0)
    t = np.full(za.shape[0], 0.5)
    active = np.ones(za.shape[0], dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if not idx.size:
            break
        t[idx] = 0.5 * (lo[idx] + hi[idx])
        v, _ = fn.evaluate(za[idx] + t[idx] * (zb[idx] - za[idx]))
        gm = target.g(v)
        done = (np.abs(gm) <= VERTEX_TOL) | (hi[idx] - lo[idx] <= 4e-16)
        # g(mid) has the sign of g(lo): advance lo, else pull hi
        same_as_lo = (gm > 0.0) != neg_at_lo[idx]
        lo[idx] = np.where(same_as_lo & ~done, t[idx], lo[idx])
        hi[idx] = np.where(~same_as_lo & ~done, t[idx], hi[idx])
        active[idx[done]] = False
    pts = za + t * (zb - za)
    v, d = fn.evaluate(pts)
    return pts, np.abs(target.grad_g(v, d))


def _project_along_normal(fn, target, p, reach, max_iter=60):
    """Move each point of ``p`` onto g = 0 along the local gradient direction."""
    v, d = fn.evaluate(p)
    grad = target.grad_g(v, d)
    norm = np.abs(grad)
    if np.any(~(norm > 0.0)):
        raise ProjectionFailureError("vanishing gradient at a refinement point")
    n = grad / norm
    s = np.zeros(p.shape[0])
    gcur = target.g(v)
    ok = np.abs(gcur) <= VERTEX_TOL
    for _ in range(max_iter):
        idx = np.flatnonzero(~ok)
        if not idx.size:
            break
        q = p[idx] + s[idx] * n[idx]
        vq, dq = fn.evaluate(q)
        gq = target.g(vq)
        slope = (target.grad_g(vq, dq) * np.conj(n[idx])).real
        with np.errstate(divide="ignore", invalid="ignore"):
            step = gq / slope
        s[idx] = s[idx] - np.where(np.isfinite(step), step, 0.0)
        conv = (np.abs(gq) <= VERTEX_TOL) | (np.abs(step) <= 1e-15 * (1.0 + np.abs(s[idx])))
        ok[idx[conv]] = True
        if np.any(np.abs(s[idx]) > reach[idx]):
            break
    q = p + s * n
    gq = target.g(fn.evaluate(q)[0])
    bad = (~(np.abs(s) <= reach)) | (~(np.abs(gq) <= max(VERTEX_TOL, 0.0) * 1e3))
    if np.any(bad):
        q[bad] = _bisect_normal(fn, target, p[bad], n[bad], reach[bad])
    return q


def _bisect_normal(fn, target, p, n, reach, iters=200):
    ga = target.g(fn.evaluate(p - reach * n)[0])
    gb = target.g(fn.evaluate(p + reach * n)[0])
    if np.any((ga > 0.0) == (gb > 0.0)):
        raise ProjectionFailureError("normal projection left the owning cell without bracketing the level set")
    lo, hi = -reach.copy(), reach.copy()
    neg_lo = ~(ga > 0.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = target.g(fn.evaluate(p + mid * n)[0])
        same = (gm > 0.0) != neg_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
        if np.all(np.abs(gm) <= VERTEX_TOL) or np.all(hi - lo <= 1e-16 * (1 + np.abs(mid))):
            break
    return p + 0.5 * (lo + hi) * n


def refine(poly: LevelPolyline, fn, target, factor: int = 2) -> LevelPolyline:
    """Subdivide every segment ``factor`` times, projecting new vertices onto the level set."""
    return refine_all([poly], fn, target, factor)[0]


def refine_all(polys, fn, target, factor=2):
    if int(factor) != factor or factor < 2:
        raise InvalidParamsError("refine factor must be an integer >= 2")
    factor = int(factor)
    if not polys:
        return []
    starts, ends, reach, owner = [], [], [], []
    for i, p in enumerate(polys):
        a, b = p.segment_ends()
        starts.append(a)
        ends.append(b)
        reach.append(p.cell_size)
        owner.append(np.full(a.shape[0], i))
    a = np.concatenate(starts)
    b = np.concatenate(ends)
    reach = np.concatenate(reach)
    ks = np.arange(1, factor) / factor
    inner = a[:, None] + ks[None, :] * (b - a)[:, None]
    proj = _project_along_normal(fn, target, inner.ravel(), np.repeat(reach, factor - 1)).reshape(inner.shape)
    out = []
    off = 0
    for p in polys:
        m = p.n_segments
        seg_start = p.vertices[:m] if p.closed else p.vertices[:-1]
        block = np.concatenate([seg_start[:, None], proj[off : off + m]], axis=1).ravel()
        if not p.closed:
            block = np.append(block, p.vertices[-1])
        out.append(_make_polyline(fn, target, block, p.closed, np.repeat(p.cell_size, factor)))
        off += m
    return out


def _boundary_points(fn, target, phi, z_in, z_out):
    """Points on the region boundary and on the level set, one per chord.

    Bisection on phi along the chord, then Newton on the 2x2 system
    (g, phi); chord points are kept where Newton does not settle.
    """
    lo = np.zeros(z_in.shape[0])
    hi = np.ones(z_in.shape[0])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        inside = phi(z_in + mid * (z_out - z_in)) > 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    q0 = z_in + lo * (z_out - z_in)
    q = q0.copy()
    chord = np.abs(z_out - z_in)
    h = 1e-7
    for _ in range(30):
        v, d = fn.evaluate(q)
        g = target.g(v)
        gg = target.grad_g(v, d)
        ph = phi(q)
        dpx = (phi(q + h) - phi(q - h)) / (2 * h)
        dpy = (phi(q + 1j * h) - phi(q - 1j * h)) / (2 * h)
        det = gg.real * dpy - gg.imag * dpx
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = (-g * dpy + ph * gg.imag) / det
            dy = (-gg.real * ph + dpx * g) / det
        step = np.where(np.isfinite(dx) & np.isfinite(dy), dx + 1j * dy, 0.0)
        q = q + step
        if np.all(np.abs(step) <= 1e-16 * (1.0 + np.abs(q))):
            break
    v, _ = fn.evaluate(q)
    good = (np.abs(target.g(v)) <= VERTEX_TOL) & (np.abs(q - q0) <= chord) & (np.abs(phi(q)) <= 1e-9)
    return np.where(good, q, q0)


def clip_polylines(polys, fn, target, phi):
    """Restrict polylines to {phi > 0}; exits split polylines into open pieces."""
    if not polys:
        return []
    jobs = []  # (inside vertex, outside vertex, cell size of the chord)
    plans = []
    for p in polys:
        ins = phi(p.vertices) > 0.0
        n = p.vertices.shape[0]
        if ins.all():
            plans.append((p, None))
            continue
        if not ins.any():
            continue
        if p.closed:
            order = (np.arange(n) + int(np.flatnonzero(~ins)[0])) % n
        else:
            order = np.arange(n)
        ins_o = ins[order]
        runs = []
        i = 0
        while i < n:
            if not ins_o[i]:
                i += 1
                continue
            j = i
            while j + 1 < n and ins_o[j + 1]:
                j += 1
            entry = exit_ = None
            if i > 0:
                entry = len(jobs)
                jobs.append((p.vertices[order[i]], p.vertices[order[i - 1]], p.cell_size[order[i - 1]]))
            if j < n - 1 or p.closed:
                nxt = order[j + 1] if j < n - 1 else order[0]
                exit_ = len(jobs)
                jobs.append((p.vertices[order[j]], p.vertices[nxt], p.cell_size[order[j]]))
            runs.append((order[i : j + 1], entry, exit_))
            i = j + 1
        plans.append((p, runs))
    if jobs:
        z_in = np.array([j[0] for j in jobs], dtype=np.complex128)
        z_out = np.array([j[1] for j in jobs], dtype=np.complex128)
        bpts = _boundary_points(fn, target, phi, z_in, z_out)
    out = []
    for p, runs in plans:
        if runs is None:
            out.append(p)
            continue
        for idx, entry, exit_ in runs:
            verts = list(p.vertices[idx])
            sizes = list(p.cell_size[idx[:-1]])
            if entry is not None:
                verts.insert(0, bpts[entry])
                sizes.insert(0, jobs[entry][2])
            if exit_ is not None:
                verts.append(bpts[exit_])
                sizes.append(jobs[exit_][2])
            if len(verts) < 2:
                continue
            out.append(_make_polyline(fn, target, verts, False, sizes))
    return out


def exclude_critical(fn, region, rho_c):
    """``region`` with discs of radius ``rho_c`` removed around the critical points of ``fn``."""
    if not rho_c > 0.0:
        return region
    from .funcorpus import critical_points

    try:
        crit = critical_points(fn, region)
    except NonConvergenceError:
        # steep functions near the vertex defeat the exclusion test; the
        # extraction still refuses ambiguous cells on its own
        crit = ()
    return region.with_critical(crit, rho_c)


def extract(fn, region, target, resolution=DEFAULT_RESOLUTION, max_cells=DEFAULT_MAX_CELLS):
    """Level-set polylines of ``target`` for ``fn`` inside ``region``."""
    _check_target(fn, target)
    return LevelField(fn, region, resolution, max_cells).extract(target)


def write_polylines_csv(polys, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "component_id"])
        for cid, p in enumerate(polys):
            for z in p.vertices:
                w.writerow([repr(float(z.real)), repr(float(z.imag)), cid])
