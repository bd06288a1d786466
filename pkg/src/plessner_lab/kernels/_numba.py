"""numba twins of the kernels in ``_numpy.py``.

Loops mirror the numpy operation order so results match bitwise.
"""
import numpy as np
from numba import njit

REGION_DISC = 0
REGION_HALFPLANE = 1
REGION_BOX = 2


@njit(cache=True, nogil=True)
def _pairwise_sum(values):
    n = values.shape[0]
    if n == 0:
        return 0.0
    buf = values.copy()
    while n > 1:
        half = n // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if n % 2:
            buf[half] = buf[n - 1]
            n = half + 1
        else:
            n = half
    return buf[0]


def pairwise_sum(values):
    return float(_pairwise_sum(np.ascontiguousarray(values, dtype=np.float64).ravel()))


@njit(cache=True, nogil=True)
def _region_phi(x, y, kind, p, hx, hy, hr):
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        xi = x[i]
        yi = y[i]
        if kind == 0:
            d = 1.0 - np.sqrt(xi * xi + yi * yi)
            dx = xi - p[0]
            dy = yi - p[1]
            phi = min(p[2] - d, d - p[3] * np.sqrt(dx * dx + dy * dy))
            phi = min(phi, d - p[4])
        elif kind == 1:
            d = yi
            dx = xi - p[0]
            phi = min(p[1] - d, d - p[2] * np.sqrt(dx * dx + d * d))
            phi = min(phi, d - p[3])
        else:
            phi = min(xi - p[0], p[1] - xi)
            phi = min(phi, min(yi - p[2], p[3] - yi))
        for k in range(hr.shape[0]):
            ex = xi - hx[k]
            ey = yi - hy[k]
            phi = min(phi, np.sqrt(ex * ex + ey * ey) - hr[k])
        out[i] = phi
    return out


def region_phi(x, y, kind, p, hx, hy, hr):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    shape = np.broadcast_shapes(x.shape, y.shape)
    xb = np.ascontiguousarray(np.broadcast_to(x, shape)).ravel()
    yb = np.ascontiguousarray(np.broadcast_to(y, shape)).ravel()
    out = _region_phi(
        xb,
        yb,
        int(kind),
        np.asarray(p, dtype=np.float64),
        np.asarray(hx, dtype=np.float64),
        np.asarray(hy, dtype=np.float64),
        np.asarray(hr, dtype=np.float64),
    )
    return out.reshape(shape)


@njit(cache=True, nogil=True)
def _crossing_counts(ptr, vid, vsign):
    n_cells = ptr.shape[0] - 1
    counts = np.zeros(n_cells, dtype=np.int64)
    for c in range(n_cells):
        lo = ptr[c]
        hi = ptr[c + 1]
        m = 0
        for k in range(lo, hi):
            nk = k + 1 if k + 1 < hi else lo
            if vsign[vid[k]] != vsign[vid[nk]]:
                m += 1
        counts[c] = m
    return counts


def crossing_counts(ptr, vid, vsign):
    return _crossing_counts(
        np.asarray(ptr, dtype=np.int64), np.asarray(vid, dtype=np.int64), np.asarray(vsign, dtype=np.bool_)
    )


@njit(cache=True, nogil=True)
def _pair_crossings(ptr, vid, eid, vsign, center_positive):
    n_cells = ptr.shape[0] - 1
    cap = 0
    for c in range(n_cells):
        cap += (ptr[c + 1] - ptr[c]) // 2
    seg_a = np.empty(cap, dtype=np.int64)
    seg_b = np.empty(cap, dtype=np.int64)
    seg_c = np.empty(cap, dtype=np.int64)
    q = np.empty(64, dtype=np.int64)
    m = 0
    for c in range(n_cells):
        lo = ptr[c]
        hi = ptr[c + 1]
        if hi - lo > q.shape[0]:
            q = np.empty(hi - lo, dtype=np.int64)
        n = 0
        for k in range(lo, hi):
            nk = k + 1 if k + 1 < hi else lo
            if vsign[vid[k]] != vsign[vid[nk]]:
                q[n] = k
                n += 1
        if n == 0:
            continue
        target = False
        if n > 2:
            target = not center_positive[c]
        for i in range(n):
            k = q[i]
            nk = k + 1 if k + 1 < hi else lo
            if vsign[vid[nk]] == target:
                seg_a[m] = eid[k]
                seg_b[m] = eid[q[(i + 1) % n]]
                seg_c[m] = c
                m += 1
    return seg_a[:m], seg_b[:m], seg_c[:m]


def pair_crossings(ptr, vid, eid, vsign, center_positive):
    return _pair_crossings(
        np.asarray(ptr, dtype=np.int64),
        np.asarray(vid, dtype=np.int64),
        np.asarray(eid, dtype=np.int64),
        np.asarray(vsign, dtype=np.bool_),
        np.asarray(center_positive, dtype=np.bool_),
    )


@njit(cache=True, nogil=True)
def _walk_one(start, nb, seg_a, seg_b, used, seen, nodes, segs, n_nodes_out, n_segs_out):
    cur = start
    closed = False
    while True:
        nodes[n_nodes_out] = cur
        n_nodes_out += 1
        seen[cur] = True
        nxt = -1
        for slot in range(2):
            s = nb[cur, slot]
            if s >= 0 and not used[s]:
                nxt = s
                break
        if nxt < 0:
            break
        used[nxt] = True
        segs[n_segs_out] = nxt
        n_segs_out += 1
        other = seg_b[nxt] if seg_a[nxt] == cur else seg_a[nxt]
        if other == start:
            closed = True
            break
        cur = other
    return n_nodes_out, n_segs_out, closed


@njit(cache=True, nogil=True)
def _walk_chains(n_nodes, seg_a, seg_b):
    n_seg = seg_a.shape[0]
    nb = -np.ones((n_nodes, 2), dtype=np.int64)
    for s in range(n_seg):
        for j in range(2):
            node = seg_a[s] if j == 0 else seg_b[s]
            if nb[node, 0] < 0:
                nb[node, 0] = s
            else:
                nb[node, 1] = s
    used = np.zeros(n_seg, dtype=np.bool_)
    seen = np.zeros(n_nodes, dtype=np.bool_)
    nodes = np.empty(n_nodes, dtype=np.int64)
    segs = np.empty(n_seg, dtype=np.int64)
    node_ptr = np.zeros(n_nodes + 1, dtype=np.int64)
    seg_ptr = np.zeros(n_nodes + 1, dtype=np.int64)
    closed = np.zeros(n_nodes, dtype=np.bool_)
    nn = 0
    ns = 0
    nc = 0
    for want in (1, 2):
        for start in range(n_nodes):
            deg = (nb[start, 0] >= 0) + (nb[start, 1] >= 0)
            if deg != want or seen[start]:
                continue
            nn, ns, cl = _walk_one(start, nb, seg_a, seg_b, used, seen, nodes, segs, nn, ns)
            closed[nc] = cl
            nc += 1
            node_ptr[nc] = nn
            seg_ptr[nc] = ns
    return nodes[:nn], segs[:ns], node_ptr[: nc + 1], seg_ptr[: nc + 1], closed[:nc]


def walk_chains(n_nodes, seg_a, seg_b):
    return _walk_chains(
        int(n_nodes), np.asarray(seg_a, dtype=np.int64), np.asarray(seg_b, dtype=np.int64)
    )
