"""Pure-numpy reference implementations of the hot kernels.

Each function here has a numba twin in ``_numba.py`` with the same signature
and the same floating-point operation order, so both backends agree bitwise.
"""
import numpy as np

REGION_DISC = 0
REGION_HALFPLANE = 1
REGION_BOX = 2


def pairwise_sum(values):
    """Fixed-shape tree reduction: adjacent pairs are summed level by level."""
    buf = np.array(values, dtype=np.float64).ravel()
    n = buf.shape[0]
    if n == 0:
        return 0.0
    while n > 1:
        half = n // 2
        merged = buf[0 : 2 * half : 2] + buf[1 : 2 * half : 2]
        if n % 2:
            merged = np.append(merged, buf[n - 1])
        buf = merged
        n = buf.shape[0]
    return float(buf[0])


def region_phi(x, y, kind, p, hx, hy, hr):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kind == REGION_DISC:
        d = 1.0 - np.sqrt(x * x + y * y)
        dx = x - p[0]
        dy = y - p[1]
        phi = np.minimum(p[2] - d, d - p[3] * np.sqrt(dx * dx + dy * dy))
        phi = np.minimum(phi, d - p[4])
    elif kind == REGION_HALFPLANE:
        d = y
        dx = x - p[0]
        phi = np.minimum(p[1] - d, d - p[2] * np.sqrt(dx * dx + d * d))
        phi = np.minimum(phi, d - p[3])
    else:
        phi = np.minimum(x - p[0], p[1] - x)
        phi = np.minimum(phi, np.minimum(y - p[2], p[3] - y))
    for k in range(len(hr)):
        ex = x - hx[k]
        ey = y - hy[k]
        phi = np.minimum(phi, np.sqrt(ex * ex + ey * ey) - hr[k])
    return phi


def _next_position(ptr):
    n_pos = int(ptr[-1])
    nxt = np.arange(1, n_pos + 1, dtype=np.int64)
    last = ptr[1:] - 1
    nxt[last] = ptr[:-1]
    return nxt


def crossing_counts(ptr, vid, vsign):
    """Number of sign changes along each cell's boundary cycle."""
    ptr = np.asarray(ptr, dtype=np.int64)
    n_cells = ptr.shape[0] - 1
    if n_cells == 0:
        return np.zeros(0, dtype=np.int64)
    nxt = _next_position(ptr)
    flip = vsign[vid] != vsign[vid[nxt]]
    csum = np.concatenate(([0], np.cumsum(flip, dtype=np.int64)))
    return csum[ptr[1:]] - csum[ptr[:-1]]


def pair_crossings(ptr, vid, eid, vsign, center_positive):
    """Join the crossing edges of each cell into segments.

    Crossings are visited counterclockwise; each boundary arc whose sign is
    opposite to the cell-centre sign is cut off by one segment. Cells with
    exactly two crossings ignore the centre sign.
    """
    ptr = np.asarray(ptr, dtype=np.int64)
    n_cells = ptr.shape[0] - 1
    empty = np.zeros(0, dtype=np.int64)
    if n_cells == 0:
        return empty, empty, empty
    nxt = _next_position(ptr)
    flip = vsign[vid] != vsign[vid[nxt]]
    pos = np.flatnonzero(flip)
    cell_of = np.searchsorted(ptr, pos, side="right") - 1
    counts = np.bincount(cell_of, minlength=n_cells)
    seg_a, seg_b, seg_c = [], [], []

    two = counts[cell_of] == 2
    p2 = pos[two].reshape(-1, 2)
    c2 = cell_of[two][0::2]
    # arc after the first crossing negative -> pair (first, second); the other
    # ordering otherwise. Matches the loop rule with a positive centre.
    neg_first = ~vsign[vid[nxt[p2[:, 0]]]]
    a = np.where(neg_first, eid[p2[:, 0]], eid[p2[:, 1]])
    b = np.where(neg_first, eid[p2[:, 1]], eid[p2[:, 0]])
    seg_a.append(a)
    seg_b.append(b)
    seg_c.append(c2)

    multi = np.flatnonzero(counts > 2)
    if multi.size:
        starts = np.searchsorted(cell_of, multi, side="left")
        ma, mb, mc = [], [], []
        for c, s in zip(multi, starts):
            q = pos[s : s + counts[c]]
            target = not center_positive[c]
            n = q.shape[0]
            for i in range(n):
                if bool(vsign[vid[nxt[q[i]]]]) == target:
                    ma.append(eid[q[i]])
                    mb.append(eid[q[(i + 1) % n]])
                    mc.append(c)
        seg_a.append(np.asarray(ma, dtype=np.int64))
        seg_b.append(np.asarray(mb, dtype=np.int64))
        seg_c.append(np.asarray(mc, dtype=np.int64))

    seg_a = np.concatenate(seg_a).astype(np.int64)
    seg_b = np.concatenate(seg_b).astype(np.int64)
    seg_c = np.concatenate(seg_c).astype(np.int64)
    order = np.argsort(seg_c, kind="stable")
    return seg_a[order], seg_b[order], seg_c[order]


def walk_chains(n_nodes, seg_a, seg_b):
    """Stitch segments into chains.

    Returns ``(nodes, segs, node_ptr, seg_ptr, closed)``. Open chains are
    emitted first (started from the lowest-numbered free end), then cycles
    (started from their lowest-numbered node).
    """
    nb = -np.ones((n_nodes, 2), dtype=np.int64)
    for s in range(len(seg_a)):
        for node in (seg_a[s], seg_b[s]):
            slot = 0 if nb[node, 0] < 0 else 1
            nb[node, slot] = s
    degree = (nb >= 0).sum(axis=1)
    used = np.zeros(len(seg_a), dtype=bool)
    seen = np.zeros(n_nodes, dtype=bool)
    nodes, segs, node_ptr, seg_ptr, closed = [], [], [0], [0], []

    def walk(start):
        cur = start
        is_closed = False
        while True:
            nodes.append(cur)
            seen[cur] = True
            nxt_seg = -1
            for slot in range(2):
                s = nb[cur, slot]
                if s >= 0 and not used[s]:
                    nxt_seg = s
                    break
            if nxt_seg < 0:
                break
            used[nxt_seg] = True
            segs.append(nxt_seg)
            other = seg_b[nxt_seg] if seg_a[nxt_seg] == cur else seg_a[nxt_seg]
            if other == start:
                is_closed = True
                break
            cur = other
        node_ptr.append(len(nodes))
        seg_ptr.append(len(segs))
        closed.append(is_closed)

    for start in np.flatnonzero(degree == 1):
        if not seen[start]:
            walk(start)
    for start in np.flatnonzero(degree == 2):
        if not seen[start]:
            walk(start)
    return (
        np.asarray(nodes, dtype=np.int64),
        np.asarray(segs, dtype=np.int64),
        np.asarray(node_ptr, dtype=np.int64),
        np.asarray(seg_ptr, dtype=np.int64),
        np.asarray(closed, dtype=bool),
    )
