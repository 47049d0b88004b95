# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled rasterization and clustering kernels.

Semantics are defined by the NumPy fallback in fusecount._kernels.pure;
the two backends must stay bit-identical (enforced by the kernel parity
tests).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF CELL_BITS = 21
DEF CELL_BIAS = 1 << (CELL_BITS - 1)


def splat_min_depth(int[::1] u, int[::1] v, float[::1] z, int[::1] radii,
                    int width, int height):
    """Rasterize points as filled discs, keeping the minimum depth per pixel."""
    buf_arr = np.full((height, width), np.inf, dtype=np.float32)
    cdef float[:, ::1] buf = buf_arr
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef int r, cx, cy, x, y, x0, x1, y0, y1, dx, dy
    cdef float depth
    for i in range(n):
        cx = u[i]
        cy = v[i]
        r = radii[i]
        depth = z[i]
        y0 = cy - r if cy - r > 0 else 0
        y1 = cy + r if cy + r < height - 1 else height - 1
        x0 = cx - r if cx - r > 0 else 0
        x1 = cx + r if cx + r < width - 1 else width - 1
        for y in range(y0, y1 + 1):
            dy = y - cy
            for x in range(x0, x1 + 1):
                dx = x - cx
                if dx * dx + dy * dy <= r * r:
                    if depth < buf[y, x]:
                        buf[y, x] = depth
    return buf_arr


def splat_winner(int[::1] u, int[::1] v, float[::1] z, int[::1] radii,
                 int[::1] payload, int width, int height):
    """Winner-takes-all rasterization; ties go to the lowest point index."""
    depth_arr = np.full((height, width), np.inf, dtype=np.float32)
    label_arr = np.zeros((height, width), dtype=np.int32)
    cdef float[:, ::1] buf = depth_arr
    cdef int[:, ::1] lab = label_arr
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef int r, cx, cy, x, y, x0, x1, y0, y1, dx, dy, pay
    cdef float d
    for i in range(n):
        cx = u[i]
        cy = v[i]
        r = radii[i]
        d = z[i]
        pay = payload[i]
        y0 = cy - r if cy - r > 0 else 0
        y1 = cy + r if cy + r < height - 1 else height - 1
        x0 = cx - r if cx - r > 0 else 0
        x1 = cx + r if cx + r < width - 1 else width - 1
        for y in range(y0, y1 + 1):
            dy = y - cy
            for x in range(x0, x1 + 1):
                dx = x - cx
                if dx * dx + dy * dy <= r * r:
                    if d < buf[y, x]:
                        buf[y, x] = d
                        lab[y, x] = pay
    return depth_arr, label_arr


cdef inline Py_ssize_t _find_cell(long long[::1] uniq, long long key) nogil:
    """Binary search; returns index of key in uniq or -1."""
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = uniq.shape[0]
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if uniq[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < uniq.shape[0] and uniq[lo] == key:
        return lo
    return -1


cdef inline Py_ssize_t _uf_find(long long[::1] parent, Py_ssize_t x) nogil:
    cdef Py_ssize_t root = x
    cdef Py_ssize_t tmp
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        tmp = parent[x]
        parent[x] = root
        x = tmp
    return root


def dbscan_labels(double[:, ::1] points, double eps, int min_pts):
    """Density-based clustering labels, -1 for noise.

    Same two-pass, order-independent formulation as the fallback: core
    points (>= min_pts neighbors within eps, self included), connected
    components of the core-core graph, border points attached to their
    lowest-index core neighbor.
    """
    cdef Py_ssize_t n = points.shape[0]
    labels_arr = np.full(n, -1, dtype=np.int32)
    if n == 0:
        return labels_arr

    q = np.floor(np.asarray(points) / eps).astype(np.int64)
    if np.any(np.abs(q) >= CELL_BIAS - 1):
        raise ValueError("point extent too large for the voxel grid (scale/eps)")
    q += CELL_BIAS
    keys_arr = (q[:, 0] << (2 * CELL_BITS)) | (q[:, 1] << CELL_BITS) | q[:, 2]
    order_arr = np.argsort(keys_arr, kind="stable")
    sorted_keys = keys_arr[order_arr]
    uniq_arr, starts_arr = np.unique(sorted_keys, return_index=True)
    ends_arr = np.append(starts_arr[1:], n)

    cdef long long[::1] keys = keys_arr
    cdef long long[::1] uniq = uniq_arr
    cdef long long[::1] starts = starts_arr.astype(np.int64)
    cdef long long[::1] ends = ends_arr.astype(np.int64)
    cdef long long[::1] order = order_arr.astype(np.int64)
    cdef int[::1] labels = labels_arr

    cdef long long[27] offs
    cdef int oi = 0
    cdef int ox, oy, oz
    for ox in range(-1, 2):
        for oy in range(-1, 2):
            for oz in range(-1, 2):
                offs[oi] = ((<long long> ox) << (2 * CELL_BITS)) | \
                           ((<long long> oy) << CELL_BITS) | (<long long> oz)
                oi += 1

    core_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] core = core_arr
    cdef double eps2 = eps * eps
    cdef Py_ssize_t a, b, k, cell, p
    cdef long long cnt
    cdef double dx, dy, dz

    with nogil:
        for a in range(n):
            cnt = 0
            for k in range(27):
                cell = _find_cell(uniq, keys[a] + offs[k])
                if cell < 0:
                    continue
                for p in range(starts[cell], ends[cell]):
                    b = order[p]
                    dx = points[a, 0] - points[b, 0]
                    dy = points[a, 1] - points[b, 1]
                    dz = points[a, 2] - points[b, 2]
                    if dx * dx + dy * dy + dz * dz <= eps2:
                        cnt += 1
            if cnt >= min_pts:
                core[a] = 1

    if not core_arr.any():
        return labels_arr

    parent_arr = np.arange(n, dtype=np.int64)
    border_arr = np.full(n, n, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    cdef long long[::1] border = border_arr
    cdef Py_ssize_t ra, rb

    with nogil:
        for a in range(n):
            for k in range(27):
                cell = _find_cell(uniq, keys[a] + offs[k])
                if cell < 0:
                    continue
                for p in range(starts[cell], ends[cell]):
                    b = order[p]
                    if not core[b]:
                        continue
                    dx = points[a, 0] - points[b, 0]
                    dy = points[a, 1] - points[b, 1]
                    dz = points[a, 2] - points[b, 2]
                    if dx * dx + dy * dy + dz * dz > eps2:
                        continue
                    if core[a]:
                        ra = _uf_find(parent, a)
                        rb = _uf_find(parent, b)
                        if ra != rb:
                            if ra < rb:
                                parent[rb] = ra
                            else:
                                parent[ra] = rb
                    elif b < border[a]:
                        border[a] = b

        for a in range(n):
            if core[a]:
                labels[a] = <int> _uf_find(parent, a)
        for a in range(n):
            if not core[a] and border[a] < n:
                labels[a] = labels[border[a]]

    return labels_arr
