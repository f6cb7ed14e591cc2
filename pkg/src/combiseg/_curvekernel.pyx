# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the curve-geometry hot path.

Runs the maximal-segment sweep and the lambda-weighted tangent
aggregation over a Freeman chain in C.  Mirrors the pure-Python
implementation operation for operation so both backends agree to
floating-point noise.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, sin, cos, fabs, round, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline Py_ssize_t _mod(Py_ssize_t k, Py_ssize_t n) noexcept nogil:
    k %= n
    return k + n if k < 0 else k


cdef struct _DSS:
    int h
    int v
    long a
    long b
    long mu
    long fx, fy          # front point (local frame)
    long bx, by          # back point
    long ufx, ufy        # first upper leaning point
    long ulx, uly        # last upper leaning point
    long lfx, lfy        # first lower leaning point
    long llx, lly        # last lower leaning point


cdef void _dss_init(_DSS* s, int code) noexcept nogil:
    s.h = -1
    s.v = -1
    s.a = 0
    s.b = 0
    if code == 0 or code == 2:
        s.h = code
        s.a = 0
        s.b = 1
        s.fx = 1
        s.fy = 0
    else:
        s.v = code
        s.a = 1
        s.b = 0
        s.fx = 0
        s.fy = 1
    s.mu = 0
    s.bx = 0
    s.by = 0
    s.ufx = 0
    s.ufy = 0
    s.lfx = 0
    s.lfy = 0
    s.ulx = s.fx
    s.uly = s.fy
    s.llx = s.fx
    s.lly = s.fy


cdef bint _axis_step(_DSS* s, int code, long* sx, long* sy) noexcept nogil:
    if code == 0 or code == 2:
        if s.h != -1 and code != s.h:
            return False
        sx[0] = 1
        sy[0] = 0
        return True
    if s.v != -1 and code != s.v:
        return False
    sx[0] = 0
    sy[0] = 1
    return True


cdef void _adopt(_DSS* s, int code) noexcept nogil:
    if code == 0 or code == 2:
        s.h = code
    else:
        s.v = code


cdef bint _try_front(_DSS* s, int code) noexcept nogil:
    cdef long sx, sy, px, py, r, omega
    if not _axis_step(s, code, &sx, &sy):
        return False
    px = s.fx + sx
    py = s.fy + sy
    r = s.a * px - s.b * py
    omega = s.a + s.b
    if s.mu <= r <= s.mu + omega - 1:
        if r == s.mu:
            s.ulx = px
            s.uly = py
        if r == s.mu + omega - 1:
            s.llx = px
            s.lly = py
    elif r == s.mu - 1:
        s.b = px - s.ufx
        s.a = py - s.ufy
        s.mu = s.a * px - s.b * py
        s.ulx = px
        s.uly = py
        s.lfx = s.llx
        s.lfy = s.lly
    elif r == s.mu + omega:
        s.b = px - s.lfx
        s.a = py - s.lfy
        s.mu = s.a * px - s.b * py - (s.a + s.b) + 1
        s.llx = px
        s.lly = py
        s.ufx = s.ulx
        s.ufy = s.uly
    else:
        return False
    s.fx = px
    s.fy = py
    _adopt(s, code)
    return True


cdef bint _try_back(_DSS* s, int code) noexcept nogil:
    cdef long sx, sy, qx, qy, r, omega
    if not _axis_step(s, code, &sx, &sy):
        return False
    qx = s.bx - sx
    qy = s.by - sy
    r = s.a * qx - s.b * qy
    omega = s.a + s.b
    if s.mu <= r <= s.mu + omega - 1:
        if r == s.mu:
            s.ufx = qx
            s.ufy = qy
        if r == s.mu + omega - 1:
            s.lfx = qx
            s.lfy = qy
    elif r == s.mu - 1:
        s.b = s.ulx - qx
        s.a = s.uly - qy
        s.mu = s.a * qx - s.b * qy
        s.ufx = qx
        s.ufy = qy
        s.llx = s.lfx
        s.lly = s.lfy
    elif r == s.mu + omega:
        s.b = s.llx - qx
        s.a = s.lly - qy
        s.mu = s.a * qx - s.b * qy - (s.a + s.b) + 1
        s.lfx = qx
        s.lfy = qy
        s.ulx = s.ufx
        s.uly = s.ufy
    else:
        return False
    s.bx = qx
    s.by = qy
    _adopt(s, code)
    return True


cdef double _angle(_DSS* s) noexcept nogil:
    """Traversal direction in image coordinates (y down)."""
    cdef double dx = 0.0
    cdef double dy = 0.0
    if s.h == 0:
        dx += s.b
    elif s.h == 2:
        dx -= s.b
    if s.v == 1:
        dy -= s.a
    elif s.v == 3:
        dy += s.a
    return atan2(dy, dx)


cdef void _rebuild(_DSS* s, const int* codes, Py_ssize_t i, Py_ssize_t j,
                   Py_ssize_t n, bint closed) noexcept nogil:
    cdef Py_ssize_t k
    _dss_init(s, codes[_mod(i, n)] if closed else codes[i])
    for k in range(i + 1, j):
        _try_front(s, codes[_mod(k, n)] if closed else codes[k])


cdef Py_ssize_t _sweep(const int* codes, Py_ssize_t n, bint closed,
                       Py_ssize_t* firsts, Py_ssize_t* lasts,
                       double* angles) noexcept nogil:
    """Maximal segments of the chain; returns their count (at most 2n)."""
    cdef _DSS dss
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t j = 1
    cdef Py_ssize_t first_i, count = 0
    cdef bint grew
    if n == 1:
        _dss_init(&dss, codes[0])
        firsts[0] = 0
        lasts[0] = 1
        angles[0] = _angle(&dss)
        return 1
    _dss_init(&dss, codes[0])
    if closed:
        while j - i < n and _try_back(&dss, codes[_mod(i - 1, n)]):
            i -= 1
    first_i = i
    while True:
        while ((j - i < n or not closed) and (j < n or closed)
               and _try_front(&dss, codes[_mod(j, n)] if closed else codes[j])):
            j += 1
        firsts[count] = i
        lasts[count] = j
        angles[count] = _angle(&dss)
        count += 1
        if not closed and j == n:
            return count
        while True:
            i += 1
            if closed and i >= first_i + n:
                return count
            if i == j:
                j = i + 1
                _rebuild(&dss, codes, i, j, n, closed)
                break
            _rebuild(&dss, codes, i, j, n, closed)
            grew = ((j - i < n or not closed) and (j < n or closed)
                    and _try_front(&dss, codes[_mod(j, n)] if closed else codes[j]))
            if grew:
                j += 1
                break


def tangent_angles(codes, bint closed=False):
    """Per-linel tangent direction; matches the pure implementation."""
    cdef cnp.ndarray[cnp.int32_t, ndim=1] arr = np.ascontiguousarray(
        codes, dtype=np.int32)
    cdef Py_ssize_t n = arr.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.float64)
    cdef Py_ssize_t cap = 2 * n + 4
    cdef Py_ssize_t* firsts = <Py_ssize_t*> malloc(cap * sizeof(Py_ssize_t))
    cdef Py_ssize_t* lasts = <Py_ssize_t*> malloc(cap * sizeof(Py_ssize_t))
    cdef double* angs = <double*> malloc(cap * sizeof(double))
    if firsts == NULL or lasts == NULL or angs == NULL:
        free(firsts); free(lasts); free(angs)
        raise MemoryError()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] num = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] den = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bw = np.full(n, -1.0)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bt = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t count, si, u, k
    cdef double theta, w, e, ref, lifted, span, mean
    cdef const int* cp = <const int*> arr.data
    with nogil:
        count = _sweep(cp, n, closed, firsts, lasts, angs)
    # pass 1: reference angle per linel = angle of its heaviest segment
    # (ties to the larger angle, as in the pure twin)
    for si in range(count):
        theta = angs[si]
        span = lasts[si] - firsts[si]
        for u in range(firsts[si], lasts[si]):
            k = _mod(u, n) if closed else u
            e = (u + 0.5 - firsts[si]) / span
            w = 1.0 - fabs(2.0 * e - 1.0)
            if w > bw[k] or (w == bw[k] and theta > bt[k]):
                bw[k] = w
                bt[k] = theta
    # pass 2: lambda-weighted mean of angles lifted near the reference
    for si in range(count):
        theta = angs[si]
        span = lasts[si] - firsts[si]
        for u in range(firsts[si], lasts[si]):
            k = _mod(u, n) if closed else u
            e = (u + 0.5 - firsts[si]) / span
            w = 1.0 - fabs(2.0 * e - 1.0)
            ref = bt[k]
            lifted = theta + 2.0 * M_PI * round((ref - theta) / (2.0 * M_PI))
            num[k] += w * lifted
            den[k] += w
    for k in range(n):
        mean = num[k] / den[k]
        out[k] = atan2(sin(mean), cos(mean))
    free(firsts)
    free(lasts)
    free(angs)
    return out


def elementary_lengths(codes, bint closed=False):
    """Per-linel estimated length; matches the pure implementation."""
    cdef cnp.ndarray[cnp.int32_t, ndim=1] arr = np.ascontiguousarray(
        codes, dtype=np.int32)
    cdef Py_ssize_t n = arr.shape[0]
    cdef Py_ssize_t k
    if closed and n <= 4:
        return np.ones(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] thetas = tangent_angles(arr, closed)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    for k in range(n):
        if arr[k] == 0 or arr[k] == 2:
            out[k] = fabs(cos(thetas[k]))
        else:
            out[k] = fabs(sin(thetas[k]))
    return out


def chain_length(codes, bint closed=False):
    """Estimated Euclidean length of the whole chain."""
    return float(np.sum(elementary_lengths(codes, closed)))
