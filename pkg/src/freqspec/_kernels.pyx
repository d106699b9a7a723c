# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: sliding median and counter-keyed Gaussian noise."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _select(double* a, int n, int kth) noexcept nogil:
    # Hoare quickselect; a is scratch and gets reordered.
    cdef int lo = 0, hi = n - 1, i, j
    cdef double pivot, tmp
    while lo < hi:
        pivot = a[(lo + hi) >> 1]
        i = lo
        j = hi
        while i <= j:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i <= j:
                tmp = a[i]; a[i] = a[j]; a[j] = tmp
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            break
    return a[kth]


cdef inline void _sort2(double* p, int i, int j) noexcept nogil:
    cdef double t
    if p[i] > p[j]:
        t = p[i]; p[i] = p[j]; p[j] = t


cdef inline double _med9(double* p) noexcept nogil:
    # 19-exchange median-of-9 network (Paeth / Devillard)
    _sort2(p, 1, 2); _sort2(p, 4, 5); _sort2(p, 7, 8)
    _sort2(p, 0, 1); _sort2(p, 3, 4); _sort2(p, 6, 7)
    _sort2(p, 1, 2); _sort2(p, 4, 5); _sort2(p, 7, 8)
    _sort2(p, 0, 3); _sort2(p, 5, 8); _sort2(p, 4, 7)
    _sort2(p, 3, 6); _sort2(p, 1, 4); _sort2(p, 2, 5)
    _sort2(p, 4, 7); _sort2(p, 4, 2); _sort2(p, 6, 4)
    _sort2(p, 4, 2)
    return p[4]


def median_filter(padded, int k):
    cdef double[:, ::1] src = np.ascontiguousarray(padded, dtype=np.float64)
    cdef Py_ssize_t h = src.shape[0] - k + 1
    cdef Py_ssize_t w = src.shape[1] - k + 1
    out = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] dst = out
    cdef int n = k * k, mid = (k * k) // 2
    cdef Py_ssize_t y, x, dy, dx
    cdef int t
    cdef double* buf = <double*> malloc(n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for y in range(h):
                for x in range(w):
                    t = 0
                    for dy in range(k):
                        for dx in range(k):
                            buf[t] = src[y + dy, x + dx]
                            t += 1
                    if n == 9:
                        dst[y, x] = _med9(buf)
                    else:
                        dst[y, x] = _select(buf, n, mid)
    finally:
        free(buf)
    return out


def keyed_normal(Py_ssize_t count, key):
    cdef uint64_t k0 = <uint64_t> int(key)
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] dst = out
    cdef Py_ssize_t i
    cdef uint64_t c1, h1, h2
    cdef double u1, u2
    cdef double inv53 = 1.0 / 9007199254740992.0
    cdef double two_pi = 6.283185307179586
    with nogil:
        for i in range(count):
            c1 = <uint64_t> i * 2 + 1
            h1 = _mix64(k0 + c1 * GOLDEN)
            h2 = _mix64(k0 + (c1 + 1) * GOLDEN)
            u1 = (<double> (h1 >> 11) + 1.0) * inv53
            u2 = <double> (h2 >> 11) * inv53
            dst[i] = sqrt(-2.0 * log(u1)) * cos(two_pi * u2)
    return out
