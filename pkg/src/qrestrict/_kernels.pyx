# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.math cimport fabs

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def uniforms(key, start, Py_ssize_t n):
    cdef uint64_t k = <uint64_t>key
    cdef uint64_t s = <uint64_t>start
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = <double>(_mix(k + (s + <uint64_t>i + 1) * GOLDEN) >> 11) * INV53
    return out


def sample_categorical(u, cdf):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0], m = cv.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t i, lo, hi, mid
    cdef double x
    with nogil:
        for i in range(n):
            x = uv[i]
            lo = 0
            hi = m
            # first index with cdf > x
            while lo < hi:
                mid = (lo + hi) >> 1
                if cv[mid] <= x:
                    lo = mid + 1
                else:
                    hi = mid
            o[i] = lo if lo < m else m - 1
    return out


def sprt_scan(increments, double upper, double lower):
    cdef const double[::1] inc = np.ascontiguousarray(increments, dtype=np.float64)
    cdef Py_ssize_t n = inc.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] traj = np.empty(n, dtype=np.float64)
    cdef double[::1] t = traj
    cdef double acc = 0.0
    cdef Py_ssize_t stop = -1
    cdef int decision = 0
    with nogil:
        for i in range(n):
            acc = acc + inc[i]
            t[i] = acc
            if stop < 0:
                if acc >= upper:
                    stop = i
                    decision = 1
                elif acc <= lower:
                    stop = i
                    decision = -1
    return traj, stop, decision


def effect_grid_search(effects, r_a, r_b, double eps):
    cdef const double[:, ::1] e = np.ascontiguousarray(effects, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(r_a, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(r_b, dtype=np.float64)
    cdef Py_ssize_t n = e.shape[0], i
    cdef double ta, tb
    cdef Py_ssize_t found = -1
    with nogil:
        for i in range(n):
            # same association order as the matmul in the fallback
            ta = e[i, 0] + (e[i, 1] * a[0] + e[i, 2] * a[1] + e[i, 3] * a[2])
            tb = e[i, 0] + (e[i, 1] * b[0] + e[i, 2] * b[1] + e[i, 3] * b[2])
            if (fabs(ta - 1.0) <= eps and fabs(tb) <= eps) or \
               (fabs(ta) <= eps and fabs(tb - 1.0) <= eps):
                found = i
                break
    return found
