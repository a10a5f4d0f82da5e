# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: grid maximal function and pairwise Lipschitz quotients.

Ball membership uses integer squared offsets (sum o^2 <= i^2), matching
the pure-Python fallback bit for bit on the discrete geometry.
"""

from libc.math cimport sqrt, pow, fabs, ceil, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

MAX_NDIM = 3


def _offsets_by_ring(shape):
    """Integer offsets grouped by the first open ball containing them.

    An offset o belongs to ball(i) iff sum(o^2) < i^2; its ring index is the
    exact integer floor(|o|) + 1, so membership matches the fallback bit for
    bit (no floating sqrt near perfect squares).
    """
    clip = [s - 1 for s in shape]
    grids = np.meshgrid(*[np.arange(-c, c + 1) for c in clip], indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    sq = np.sum(offs * offs, axis=1)
    root = np.floor(np.sqrt(sq.astype(float))).astype(np.int64)
    root[(root + 1) * (root + 1) <= sq] += 1
    root[root * root > sq] -= 1
    ring = root + 1
    order = np.lexsort((np.arange(len(offs)), ring))
    return offs[order], ring[order]


def maximal_function_grid(values, double spacing):
    u = np.ascontiguousarray(np.abs(np.asarray(values, dtype=np.float64)))
    if u.ndim > MAX_NDIM:
        from . import fallback
        return fallback.maximal_function_grid(values, spacing)
    shape = u.shape
    import math as _math
    nring = _math.isqrt(int(sum((s - 1) ** 2 for s in shape))) + 1
    offs, ring = _offsets_by_ring(shape)
    if u.ndim == 1:
        return _maximal_1d(u, offs, ring, nring)
    if u.ndim == 2:
        return _maximal_2d(u, offs, ring, nring)
    return _maximal_3d(u, offs, ring, nring)


def _maximal_1d(cnp.float64_t[::1] u, cnp.int64_t[:, ::1] offs,
                cnp.int64_t[::1] ring, int nring):
    cdef Py_ssize_t n = u.shape[0], noff = offs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] num = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] den = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n)
    cdef cnp.float64_t[::1] num_v = num, den_v = den, out_v = out
    cdef Py_ssize_t k = 0, i, j
    cdef long o
    cdef int r
    cdef double avg
    for r in range(1, nring + 1):
        while k < noff and ring[k] == r:
            o = offs[k, 0]
            for i in range(max(0, -o), min(n, n - o)):
                num_v[i] += u[i + o]
                den_v[i] += 1.0
            k += 1
        for i in range(n):
            avg = num_v[i] / den_v[i]
            if avg > out_v[i]:
                out_v[i] = avg
    return out


def _maximal_2d(cnp.float64_t[:, ::1] u, cnp.int64_t[:, ::1] offs,
                cnp.int64_t[::1] ring, int nring):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], noff = offs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] num = np.zeros((n0, n1))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] den = np.zeros((n0, n1))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n0, n1))
    cdef cnp.float64_t[:, ::1] num_v = num, den_v = den, out_v = out
    cdef Py_ssize_t k = 0, i, j
    cdef long o0, o1
    cdef int r
    cdef double avg
    for r in range(1, nring + 1):
        while k < noff and ring[k] == r:
            o0 = offs[k, 0]
            o1 = offs[k, 1]
            for i in range(max(0, -o0), min(n0, n0 - o0)):
                for j in range(max(0, -o1), min(n1, n1 - o1)):
                    num_v[i, j] += u[i + o0, j + o1]
                    den_v[i, j] += 1.0
            k += 1
        for i in range(n0):
            for j in range(n1):
                avg = num_v[i, j] / den_v[i, j]
                if avg > out_v[i, j]:
                    out_v[i, j] = avg
    return out


def _maximal_3d(cnp.float64_t[:, :, ::1] u, cnp.int64_t[:, ::1] offs,
                cnp.int64_t[::1] ring, int nring):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t noff = offs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] num = np.zeros((n0, n1, n2))
    cdef cnp.ndarray[cnp.float64_t, ndim=3] den = np.zeros((n0, n1, n2))
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.zeros((n0, n1, n2))
    cdef cnp.float64_t[:, :, ::1] num_v = num, den_v = den, out_v = out
    cdef Py_ssize_t k = 0, i, j, l
    cdef long o0, o1, o2
    cdef int r
    cdef double avg
    for r in range(1, nring + 1):
        while k < noff and ring[k] == r:
            o0 = offs[k, 0]
            o1 = offs[k, 1]
            o2 = offs[k, 2]
            for i in range(max(0, -o0), min(n0, n0 - o0)):
                for j in range(max(0, -o1), min(n1, n1 - o1)):
                    for l in range(max(0, -o2), min(n2, n2 - o2)):
                        num_v[i, j, l] += u[i + o0, j + o1, l + o2]
                        den_v[i, j, l] += 1.0
            k += 1
        for i in range(n0):
            for j in range(n1):
                for l in range(n2):
                    avg = num_v[i, j, l] / den_v[i, j, l]
                    if avg > out_v[i, j, l]:
                        out_v[i, j, l] = avg
    return out


def pairwise_max_quotient(dom, img, double p, double weight, double alpha):
    cdef cnp.float64_t[:, ::1] D = np.ascontiguousarray(
        np.atleast_2d(np.asarray(dom, dtype=np.float64)))
    cdef cnp.float64_t[:, ::1] G = np.ascontiguousarray(
        np.atleast_2d(np.asarray(img, dtype=np.float64)))
    cdef Py_ssize_t n = D.shape[0], nd = D.shape[1], mi = G.shape[1]
    cdef Py_ssize_t i, j, a
    cdef double best = 0.0, dd, di, acc, t, q
    cdef bint pinf = (p == INFINITY)
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for a in range(nd):
                t = D[i, a] - D[j, a]
                acc += t * t
            dd = sqrt(acc)
            if dd == 0.0:
                continue
            if pinf:
                di = 0.0
                for a in range(mi):
                    t = fabs(G[i, a] - G[j, a])
                    if t > di:
                        di = t
            else:
                acc = 0.0
                for a in range(mi):
                    t = fabs(G[i, a] - G[j, a])
                    acc += pow(t, p)
                di = pow(weight * acc, 1.0 / p)
            if alpha != 1.0:
                di = pow(di, alpha)
            q = di / dd
            if q > best:
                best = q
    return best
