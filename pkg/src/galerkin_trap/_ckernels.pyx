# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled triad sums.  Loop order is the triad-table order, so results are
deterministic and independent of thread count.

Complex products are written out in real arithmetic: C99 complex multiply
goes through the inf/nan-aware library routine, which dominates the loop.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def triad_2d(const double complex[::1] w,
             const cnp.int64_t[::1] out,
             const cnp.int64_t[::1] i1,
             const cnp.int64_t[::1] i2,
             const double[::1] coef,
             Py_ssize_t n_out):
    cdef Py_ssize_t t, a, b, o, n = out.shape[0]
    cdef const double[::1] wr
    cdef double ar, ai, br, bi, c, sr = 0.0, si = 0.0
    acc_arr = np.zeros(n_out, dtype=np.complex128)
    cdef double[::1] acc = acc_arr.view(np.float64)
    if n == 0:
        return acc_arr
    wr = np.asarray(w).view(np.float64)
    o = out[0]
    with nogil:
        for t in range(n):
            if out[t] != o:
                acc[2 * o] += sr
                acc[2 * o + 1] += si
                sr = 0.0
                si = 0.0
                o = out[t]
            a = 2 * i1[t]
            b = 2 * i2[t]
            ar = wr[a]
            ai = wr[a + 1]
            br = wr[b]
            bi = wr[b + 1]
            c = coef[t]
            sr += c * (ar * br - ai * bi)
            si += c * (ar * bi + ai * br)
        acc[2 * o] += sr
        acc[2 * o + 1] += si
    return acc_arr


def triad_3d(const double complex[:, ::1] u,
             const double complex[:, ::1] w,
             const double[:, ::1] kout,
             const cnp.int64_t[::1] out,
             const cnp.int64_t[::1] i1,
             const cnp.int64_t[::1] i2,
             Py_ssize_t n_out):
    cdef Py_ssize_t t, o, a, b, j, n = out.shape[0]
    cdef const double[:, ::1] U
    cdef const double[:, ::1] W
    cdef double k0, k1, k2, ukr, uki, wkr, wki, ur, ui, vr, vi
    acc_arr = np.zeros((n_out, 3), dtype=np.complex128)
    cdef double[:, ::1] acc = acc_arr.view(np.float64)
    if n == 0:
        return acc_arr
    U = np.asarray(u).view(np.float64)
    W = np.asarray(w).view(np.float64)
    with nogil:
        for t in range(n):
            o = out[t]
            a = i1[t]
            b = i2[t]
            k0 = kout[o, 0]
            k1 = kout[o, 1]
            k2 = kout[o, 2]
            ukr = U[a, 0] * k0 + U[a, 2] * k1 + U[a, 4] * k2
            uki = U[a, 1] * k0 + U[a, 3] * k1 + U[a, 5] * k2
            wkr = W[a, 0] * k0 + W[a, 2] * k1 + W[a, 4] * k2
            wki = W[a, 1] * k0 + W[a, 3] * k1 + W[a, 5] * k2
            for j in range(3):
                vr = W[b, 2 * j]
                vi = W[b, 2 * j + 1]
                ur = U[b, 2 * j]
                ui = U[b, 2 * j + 1]
                acc[o, 2 * j] += (ukr * vr - uki * vi) - (wkr * ur - wki * ui)
                acc[o, 2 * j + 1] += (ukr * vi + uki * vr) - (wkr * ui + wki * ur)
    return acc_arr
