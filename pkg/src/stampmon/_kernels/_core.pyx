# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the _pyref kernels (same arithmetic, same order)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def sosfilt(sos, x, zi):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.asarray(x, dtype=np.float64).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sos_c = np.ascontiguousarray(sos, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] state = np.asarray(zi, dtype=np.float64).copy()
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t nsec = sos_c.shape[0]
    cdef Py_ssize_t s, t
    cdef double b0, b1, b2, a1, a2, s0, s1, xn, yn
    for s in range(nsec):
        b0 = sos_c[s, 0]
        b1 = sos_c[s, 1]
        b2 = sos_c[s, 2]
        a1 = sos_c[s, 4]
        a2 = sos_c[s, 5]
        s0 = state[s, 0]
        s1 = state[s, 1]
        for t in range(n):
            xn = y[t]
            yn = b0 * xn + s0
            s0 = b1 * xn - a1 * yn + s1
            s1 = b2 * xn - a2 * yn
            y[t] = yn
    return y


def smo_solve(K, alpha, grad, double C, double tol, long max_iter):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] K_c = np.ascontiguousarray(K, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = alpha
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = grad
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t it, t, i, j
    cdef double gmin, gmax, violation, eta, delta, room_i, room_j
    violation = 0.0
    for it in range(max_iter):
        i = -1
        j = -1
        gmin = 0.0
        gmax = 0.0
        for t in range(n):
            if a[t] < C and (i < 0 or g[t] < gmin):
                i = t
                gmin = g[t]
            if a[t] > 0.0 and (j < 0 or g[t] > gmax):
                j = t
                gmax = g[t]
        if i < 0 or j < 0:
            return it, 0.0
        violation = gmax - gmin
        if violation < tol:
            return it, violation
        eta = K_c[i, i] + K_c[j, j] - 2.0 * K_c[i, j]
        if eta <= 0.0:
            eta = 1e-12
        delta = violation / eta
        room_i = C - a[i]
        room_j = a[j]
        if delta > room_i:
            delta = room_i
        if delta > room_j:
            delta = room_j
        if delta == room_i:
            a[i] = C
        else:
            a[i] = a[i] + delta
        if delta == room_j:
            a[j] = 0.0
        else:
            a[j] = a[j] - delta
        for t in range(n):
            g[t] = g[t] + delta * (K_c[i, t] - K_c[j, t])
    return max_iter, violation
