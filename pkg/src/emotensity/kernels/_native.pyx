# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled LSTM cell sweeps. Same contract as emotensity.kernels._pure."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()


cdef inline double _sigmoid(double x) nogil:
    # two-branch form, matches scipy.special.expit
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def cell_sweep_forward(double[:, ::1] zx, double[:, ::1] wh):
    """zx: (n, 4H) precomputed input pre-activations; wh: (4H, H).

    Returns (h, i, f, g, o, c), each (n, H), from a zero initial state.
    """
    cdef Py_ssize_t n = zx.shape[0]
    cdef Py_ssize_t hid = wh.shape[1]
    h_arr = np.empty((n, hid))
    i_arr = np.empty((n, hid))
    f_arr = np.empty((n, hid))
    g_arr = np.empty((n, hid))
    o_arr = np.empty((n, hid))
    c_arr = np.empty((n, hid))
    z_arr = np.empty(4 * hid)
    cdef double[:, ::1] h = h_arr, i = i_arr, f = f_arr, g = g_arr, o = o_arr, c = c_arr
    cdef double[::1] z = z_arr
    # BLAS sees C-ordered wh as its (hid, 4*hid) transpose
    cdef int bm = <int>hid
    cdef int bn = <int>(4 * hid)
    cdef int inc = 1
    cdef double one = 1.0
    cdef Py_ssize_t t, j
    cdef double iv, fv, gv, ov, cv, cprev

    with nogil:
        for t in range(n):
            for j in range(4 * hid):
                z[j] = zx[t, j]
            if t > 0:
                # z += wh @ h[t-1]
                dgemv("T", &bm, &bn, &one, &wh[0, 0], &bm, &h[t - 1, 0], &inc,
                      &one, &z[0], &inc)
            for j in range(hid):
                iv = _sigmoid(z[j])
                fv = _sigmoid(z[hid + j])
                gv = tanh(z[2 * hid + j])
                ov = _sigmoid(z[3 * hid + j])
                cprev = c[t - 1, j] if t > 0 else 0.0
                cv = fv * cprev + iv * gv
                i[t, j] = iv
                f[t, j] = fv
                g[t, j] = gv
                o[t, j] = ov
                c[t, j] = cv
                h[t, j] = ov * tanh(cv)
    return h_arr, i_arr, f_arr, g_arr, o_arr, c_arr


def cell_sweep_backward(double[:, ::1] wh, double[:, ::1] i, double[:, ::1] f,
                        double[:, ::1] g, double[:, ::1] o, double[:, ::1] c,
                        double[:, ::1] dh_out):
    """Backward pass over one sequence; returns dz of shape (n, 4H)."""
    cdef Py_ssize_t n = dh_out.shape[0]
    cdef Py_ssize_t hid = dh_out.shape[1]
    dz_arr = np.empty((n, 4 * hid))
    dh_arr = np.zeros(hid)
    dc_arr = np.zeros(hid)
    cdef double[:, ::1] dz = dz_arr
    cdef double[::1] dh_rec = dh_arr
    cdef double[::1] dc = dc_arr
    cdef int bm = <int>hid
    cdef int bn = <int>(4 * hid)
    cdef int inc = 1
    cdef double one = 1.0
    cdef double zero = 0.0
    cdef Py_ssize_t t, j
    cdef double dhj, tau, do_, dct, cprev, df, di, dg

    with nogil:
        for t in range(n - 1, -1, -1):
            for j in range(hid):
                dhj = dh_out[t, j] + dh_rec[j]
                tau = tanh(c[t, j])
                do_ = dhj * tau
                dct = dc[j] + dhj * o[t, j] * (1.0 - tau * tau)
                cprev = c[t - 1, j] if t > 0 else 0.0
                df = dct * cprev
                di = dct * g[t, j]
                dg = dct * i[t, j]
                dc[j] = dct * f[t, j]
                dz[t, j] = di * i[t, j] * (1.0 - i[t, j])
                dz[t, hid + j] = df * f[t, j] * (1.0 - f[t, j])
                dz[t, 2 * hid + j] = dg * (1.0 - g[t, j] * g[t, j])
                dz[t, 3 * hid + j] = do_ * o[t, j] * (1.0 - o[t, j])
            # dh_rec = wh.T @ dz[t]
            dgemv("N", &bm, &bn, &one, &wh[0, 0], &bm, &dz[t, 0], &inc,
                  &zero, &dh_rec[0], &inc)
    return dz_arr
