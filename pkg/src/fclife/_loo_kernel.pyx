# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled leave-one-out subset evaluation kernel.

Same contract as the numpy fallback in ``_loo_numpy.py``: for every
subset bitmask, evaluate all N leave-one-out folds of an OLS fit with
intercept on the globally z-scored design. Per fold the Gram matrix is
rank-one downdated from the full-data Gram and solved by an in-place
Cholesky with a pivot threshold; subsets with a questionable fold are
flagged (status 1) for the exact reference path instead of being solved
here. Runs without the GIL so chunks can execute on worker threads.
"""

import numpy as np

cimport cython
from libc.math cimport fabs, sqrt

DEF MAX_P = 64  # columns incl. intercept; enumeration widths are <= 19

RCOND = 1e-10
cdef double _RCOND = 1e-10


def evaluate_chunk(double[:, ::1] Xz, double[::1] y, unsigned long long[::1] masks,
                   double[::1] test_mae, double[::1] test_mse,
                   double[::1] train_mae, double[::1] train_mse,
                   unsigned char[::1] status):
    """Fill the output slices for one chunk of subset bitmasks."""
    cdef Py_ssize_t n = Xz.shape[0]
    cdef Py_ssize_t m = Xz.shape[1]
    cdef Py_ssize_t nmask = masks.shape[0]
    if m + 1 > MAX_P:
        raise ValueError("too many feature columns for the compiled kernel")

    A_arr = np.empty((n, m + 1), dtype=np.float64)
    cdef double[:, ::1] A = A_arr
    G_arr = np.empty((m + 1) * (m + 1), dtype=np.float64)
    cdef double[::1] G = G_arr
    Gw_arr = np.empty((m + 1) * (m + 1), dtype=np.float64)
    cdef double[::1] Gw = Gw_arr
    b_arr = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] bvec = b_arr
    bw_arr = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] bw = bw_arr
    beta_arr = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] beta = beta_arr

    cdef Py_ssize_t pos, i, j, k, d1, col
    cdef unsigned long long mask
    cdef int cols[MAX_P]
    cdef double s, maxdiag, piv, e, acc_abs, acc_sq, sum_abs, sum_sq, t_abs, t_sq, pred
    cdef bint flagged

    with nogil:
        for pos in range(nmask):
            mask = masks[pos]
            # gather selected columns into the working design [1 | Xz[:, cols]]
            d1 = 1
            col = 0
            while mask != 0:
                if mask & 1:
                    cols[d1 - 1] = col
                    d1 += 1
                mask >>= 1
                col += 1
            for i in range(n):
                A[i, 0] = 1.0
                for j in range(1, d1):
                    A[i, j] = Xz[i, cols[j - 1]]

            # full-data Gram and right-hand side
            for j in range(d1):
                for k in range(j, d1):
                    s = 0.0
                    for i in range(n):
                        s += A[i, j] * A[i, k]
                    G[j * d1 + k] = s
                    G[k * d1 + j] = s
                s = 0.0
                for i in range(n):
                    s += A[i, j] * y[i]
                bvec[j] = s

            flagged = False
            sum_abs = 0.0
            sum_sq = 0.0
            t_abs = 0.0
            t_sq = 0.0
            for i in range(n):
                # downdate fold i: Gw = G - a_i a_i^T, bw = b - y_i a_i
                maxdiag = 0.0
                for j in range(d1):
                    for k in range(j, d1):
                        s = G[j * d1 + k] - A[i, j] * A[i, k]
                        Gw[j * d1 + k] = s
                        Gw[k * d1 + j] = s
                    bw[j] = bvec[j] - y[i] * A[i, j]
                    s = Gw[j * d1 + j]
                    if s > maxdiag:
                        maxdiag = s

                # in-place Cholesky (lower) with pivot threshold
                for j in range(d1):
                    piv = Gw[j * d1 + j]
                    for k in range(j):
                        piv -= Gw[j * d1 + k] * Gw[j * d1 + k]
                    if piv <= _RCOND * maxdiag:
                        flagged = True
                        break
                    piv = sqrt(piv)
                    Gw[j * d1 + j] = piv
                    for k in range(j + 1, d1):
                        s = Gw[k * d1 + j]
                        for col in range(j):
                            s -= Gw[k * d1 + col] * Gw[j * d1 + col]
                        Gw[k * d1 + j] = s / piv
                if flagged:
                    break

                # solve L L^T beta = bw
                for j in range(d1):
                    s = bw[j]
                    for k in range(j):
                        s -= Gw[j * d1 + k] * beta[k]
                    beta[j] = s / Gw[j * d1 + j]
                for j in range(d1 - 1, -1, -1):
                    s = beta[j]
                    for k in range(j + 1, d1):
                        s -= Gw[k * d1 + j] * beta[k]
                    beta[j] = s / Gw[j * d1 + j]

                # held-out residual and training errors of this fold
                acc_abs = 0.0
                acc_sq = 0.0
                for j in range(n):
                    pred = 0.0
                    for k in range(d1):
                        pred += A[j, k] * beta[k]
                    e = y[j] - pred
                    if j == i:
                        t_abs += fabs(e)
                        t_sq += e * e
                    else:
                        acc_abs += fabs(e)
                        acc_sq += e * e
                sum_abs += acc_abs / (n - 1)
                sum_sq += acc_sq / (n - 1)

            if flagged:
                status[pos] = 1
            else:
                status[pos] = 0
                test_mae[pos] = t_abs / n
                test_mse[pos] = t_sq / n
                train_mae[pos] = sum_abs / n
                train_mse[pos] = sum_sq / n
