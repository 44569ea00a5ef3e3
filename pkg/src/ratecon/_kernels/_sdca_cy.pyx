# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinate-ascent epoch kernel (see _sdca_py for the contract)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def sdca_epoch(cnp.int64_t[::1] indptr,
               cnp.int32_t[::1] indices,
               double[::1] values,
               double[::1] sq_over,
               double[::1] a_plus,
               double[::1] a_minus,
               cnp.int64_t[::1] order,
               double[::1] xi,
               double[::1] w,
               double b,
               double inv_lambda_n):
    cdef Py_ssize_t t, i, j, start, stop
    cdef double z, q, c0, delta, step, xi_old
    for t in range(order.shape[0]):
        i = order[t]
        start = indptr[i]
        stop = indptr[i + 1]
        xi_old = xi[i]
        q = sq_over[i]
        z = 0.0
        for j in range(start, stop):
            z += w[indices[j]] * values[j]
        z += xi_old * q - b
        c0 = a_plus[i] - a_minus[i]
        if q > 0.0:
            if z - 0.5 > q * c0:
                delta = (z - 0.5) / q
            elif z + 0.5 < q * c0:
                delta = (z + 0.5) / q
            else:
                delta = c0
        else:
            if z - 0.5 > 0.0:
                delta = a_plus[i]
            elif z + 0.5 < 0.0:
                delta = -a_minus[i]
            else:
                delta = c0
        if delta > a_plus[i]:
            delta = a_plus[i]
        elif delta < -a_minus[i]:
            delta = -a_minus[i]
        step = delta - xi_old
        if step != 0.0:
            xi[i] = delta
            step *= inv_lambda_n
            for j in range(start, stop):
                w[indices[j]] -= step * values[j]
