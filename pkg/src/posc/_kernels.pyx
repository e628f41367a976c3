# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled bulk scaling kernel.

Applies one of the non-linear capital scaling functions to a whole array of
active-capital values, optionally across OpenMP threads.  Function ids must
match posc.kernels: 0 = sqrt, 1 = log2(1+x), 2 = cbrt.
"""

from cython.parallel import prange

from libc.math cimport cbrt, log2, sqrt


def scale_into(const double[::1] active, int func_id, double divisor,
               double[::1] out, int num_threads):
    cdef Py_ssize_t i, n = active.shape[0]
    cdef double inv = 1.0 / divisor
    if out.shape[0] != n:
        raise ValueError("output length mismatch")
    if func_id < 0 or func_id > 2:
        raise ValueError("unknown function id %d" % func_id)

    if num_threads <= 1:
        with nogil:
            if func_id == 0:
                for i in range(n):
                    out[i] = inv * sqrt(active[i])
            elif func_id == 1:
                for i in range(n):
                    out[i] = inv * log2(1.0 + active[i])
            else:
                for i in range(n):
                    out[i] = inv * cbrt(active[i])
    else:
        if func_id == 0:
            for i in prange(n, nogil=True, num_threads=num_threads):
                out[i] = inv * sqrt(active[i])
        elif func_id == 1:
            for i in prange(n, nogil=True, num_threads=num_threads):
                out[i] = inv * log2(1.0 + active[i])
        else:
            for i in prange(n, nogil=True, num_threads=num_threads):
                out[i] = inv * cbrt(active[i])
