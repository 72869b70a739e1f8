# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte-Carlo accumulation kernel.

Streams standard normals straight from the bit generator's C interface,
applies the (lower-triangular) Cholesky factor sample by sample, and
accumulates the uncentered second-moment matrix without materializing
the n-by-d sample block. Matches the NumPy fallback's variate order
exactly (row-major: sample i consumes draws i*d .. i*d+d-1).
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

cnp.import_array()


def accumulate_second_moments(bitgen, cnp.ndarray[cnp.float64_t, ndim=2] chol, Py_ssize_t n):
    cdef Py_ssize_t d = chol.shape[0]
    cdef const char *capsule_name = "BitGenerator"
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, capsule_name):
        raise ValueError("invalid bit-generator capsule")
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, capsule_name)

    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] s = out
    cdef double[:, ::1] l = np.ascontiguousarray(chol)
    cdef double *z = <double *> malloc(d * sizeof(double))
    cdef double *x = <double *> malloc(d * sizeof(double))
    if z == NULL or x == NULL:
        free(z)
        free(x)
        raise MemoryError()

    cdef Py_ssize_t i, r, c
    cdef double acc
    try:
        with bitgen.lock, nogil:
            for i in range(n):
                for r in range(d):
                    z[r] = random_standard_normal(rng)
                for r in range(d):
                    acc = 0.0
                    # chol is lower triangular; skip the zero block.
                    for c in range(r + 1):
                        acc += l[r, c] * z[c]
                    x[r] = acc
                for r in range(d):
                    for c in range(r + 1):
                        s[r, c] += x[r] * x[c]
    finally:
        free(z)
        free(x)

    for r in range(d):
        for c in range(r):
            out[c, r] = out[r, c]
    return out
