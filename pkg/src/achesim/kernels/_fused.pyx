# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused elementwise kernels for the time stepper's hot loop.

Semantics match achesim.kernels._fused_py exactly; these exist to fuse the
temporaries NumPy would allocate per step.
"""
import numpy as np

cimport numpy as cnp


def cube_inplace(cnp.ndarray a_in):
    cdef double[::1] a = a_in.ravel()
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double x
    for i in range(n):
        x = a[i]
        a[i] = x * x * x


def etdrk2_stage1(cnp.ndarray E_in, cnp.ndarray phi1dt_in,
                  cnp.ndarray c_in, cnp.ndarray n1_in, cnp.ndarray out_in):
    cdef double complex[::1] E = E_in.ravel()
    cdef double complex[::1] phi1dt = phi1dt_in.ravel()
    cdef double complex[::1] c = c_in.ravel()
    cdef double complex[::1] n1 = n1_in.ravel()
    cdef double complex[::1] out = out_in.ravel()
    cdef Py_ssize_t i, n = out.shape[0]
    for i in range(n):
        out[i] = E[i] * c[i] + phi1dt[i] * n1[i]


def etdrk2_stage2(cnp.ndarray a_in, cnp.ndarray phi2dt_in,
                  cnp.ndarray n1_in, cnp.ndarray n2_in, cnp.ndarray out_in):
    cdef double complex[::1] a = a_in.ravel()
    cdef double complex[::1] phi2dt = phi2dt_in.ravel()
    cdef double complex[::1] n1 = n1_in.ravel()
    cdef double complex[::1] n2 = n2_in.ravel()
    cdef double complex[::1] out = out_in.ravel()
    cdef Py_ssize_t i, n = out.shape[0]
    for i in range(n):
        out[i] = a[i] + phi2dt[i] * (n2[i] - n1[i])
