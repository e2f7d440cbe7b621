# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernels for catalogue drifts.

Same contract as `_kernels_py.py`; selected at import by `backend.py` when
the extension built successfully.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sin, cos, exp, tanh

COMPILED = True

PERT_ZERO, PERT_SINE, PERT_BUMP, PERT_TANH = 0, 1, 2, 3
MEASURE_NONE, MEASURE_FROZEN, MEASURE_EMPIRICAL = 0, 1, 2
SCHEME_EULER, SCHEME_SPLITTING = 0, 1


cdef inline double _pert1(int kind, double pa, double pb, double x) nogil:
    if kind == 1:
        return pa * sin(pb * x)
    elif kind == 2:
        return pa * x * exp(-(x * x) / (2 * pb * pb))
    elif kind == 3:
        return pa * tanh(pb * x)
    return 0.0


cdef void _drift(double[:, ::1] X, double[:, ::1] Y, double[:, ::1] A,
                 double gamma, int pert_kind, double pa, double pb,
                 double kappa, int measure_mode, double[::1] frozen_mean_x,
                 double[:, ::1] out, double[::1] mean_buf) nogil:
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    if measure_mode == 2:
        for j in range(d):
            acc = 0.0
            for i in range(n):
                acc += X[i, j]
            mean_buf[j] = acc / n
    elif measure_mode == 1:
        for j in range(d):
            mean_buf[j] = frozen_mean_x[j]
    for i in range(n):
        for j in range(d):
            acc = -gamma * Y[i, j]
            for k in range(d):
                acc -= A[j, k] * X[i, k]
            acc += _pert1(pert_kind, pa, pb, X[i, j])
            if measure_mode != 0:
                acc += kappa * (mean_buf[j] - X[i, j])
            out[i, j] = acc


def step_ensemble(double[:, ::1] X, double[:, ::1] Y, double[:, ::1] A,
                  double gamma, int pert_kind, double pa, double pb,
                  double kappa, int measure_mode, double[::1] frozen_mean_x,
                  double[:, ::1] noise_inc, double dt, int scheme):
    """Advance all rows by one step of the selected scheme, in place."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j
    b_arr = np.empty((n, d))
    mean_arr = np.empty(d)
    cdef double[:, ::1] b = b_arr
    cdef double[::1] mean_buf = mean_arr
    with nogil:
        if scheme == 0:
            _drift(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode,
                   frozen_mean_x, b, mean_buf)
            for i in range(n):
                for j in range(d):
                    X[i, j] += Y[i, j] * dt
                    Y[i, j] += b[i, j] * dt + noise_inc[i, j]
        else:
            _drift(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode,
                   frozen_mean_x, b, mean_buf)
            for i in range(n):
                for j in range(d):
                    Y[i, j] += b[i, j] * (dt / 2)
                    X[i, j] += Y[i, j] * dt
                    Y[i, j] += noise_inc[i, j]
            _drift(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode,
                   frozen_mean_x, b, mean_buf)
            for i in range(n):
                for j in range(d):
                    Y[i, j] += b[i, j] * (dt / 2)
