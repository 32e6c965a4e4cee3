# cython: boundscheck=False, wraparound=False, cdivision=True
"""Hot integrand kernels for the block shrinkage integrals."""

from libc.math cimport exp, log, pow

import numpy as np


def log_integrand_logs(double[:, ::1] x, double[::1] beta, double[::1] rho,
                       double delta, double m):
    """out[j] = sum_i beta[i]*x[j,i] - m*log(delta + sum_i rho[i]*exp(x[j,i]))

    x holds log s coordinates; beta already includes the +1 Jacobian of the
    s = exp(x) substitution.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k = x.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, coup
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for j in range(n):
        acc = 0.0
        coup = delta
        for i in range(k):
            acc += beta[i] * x[j, i]
            coup += rho[i] * exp(x[j, i])
        out[j] = acc - m * log(coup)
    return out_arr


def log_integrand_u(double[:, ::1] u, double[::1] invbeta, double[::1] rho,
                    double delta, double m):
    """out[j] = -m*log(delta + sum_i rho[i]*u[j,i]**invbeta[i])

    u in (0,1)^k; the s_i = u_i^(1/beta_i) substitution absorbs the edge
    power laws so the integrand is bounded (QMC route).
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t k = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double coup
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for j in range(n):
        coup = delta
        for i in range(k):
            coup += rho[i] * pow(u[j, i], invbeta[i])
        out[j] = -m * log(coup)
    return out_arr
