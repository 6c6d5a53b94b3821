# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the hypergeometric kernel.

Two routines are exported, both mirrored line for line in ``_pykernels``:

``gauss_series``
    Partial sums of the Gauss series at many arguments, each point
    terminating independently.
``ode_march``
    Taylor re-expansion of the hypergeometric equation, marching a
    solution through a sorted list of targets inside (0, 1).
"""
import numpy as np
from libc.math cimport fabs, fmin

IMPLEMENTATION = "cython"


def gauss_series(double a, double b, double c, z, double tol=1e-16,
                 long maxterms=1000000):
    cdef double[::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zz.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef long k, worst = 0
    cdef double x, term, total, kk
    cdef int small
    for i in range(n):
        x = zz[i]
        term = 1.0
        total = 1.0
        small = 0
        k = 0
        while True:
            kk = <double>k
            term = term * (a + kk) * (b + kk) / ((c + kk) * (kk + 1.0)) * x
            total = total + term
            k += 1
            if term == 0.0:
                break
            if fabs(term) <= tol * fabs(total) + 1e-300:
                small += 1
                # stop only once the terms are also shrinking
                kk = <double>k
                if small >= 2 and fabs((a + kk) * (b + kk) * x) < fabs(
                        (c + kk) * (kk + 1.0)):
                    break
            else:
                small = 0
            if k >= maxterms:
                raise ArithmeticError(
                    "Gauss series did not converge at z=%r after %d terms"
                    % (x, k))
        o[i] = total
        if k > worst:
            worst = k
    return out, worst


def ode_march(double a, double b, double c, double z0, double w0,
              double dw0, targets, double tol=1e-16, long maxterms=100000):
    cdef double[::1] tg = np.ascontiguousarray(targets, dtype=np.float64)
    cdef Py_ssize_t n = tg.shape[0]
    w_out = np.empty(n, dtype=np.float64)
    dw_out = np.empty(n, dtype=np.float64)
    cdef double[::1] wo = w_out
    cdef double[::1] dwo = dw_out
    cdef double z = z0, w = w0, dw = dw0
    cdef double zt, h, rho, p0, p1, q0, ab1 = a + b + 1.0
    cdef double u0, u1, u2, hh, sw, sdw, kk, term_w, term_dw
    cdef long k
    cdef Py_ssize_t i
    cdef int small
    for i in range(n):
        zt = tg[i]
        while z != zt:
            rho = fmin(z, 1.0 - z)
            if rho <= 0.0:
                raise ArithmeticError("march left the interval (0, 1)")
            h = zt - z
            if fabs(h) > 0.5 * rho:
                h = 0.5 * rho if h > 0 else -0.5 * rho
            p0 = z * (1.0 - z)
            p1 = 1.0 - 2.0 * z
            q0 = c - ab1 * z
            # recur on the scaled coefficients u_k = w^(k)(z) h^k / k!, which
            # stay bounded even when 1 - z is tiny
            u0 = w
            u1 = dw * h
            hh = h * h
            sw = u0 + u1
            sdw = dw
            small = 0
            k = 0
            while True:
                kk = <double>k
                u2 = ((kk + a) * (kk + b) * u0 * hh
                      - (kk + 1.0) * (p1 * kk + q0) * u1 * h) \
                    / (p0 * (kk + 1.0) * (kk + 2.0))
                term_w = u2
                term_dw = (kk + 2.0) * u2 / h
                sw = sw + term_w
                sdw = sdw + term_dw
                u0 = u1
                u1 = u2
                k += 1
                if (fabs(term_w) <= tol * fabs(sw) + 1e-300
                        and fabs(term_dw) <= tol * fabs(sdw) + 1e-300):
                    small += 1
                    if small >= 2:
                        break
                else:
                    small = 0
                if k >= maxterms:
                    raise ArithmeticError("Taylor step did not converge")
            z = z + h if fabs(zt - z - h) > 0.0 else zt
            w = sw
            dw = sdw
        wo[i] = w
        dwo[i] = dw
    return w_out, dw_out
