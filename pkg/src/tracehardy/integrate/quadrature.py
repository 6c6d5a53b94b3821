"""One-dimensional quadrature with algebraic endpoint singularities."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .._quadrature import QuadratureError, adaptive_gk, gauss_legendre, panel_rule
from .geometry import QuadratureSpec

__all__ = ["QuadratureError", "quad1d_singular", "graded_rule",
           "power_graded_rule", "gauss_legendre", "panel_rule"]


def _half(f, lo, hi, exp, at_lo, spec, breaks_t=None):
    """Integrate over [lo, hi] with ``(x - end)^exp`` at the chosen end."""
    length = hi - lo
    if exp == 0.0:
        return adaptive_gk(f, lo, hi, rel_tol=spec.rel_tol,
                           abs_tol=spec.abs_tol / 2, max_depth=spec.max_depth)
    q = 1.0 / (1.0 + exp)

    def g(tau):
        tq = tau ** q
        x = lo + length * tq if at_lo else hi - length * tq
        jac = length * q * np.where(tau > 0, tau ** (q - 1), 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.asarray(f(x), dtype=float) * jac
        return np.where(jac > 0, val, 0.0)

    return adaptive_gk(g, 0.0, 1.0, rel_tol=spec.rel_tol,
                       abs_tol=spec.abs_tol / 2, max_depth=spec.max_depth)


def quad1d_singular(f, a, b, left_exp=0.0, right_exp=0.0,
                    spec: QuadratureSpec | None = None):
    """Integrate ``f`` over ``[a, b]`` with algebraic endpoint behavior.

    Parameters
    ----------
    f : callable
        Vectorized integrand, ``f ~ (x-a)^left_exp`` near ``a`` and
        ``f ~ (b-x)^right_exp`` near ``b``.
    a, b : float
        Limits; ``b = inf`` is mapped by ``x = a + tau/(1-tau)`` and
        ``right_exp`` then describes the mapped integrand at ``tau = 1``.
    left_exp, right_exp : float
        Exponents, both ``> -1``.
    spec : QuadratureSpec, optional

    Returns
    -------
    value, error_estimate : float

    Raises
    ------
    QuadratureError
        Depth exhausted; the best estimate is attached.
    """
    spec = spec or QuadratureSpec()
    if left_exp <= -1 or right_exp <= -1:
        raise ValueError("endpoint exponents must exceed -1")
    a = float(a)
    b = float(b)
    if math.isinf(b):
        g = f

        def f(tau, _g=g, _a=a):
            one = 1.0 - tau
            with np.errstate(divide="ignore", invalid="ignore"):
                out = _g(_a + tau / one) / (one * one)
            return np.where(one > 0, out, 0.0)
        a, b = 0.0, 1.0
    if b <= a:
        if b == a:
            return 0.0, 0.0
        v, e = quad1d_singular(f, b, a, right_exp, left_exp, spec)
        return -v, e
    mid = 0.5 * (a + b)
    try:
        v1, e1 = _half(f, a, mid, left_exp, True, spec)
        v2, e2 = _half(f, mid, b, right_exp, False, spec)
    except QuadratureError as exc:
        raise QuadratureError(str(exc), exc.value, exc.error) from exc
    return v1 + v2, e1 + e2


def graded_rule(lo, hi, order, ratio=2.0, min_panels=1):
    """Composite Gauss rule on [lo, hi] with geometric panels (lo > 0).

    One panel per factor ``ratio``; suited to integrands that are smooth
    in ``log x``.
    """
    if lo <= 0:
        raise ValueError("graded_rule needs lo > 0")
    k = max(min_panels, int(math.ceil(math.log(hi / lo) / math.log(ratio))))
    edges = np.geomspace(lo, hi, k + 1)
    return panel_rule(edges, order)


def power_graded_rule(length, exp, order, panels=1):
    """Rule on ``[0, length]`` for integrands ``x^exp * smooth``.

    The first of ``panels`` equal panels uses Gauss-Jacobi nodes for the
    weight ``x^exp``; its weights are divided by ``x^exp`` so the rule is
    applied to the full integrand. Other panels are Gauss-Legendre.
    """
    h = length / panels
    x, w = _jacobi(order, float(exp))
    x0 = 0.5 * h * (x + 1.0)
    w0 = w * (0.5 * h) ** (1.0 + exp) / x0 ** exp
    if panels == 1:
        return x0, w0
    x1, w1 = panel_rule(np.linspace(h, length, panels), order)
    return np.concatenate([x0, x1]), np.concatenate([w0, w1])


@lru_cache(maxsize=128)
def _jacobi(order, exp):
    # weight (1+x)^exp on [-1, 1]
    x, w = roots_jacobi(order, 0.0, exp)
    return x, w
