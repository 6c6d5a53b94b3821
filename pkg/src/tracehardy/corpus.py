"""Seeded corpora of admissible test fields.

Fields are finite sums of compactly supported bumps
``a exp(1 - 1/(1 - |x-c|^2/rho^2))`` (or products of one-dimensional
bumps for the half-space), so values and gradients are exact. Every
field ``k`` of a corpus draws from its own generator seeded by
``(seed, tag, k)``, which makes corpora reproducible and their members
independent of corpus size.
"""
from __future__ import annotations

import math
import zlib
from typing import List

import numpy as np

from ._quadrature import adaptive_gk
from .families import RadialProfile
from .integrate.geometry import ConeDomain, QuadratureSpec, SupportError, TestField
from .integrate.quadrature import quad1d_singular

_SPEC = QuadratureSpec(rel_tol=1e-13, abs_tol=1e-15)

__all__ = ["bump", "bump_sum_field", "product_field", "cone_corpus",
           "halfspace_corpus", "whole_line_corpus", "radial_corpus"]


def _rng(seed: int, tag: str, k: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(tag.encode()), int(k)])


def bump(q):
    """``exp(1 - 1/(1-q))`` for ``q < 1`` and 0 otherwise; returns (b, db/dq)."""
    q = np.asarray(q, dtype=float)
    inside = q < 1
    one = np.where(inside, 1.0 - q, 1.0)
    b = np.where(inside, np.exp(1.0 - 1.0 / one), 0.0)
    return b, np.where(inside, -b / (one * one), 0.0)


def bump_sum_field(centers, radii, amps, name="bumps") -> TestField:
    """``sum_j amps[j] * bump(|x - centers[j]|^2 / radii[j]^2)``."""
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    R = np.asarray(radii, dtype=float).ravel()
    A = np.asarray(amps, dtype=float).ravel()
    if not (C.shape[0] == R.size == A.size) or np.any(R <= 0):
        raise ValueError("need matching centers, positive radii and amplitudes")
    dim = C.shape[1]

    def value(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for c, r, a in zip(C, R, A):
            d = x - c
            out += a * bump(np.einsum("...i,...i->...", d, d) / r ** 2)[0]
        return out

    def gradient(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for c, r, a in zip(C, R, A):
            d = x - c
            db = bump(np.einsum("...i,...i->...", d, d) / r ** 2)[1]
            out += (a * db * 2 / r ** 2)[..., None] * d
        return out

    cn = np.linalg.norm(C, axis=1)
    breaks = tuple(sorted(set(np.concatenate([cn - R, cn, cn + R]).clip(min=0))))
    return TestField(value=value, gradient=gradient, dim=dim,
                     support_radius=float(np.max(cn + R)),
                     radial_breaks=breaks, name=name,
                     meta={"centers": C, "radii": R, "amps": A})


def product_field(centers, radii, amp=1.0, name="product") -> TestField:
    """``amp * prod_i bump((x_i - centers[i])^2 / radii[i]^2)``."""
    c = np.asarray(centers, dtype=float)
    r = np.asarray(radii, dtype=float)
    if c.shape != r.shape or np.any(r <= 0):
        raise ValueError("centers and radii must match and radii be positive")

    def parts(x):
        x = np.asarray(x, dtype=float)
        b, db = bump(((x - c) / r) ** 2)
        return x, b, db

    def value(x):
        _, b, _ = parts(x)
        return amp * np.prod(b, axis=-1)

    def gradient(x):
        x, b, db = parts(x)
        out = np.empty(x.shape)
        for i in range(c.size):
            rest = np.prod(np.delete(b, i, axis=-1), axis=-1)
            out[..., i] = amp * rest * db[..., i] * 2 * (x[..., i] - c[i]) / r[i] ** 2
        return out

    def reduced(geometry, s, spec):
        if geometry != "halfspace":
            return NotImplemented
        return _product_halfspace(c, r, amp, s)

    def reflect():
        c2 = c.copy()
        c2[-1] = -c2[-1]
        return product_field(c2, r, amp, name=name + "~")

    bounds = list(zip(c - r, c + r))
    return TestField(value=value, gradient=gradient, dim=c.size,
                     support_radius=float(np.linalg.norm(np.abs(c) + r)),
                     bounds=bounds, reduced=reduced, name=name,
                     meta={"centers": c, "radii": r, "amp": amp,
                           "reflect": reflect})


def _moment(f, lo, hi, left_exp=0.0):
    if left_exp:
        return quad1d_singular(f, lo, hi, left_exp, 0.0, _SPEC)
    return adaptive_gk(f, lo, hi, rel_tol=1e-13, abs_tol=1e-15)


def _product_halfspace(c, r, amp, s):
    """Separated half-space functionals of a bump product (``x_n`` weights)."""
    def b(i, deriv=False):
        def f(x):
            q, dq = bump(((x - c[i]) / r[i]) ** 2)
            return (dq * 2 * (x - c[i]) / r[i] ** 2) if deriv else q
        return f

    n1 = c.size - 2
    Y0, Y1 = [], []
    for i in range(n1):
        lo, hi = c[i] - r[i], c[i] + r[i]
        Y0.append(_moment(lambda x, i=i: b(i)(x) ** 2, lo, hi))
        Y1.append(_moment(lambda x, i=i: b(i, True)(x) ** 2, lo, hi))
    k = n1
    lo, hi = c[k] - r[k], c[k] + r[k]
    if lo <= 0:
        raise SupportError("product field does not vanish near x_n = 0")
    X0 = _moment(lambda x: b(k)(x) ** 2, lo, hi)
    X1 = _moment(lambda x: b(k, True)(x) ** 2, lo, hi)
    Xh = _moment(lambda x: b(k)(x) ** 2 / x ** 2, lo, hi)
    Xt = _moment(lambda x: b(k)(x) ** 2 * x ** (s - 1), lo, hi)
    j = k + 1
    lo, hi = max(0.0, c[j] - r[j]), c[j] + r[j]
    if hi <= 0:
        T0 = T1 = (0.0, 0.0)
    else:
        ex = s if lo == 0 else 0.0
        T0 = _moment(lambda t: b(j)(t) ** 2 * t ** s, lo, hi, ex)
        T1 = _moment(lambda t: b(j, True)(t) ** 2 * t ** s, lo, hi, ex)
    tr0 = float(b(j)(np.array(0.0))) ** 2
    a2 = amp * amp
    py0 = float(np.prod([y[0] for y in Y0]))
    E = py0 * (X1[0] * T0[0] + X0[0] * T1[0])
    for i in range(n1):
        E += Y1[i][0] * np.prod([Y0[m][0] for m in range(n1) if m != i]) * X0[0] * T0[0]
    Hd = py0 * Xh[0] * T0[0]
    Tr = py0 * Xt[0] * tr0
    parts = Y0 + Y1 + [X0, X1, Xh, Xt, T0, T1]
    rel = sum(e / abs(v) for v, e in parts if v) + 1e-14
    err = {"energy": a2 * abs(E) * rel, "hardy": a2 * abs(Hd) * rel,
           "trace": a2 * abs(Tr) * rel}
    return a2 * E, a2 * Hd, a2 * Tr, err


def _cone_point(cone: ConeDomain, rng):
    for _ in range(10_000):
        x = rng.standard_normal(cone.dim)
        if np.all(cone.normals @ x > 0):
            return x / np.linalg.norm(x)
    return cone.witness / np.linalg.norm(cone.witness)


def cone_corpus(cone: ConeDomain, size: int, seed: int = 0, radius: float = 1.0,
                bumps: int = 3) -> List[TestField]:
    """Bump sums supported in ``|x| < radius`` that reach the cone boundary.

    The first bump of each field is moved toward its nearest facet so the
    trace term is positive.
    """
    if size < 1:
        raise ValueError("corpus size must be >= 1")
    out = []
    for k in range(size):
        rng = _rng(seed, "cone", k)
        C, R, A = [], [], []
        for j in range(bumps):
            w = _cone_point(cone, rng)
            rho = radius * rng.uniform(0.15, 0.35)
            c = w * rng.uniform(rho, radius - rho) * 0.999
            if j == 0:
                d = cone.normals @ c
                i = int(np.argmin(d))
                c = c - (d[i] - rho * rng.uniform(0.0, 0.5)) * cone.normals[i]
            C.append(c)
            R.append(rho)
            A.append(rng.uniform(0.3, 1.0) * (1 if j == 0 else rng.choice((-1, 1))))
        out.append(bump_sum_field(C, R, A, name=f"cone[{seed}:{k}]"))
    return out


def halfspace_corpus(n: int, size: int, seed: int = 0) -> List[TestField]:
    """Bump products on ``R^n x R`` vanishing near ``x_n = 0``.

    The ``t`` bump straddles ``t = 0``, so the trace is positive.
    """
    if size < 1:
        raise ValueError("corpus size must be >= 1")
    out = []
    for k in range(size):
        rng = _rng(seed, "halfspace", k)
        cx = rng.uniform(-0.5, 0.5, n - 1)
        rx = rng.uniform(0.4, 1.0, n - 1)
        cn = rng.uniform(0.3, 1.5)
        rn = cn * rng.uniform(0.3, 0.9)
        rt = rng.uniform(0.2, 1.5)
        ct = rt * rng.uniform(-0.6, 0.6)
        out.append(product_field(np.r_[cx, cn, ct], np.r_[rx, rn, rt],
                                 rng.uniform(0.5, 2.0),
                                 name=f"halfspace[{seed}:{k}]"))
    return out


def whole_line_corpus(n: int, size: int, seed: int = 0) -> List[TestField]:
    """Bump products on ``R^n_+ x R`` with ``t`` bumps anywhere near 0."""
    if size < 1:
        raise ValueError("corpus size must be >= 1")
    out = []
    for k in range(size):
        rng = _rng(seed, "wholeline", k)
        cx = rng.uniform(-0.5, 0.5, n - 1)
        rx = rng.uniform(0.4, 1.0, n - 1)
        cn = rng.uniform(0.3, 1.5)
        rn = cn * rng.uniform(0.3, 0.9)
        rt = rng.uniform(0.2, 1.5)
        ct = rt * rng.uniform(-0.9, 0.9)
        out.append(product_field(np.r_[cx, cn, ct], np.r_[rx, rn, rt],
                                 rng.uniform(0.5, 2.0),
                                 name=f"wholeline[{seed}:{k}]"))
    return out


def radial_corpus(size: int, seed: int = 0) -> List[RadialProfile]:
    """Positive radial profiles: Gaussian mixtures with polynomial factors.

    ``v(r) = (1 + c r^2) sum_j a_j exp(-b_j r^2)``.
    """
    if size < 1:
        raise ValueError("corpus size must be >= 1")
    out = []
    for k in range(size):
        rng = _rng(seed, "radial", k)
        m = int(rng.integers(1, 4))
        a = rng.uniform(0.2, 1.0, m)
        b = np.exp(rng.uniform(math.log(0.2), math.log(5.0), m))
        c = rng.uniform(0.0, 1.0)

        def v(r, a=a, b=b, c=c):
            r = np.asarray(r, dtype=float)[..., None]
            g = np.sum(a * np.exp(-b * r * r), axis=-1)
            return (1 + c * r[..., 0] ** 2) * g

        def dv(r, a=a, b=b, c=c):
            r = np.asarray(r, dtype=float)[..., None]
            g = np.sum(a * np.exp(-b * r * r), axis=-1)
            dg = np.sum(-2 * a * b * r * np.exp(-b * r * r), axis=-1)
            r0 = r[..., 0]
            return 2 * c * r0 * g + (1 + c * r0 ** 2) * dg

        out.append(RadialProfile(v, dv, f"radial[{seed}:{k}]"))
    return out
