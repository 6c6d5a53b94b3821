"""Extremizing families, the logarithmic remainder and log inequalities.

The truncated profiles approach the sharp constants; their functionals
separate into one-dimensional integrals (``reduced`` hooks on the returned
fields) and can also be integrated directly for cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc

from ._quadrature import adaptive_gk
from .constants import InequalityParams, radial_log_prefactor, sharp_constant
from .integrate.functionals import (RadialWeight, _angular_rule, _facets,
                                    cone_functionals, facet_integral,
                                    halfspace_functionals, sphere_weight)
from .integrate.geometry import (Certificate, ConeDomain, QuadratureSpec,
                                 SupportError, TestField, sphere_measure)
from .integrate.quadrature import panel_rule, quad1d_singular
from .profiles import ConeProfile, HalfProfile, build_cone_profile, build_half_profile

__all__ = [
    "FamilyError", "NormalizationError", "CutoffSpec", "ExtremizerSpec",
    "bump_cutoff", "cone_extremizer", "half_extremizer",
    "half_extremizer_direct", "SharpnessResult", "sharpness_study",
    "critical_rates", "xk_pk", "improved_remainder", "improved_certificate",
    "RadialProfile", "radial_field", "logsob_extremal", "logsob_halfline", "transport_map",
    "ls_extremal_profile", "lh_extremal_profile", "to_sup_variable",
    "radial_log_quotients", "gamma_p", "trace_log_checks",
]


class FamilyError(ValueError):
    """Invalid family tag or parameters."""


class NormalizationError(ValueError):
    """A profile cannot be normalized (zero or non-finite mass)."""


# -------------------------------------------------------------- cutoffs


def _f(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.exp(-1.0 / x[m])
    return out


def _df(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.exp(-1.0 / x[m]) / x[m] ** 2
    return out


def _step(tau):
    """Smooth step: 1 for ``tau <= 1``, 0 for ``tau >= 2``; returns (S, S')."""
    tau = np.asarray(tau, dtype=float)
    A, B = _f(2.0 - tau), _f(tau - 1.0)
    dA, dB = -_df(2.0 - tau), _df(tau - 1.0)
    den = A + B
    return A / den, (dA * B - A * dB) / den ** 2


@dataclass(frozen=True)
class CutoffSpec:
    """Radial cutoff equal to 1 for ``|x| <= inner`` and 0 for ``|x| >= outer``.

    The transition is ``f(2-tau)/(f(2-tau)+f(tau-1))`` with
    ``f(x) = exp(-1/x)``, ``tau`` the rescaled radius; it is ``C^inf``.
    The same profile serves as the ``x'`` cutoff ``eta`` and the ``x_n``
    cutoff ``h`` of the half-space family.
    """

    inner: float = 1.0
    outer: float = 2.0

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise FamilyError("need 0 < inner < outer")

    def profile(self, rho):
        """``(S(rho), S'(rho))`` for radii ``rho``."""
        w = self.outer - self.inner
        tau = 1.0 + (np.asarray(rho, dtype=float) - self.inner) / w
        S, dS = _step(tau)
        return S, dS / w


def bump_cutoff(spec: CutoffSpec, x):
    """Cutoff value at point(s) ``x`` (last axis = coordinates) or radii."""
    x = np.asarray(x, dtype=float)
    rho = np.abs(x) if x.ndim == 0 else np.linalg.norm(x, axis=-1)
    val = spec.profile(rho)[0]
    return float(val) if np.ndim(val) == 0 else val


# -------------------------------------------------------- family specs

_TAGS = ("cone_truncation", "half_generic", "half_critical")


@dataclass(frozen=True)
class ExtremizerSpec:
    """Family tag, parameters, truncation ``eps`` and critical exponent ``delta``."""

    family: str
    params: InequalityParams
    eps: float
    delta: Optional[float] = None

    def __post_init__(self):
        if self.family not in _TAGS:
            raise FamilyError(f"unknown family {self.family!r}; use one of {_TAGS}")
        if not 0 < self.eps < 0.25:
            raise FamilyError(f"eps must lie in (0, 1/4), got {self.eps}")
        beta = self.params.beta
        if self.family == "half_generic" and not 0 <= beta < 1:
            raise FamilyError("the generic half-space family needs 0 <= beta < 1")
        if self.family == "half_critical":
            if beta != 1.0:
                raise FamilyError("the critical family needs beta = 1")
            if self.delta is None or not 0 < self.delta < 1:
                raise FamilyError("the critical family needs delta in (0, 1)")


def _gl(a, b, order=40, panels=8):
    return panel_rule(np.linspace(a, b, panels + 1), order)


# ------------------------------------------------------- cone family


def _cone_values(p: ConeProfile, cone: ConeDomain, x, grad=True):
    """Profile ``|x|^-gamma omega(d^2/|x|^2)`` with zero outside the cone."""
    x = np.asarray(x, dtype=float)
    dist = cone.distance(x)
    d, facet = dist.d, dist.facet
    r2 = np.einsum("...i,...i->...", x, x)
    inside = (d >= 0) & (r2 > 0)
    r2s = np.where(inside, r2, 1.0)
    z = np.clip(np.where(inside, d * d / r2s, 0.0), 0.0, 1.0)
    g = p.gamma
    rg = r2s ** (-g / 2)
    if not grad:
        return np.where(inside, rg * p.omega(z.ravel(), deriv=0).reshape(z.shape), 0.0)
    zz = np.where(z > 0, z, 1.0)
    w, dw = p.omega(zz.ravel(), deriv=1)
    w = np.where(z > 0, w.reshape(z.shape), 1.0)
    dw = np.where(z > 0, dw.reshape(z.shape), 0.0)
    phi = np.where(inside, rg * w, 0.0)
    u = cone.normals[facet]
    dz = ((2 * d / r2s)[..., None] * u
          - (2 * d * d / r2s ** 2)[..., None] * x)
    gr = ((-g * rg * w / r2s)[..., None] * x + (rg * dw)[..., None] * dz)
    return phi, np.where(inside[..., None], gr, 0.0)


def _cone_angular_moments(p: ConeProfile, cone: ConeDomain, order, levels=40):
    """``A0 = int Omega^2 sin^s``, ``A1 = int Omega_a^2 sin^s``, ``T0``."""
    s = p.params.s
    N = cone.dim
    A0 = A1 = T0 = 0.0
    for f in _facets(cone):
        V, sa, w, W, wW = _angular_rule(f, N, s, order, a_exp=-abs(s),
                                        a_levels=levels)
        if V.shape[0] == 0:
            continue
        z = np.clip(sa * sa, 1e-300, 1.0)
        om, dom = p.omega(z, deriv=1)
        ca = np.sqrt(np.clip(1 - z, 0.0, 1.0))
        dal = dom * 2 * sa * ca
        ws = w * sa ** s
        A0 += float(np.sum(ws * om * om))
        A1 += float(np.sum(ws * dal * dal))
        T0 += float(np.sum(wW))
    return A0, A1, T0


def _cutoff_moments(cut: CutoffSpec):
    """``m1 = int S'^2 rho``, ``l_in = int (1-S)^2/rho``, ``l_out = int S^2/rho``."""
    a, b = cut.inner, cut.outer

    def one(fn):
        return adaptive_gk(fn, a, b, rel_tol=1e-13, abs_tol=1e-16)[0]

    m1 = one(lambda r: cut.profile(r)[1] ** 2 * r)
    l_in = one(lambda r: (1 - cut.profile(r)[0]) ** 2 / r)
    l_out = one(lambda r: cut.profile(r)[0] ** 2 / r)
    return m1, l_in, l_out


def cone_extremizer(p: ConeProfile, eps: float, cutoffs: CutoffSpec | None = None,
                    cone: ConeDomain | None = None) -> TestField:
    """Truncated cone profile ``phi (1 - phi_eps) phi_{1/eps}``.

    The cutoff ``phi_eps(x) = S(|x|/eps)`` removes a neighborhood of the
    origin and ``phi_{1/eps}`` truncates at ``|x| ~ 2/eps``. The returned
    field carries an exact separated form of its functionals; direct
    quadrature is available through ``cone_functionals(mode="direct")``.
    """
    cut = cutoffs or CutoffSpec()
    if not 0 < eps < 0.25:
        raise FamilyError(f"eps must lie in (0, 1/4), got {eps}")
    params = p.params
    cone = cone or ConeDomain.halfspace(params.n + 1)
    if cone.dim != params.n + 1:
        raise FamilyError("cone dimension must be n + 1")
    a, b = cut.inner, cut.outer

    def chi(r):
        s1, d1 = cut.profile(r / eps)
        s2, d2 = cut.profile(r * eps)
        return (1 - s1) * s2, -d1 / eps * s2 + (1 - s1) * d2 * eps

    def value(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        c = chi(r)[0]
        out = np.zeros(r.shape)
        m = c != 0
        if np.any(m):
            out[m] = _cone_values(p, cone, x[m], grad=False) * c[m]
        return out

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        c, dc = chi(r)
        out = np.zeros(x.shape)
        m = c != 0
        if np.any(m):
            phi, gphi = _cone_values(p, cone, x[m])
            rm = r[m][..., None]
            out[m] = gphi * c[m][..., None] + (phi * dc[m])[..., None] * x[m] / rm
        return out

    def reduced(geometry, prm, spec):
        if geometry is not cone and not (
                isinstance(geometry, ConeDomain)
                and geometry.normals.shape == cone.normals.shape
                and np.allclose(geometry.normals, cone.normals, atol=1e-14)):
            raise FamilyError("field was built for a different cone")
        if prm.as_dict() != params.as_dict():
            raise FamilyError("field was built for different parameters")
        spec = spec or QuadratureSpec()
        m1, l_in, l_out = _cutoff_moments(cut)
        M = 2 * m1
        L0 = l_in + math.log((a / eps) / (b * eps)) + l_out
        g2 = p.gamma ** 2
        lv = [_cone_angular_moments(p, cone, o) for o in spec.orders[-2:]]
        (A0, A1, T0), (B0, B1, U0) = lv
        E = (M + g2 * L0) * B0 + L0 * B1
        Hd = L0 * B0
        Tr = L0 * U0
        err = {"energy": (M + g2 * L0) * abs(B0 - A0) + L0 * abs(B1 - A1)
               + 1e-15 * abs(E),
               "hardy": L0 * abs(B0 - A0) + 1e-15 * Hd,
               "trace": L0 * abs(U0 - T0) + 1e-15 * Tr}
        return E, Hd, Tr, err

    return TestField(
        value=value, gradient=gradient, dim=cone.dim,
        support_radius=b / eps, inner_radius=a * eps,
        radial_breaks=(b * eps, a / eps), reduced=reduced,
        name=f"cone_truncation(eps={eps:g})",
        meta={"family": "cone_truncation", "eps": eps, "params": params,
              "cone": cone, "angular_exponent": -abs(params.s),
              "angular_levels": 24})


# -------------------------------------------------- half-space family


def _weight_fn(p: HalfProfile, delta: float):
    """``W = omega^(1+delta)`` with ``W'`` and ``P = s W/2 + y W'``."""
    e = 1.0 + delta
    s = p.s

    def W(y):
        y = np.asarray(y, dtype=float)
        om, dom = p.omega(y, deriv=1)
        om = np.maximum(om, 0.0)
        w = om ** e
        dw = e * om ** delta * dom if delta else dom
        return w, dw, s * w / 2 + y * dw

    return W


def _eta_moments(cut: CutoffSpec, n: int):
    """``int eta^2`` and ``int |grad eta|^2`` over ``R^(n-1)``."""
    area = sphere_measure(n - 2)
    k = n - 2
    I0 = area * (cut.inner ** (k + 1) / (k + 1)
                 + adaptive_gk(lambda r: cut.profile(r)[0] ** 2 * r ** k,
                               cut.inner, cut.outer, 1e-13, 1e-16)[0])
    I1 = area * adaptive_gk(lambda r: cut.profile(r)[1] ** 2 * r ** k,
                            cut.inner, cut.outer, 1e-13, 1e-16)[0]
    return I0, I1


_U_MAX = 690.0


def _half_reduced(p: HalfProfile, eps, delta, cut: CutoffSpec, rel_tol=1e-10):
    """Separated functionals ``G0, G1, Hd2, Tr2`` of the half-space family.

    Coordinates ``(x_n, y = t/x_n)``; the ``x_n`` cutoff enters through the
    moments ``int h^2/x``, ``int h^2 x``, ``int h'^2 x``, ``int h h'`` over
    ``[max(eps/y, 0), outer]``.
    """
    s = p.s
    a, b = cut.inner, cut.outer
    W = _weight_fn(p, delta)
    xg, wg = _gl(a, b)
    h, dh = cut.profile(xg)
    ha = float(np.sum(wg * h * h / xg))
    hb = float(np.sum(wg * h * h * xg))
    hc = float(np.sum(wg * dh * dh * xg))
    hd = float(np.sum(wg * h * dh))
    spec = QuadratureSpec(rel_tol=rel_tol, abs_tol=1e-15)

    # y >= eps/a: the x_n range [eps/y, a] has h = 1
    def up(y, which):
        w, dw, P = W(y)
        ys = y ** s
        xl = eps / y
        Ha = np.log(a / xl) + ha
        Hb = (a * a - xl * xl) / 2 + hb
        if which == "E":
            return ys * (Ha * (P * P + dw * dw) + hc * w * w - 2 * hd * w * P)
        if which == "H":
            return ys * Ha * w * w
        return ys * Hb * w * w

    # y in [eps/b, eps/a]: x_n range [eps/y, b] inside the transition
    tq, twq = _gl(0.0, 1.0, 20, 1)

    def up_edge(y, which):
        xl = eps / y
        X = xl[:, None] + (b - xl)[:, None] * tq[None, :]
        WX = (b - xl)[:, None] * twq[None, :]
        hh, dhh = cut.profile(X)
        Ha = np.sum(WX * hh * hh / X, axis=1)
        Hb = np.sum(WX * hh * hh * X, axis=1)
        Hc = np.sum(WX * dhh * dhh * X, axis=1)
        Hd = np.sum(WX * hh * dhh, axis=1)
        w, dw, P = W(y)
        ys = y ** s
        if which == "E":
            return ys * (Ha * (P * P + dw * dw) + Hc * w * w - 2 * Hd * w * P)
        if which == "H":
            return ys * Ha * w * w
        return ys * Hb * w * w

    kappa = p.r if delta == 0 else delta * (1 + s)
    y0 = eps / a

    # tails decay like y^(-1-kappa) (ln y)^k: integrate in u = ln y up to
    # where exp(-kappa u) is negligible
    u_hi = min(_U_MAX, 60.0 / kappa) if kappa > 0 else _U_MAX
    u_lo = math.log(y0)
    brk = np.linspace(u_lo, u_hi, max(8, int((u_hi - u_lo) / 4)))

    def tailint(fn):
        def g(u):
            y = np.exp(u)
            with np.errstate(over="ignore", under="ignore", invalid="ignore"):
                v = np.asarray(fn(y), dtype=float) * y
            return np.where(np.isfinite(v), v, 0.0)
        v, e = adaptive_gk(g, u_lo, u_hi, rel_tol=rel_tol, abs_tol=1e-300,
                           breaks=brk, max_depth=40)
        if u_hi == _U_MAX:
            # remaining tail bounded by the last panel's decay
            e += abs(g(np.array([u_hi]))[0]) / max(kappa, 1e-300)
        return v, e

    pieces = {}
    for key in ("E", "H", "G0"):
        v1, e1 = tailint(lambda y, k=key: up(y, k))
        v2, e2 = quad1d_singular(lambda y, k=key: up_edge(y, k), eps / b, y0,
                                 0.0, 0.0, spec)
        pieces[key] = [v1 + v2, e1 + e2]

    # frozen slab 0 <= t < eps: factor eps^(1+s)/(1+s)
    fz = eps ** (1 + s) / (1 + s)

    def fr(y, which):
        w, dw, P = W(y)
        if which == "E":
            return y ** s * P * P
        if which == "H":
            return y ** s * w * w
        if which == "G0":
            return y ** (s - 2) * w * w
        return w * w / y

    # x_n in [a, b], Y = eps/x_n: direct Gauss rule
    X, WX = _gl(a, b)
    hh, dhh = cut.profile(X)
    w, dw, P = W(eps / X)
    gx = dhh * X ** (-s / 2) * w - hh * X ** (-s / 2 - 1) * P
    g = hh * X ** (-s / 2) * w
    edge = {"E": float(np.sum(WX * gx * gx)),
            "H": float(np.sum(WX * g * g / X ** 2)),
            "G0": float(np.sum(WX * g * g))}
    scale = {"E": 1 / (1 + s), "H": 1 / (1 + s), "G0": eps ** 2 / (1 + s)}
    for key in ("E", "H", "G0"):
        v, e = tailint(lambda y, k=key: fr(y, k))
        pieces[key][0] += scale[key] * v + fz * edge[key]
        pieces[key][1] += scale[key] * e
    vt, et = tailint(lambda y: fr(y, "T"))
    tr_edge = float(np.sum(WX * hh * hh * w * w / X))
    return {"G1": tuple(pieces["E"]), "Hd2": tuple(pieces["H"]),
            "G0": tuple(pieces["G0"]), "Tr2": (vt + tr_edge, et)}


def half_extremizer(spec: ExtremizerSpec, cutoffs: CutoffSpec | None = None) -> TestField:
    """Half-space family ``eta(x') h(x_n) x_n^(-s/2) W(max(t, eps)/x_n)``.

    ``W = omega`` for the generic family and ``omega^(1+delta)`` for the
    critical one. Coordinates are ``(x', x_n, t)``. The functionals are
    available in separated form (see :func:`halfspace_functionals`) and
    directly through :func:`half_extremizer_direct`.
    """
    if spec.family not in ("half_generic", "half_critical"):
        raise FamilyError(f"{spec.family!r} is not a half-space family")
    cut = cutoffs or CutoffSpec()
    prm = spec.params
    n, s = prm.n, prm.s
    p = build_half_profile(s, prm.beta)
    delta = spec.delta if spec.family == "half_critical" else 0.0
    W = _weight_fn(p, delta)
    eps = spec.eps

    def parts(x):
        x = np.asarray(x, dtype=float)
        xp, xn, t = x[..., :n - 1], x[..., n - 1], x[..., n]
        rho = np.linalg.norm(xp, axis=-1)
        eta, deta = cut.profile(rho)
        pos = xn > 0
        xs = np.where(pos, xn, 1.0)
        h, dh = cut.profile(xs)
        Y = np.maximum(t, eps) / xs
        w, dw, P = W(Y.ravel())
        shp = Y.shape
        return (xp, rho, eta, deta, pos, xs, h, dh, t,
                w.reshape(shp), dw.reshape(shp), P.reshape(shp))

    def value(x):
        xp, rho, eta, deta, pos, xs, h, dh, t, w, dw, P = parts(x)
        return np.where(pos, eta * h * xs ** (-s / 2) * w, 0.0)

    def gradient(x):
        xp, rho, eta, deta, pos, xs, h, dh, t, w, dw, P = parts(x)
        xpow = xs ** (-s / 2)
        g = np.zeros(np.shape(x))
        rs = np.where(rho > 0, rho, 1.0)
        g[..., :n - 1] = ((deta * h * xpow * w / rs)[..., None] * xp)
        g[..., n - 1] = eta * (dh * xpow * w - h * xpow / xs * P)
        g[..., n] = np.where(t > eps, eta * h * xpow / xs * dw, 0.0)
        return np.where(pos[..., None], g, 0.0)

    I0, I1 = _eta_moments(cut, n)

    def reduced(geometry, s_arg, qspec):
        if geometry != "halfspace" or s_arg != s:
            raise FamilyError("field was built for the half-space with this s")
        red = _half_reduced(p, eps, delta, cut)
        G0, G1, Hd2, Tr2 = red["G0"], red["G1"], red["Hd2"], red["Tr2"]
        E = I1 * G0[0] + I0 * G1[0]
        err = {"energy": I1 * G0[1] + I0 * G1[1] + 1e-14 * abs(E),
               "hardy": I0 * Hd2[1] + 1e-14 * I0 * Hd2[0],
               "trace": I0 * Tr2[1] + 1e-14 * I0 * Tr2[0]}
        return E, I0 * Hd2[0], I0 * Tr2[0], err

    bounds = [(-cut.outer, cut.outer)] * (n - 1) + [(0.0, cut.outer), (0.0, math.inf)]
    return TestField(value=value, gradient=gradient, dim=n + 1,
                     support_radius=math.inf, bounds=bounds, reduced=reduced,
                     name=f"{spec.family}(eps={eps:g})",
                     meta={"family": spec.family, "eps": eps, "delta": delta,
                           "params": prm, "profile": p, "eta_moments": (I0, I1)})


def half_extremizer_direct(spec: ExtremizerSpec, cutoffs: CutoffSpec | None = None,
                           order=20):
    """Direct ``(x_n, t)`` quadrature of the half-space family functionals.

    Uses the product structure in ``x'`` only; ``x_n`` and ``t`` are
    integrated on geometric tensor panels without the ``y = t/x_n``
    substitution, out to ``t`` where the algebraic tail is negligible.
    Returns ``(energy, hardy, trace)``.
    """
    cut = cutoffs or CutoffSpec()
    u = half_extremizer(spec, cut)
    s, eps = spec.params.s, spec.eps
    I0, I1 = u.meta["eta_moments"]
    p = u.meta["profile"]
    delta = u.meta["delta"]
    W = _weight_fn(p, delta)
    kappa = p.r if delta == 0 else delta * (1 + s)
    # both t -> inf and x_n -> 0 probe the y^(-1-kappa) tail of W
    span = min(60.0 / kappa, 200.0)
    nx = int(math.ceil(span + math.log(cut.inner / eps)))
    xe = np.unique(np.concatenate([
        np.geomspace(eps * math.exp(-span), cut.inner, nx + 1),
        np.linspace(cut.inner, cut.outer, 9)]))
    xr, xw = panel_rule(xe, order)
    te = eps * np.exp(np.linspace(0.0, span, int(math.ceil(span)) + 1))
    h, dh = cut.profile(xr)
    xp = xr ** (-s / 2)
    G0 = G1 = H2 = 0.0
    for k in range(0, te.size - 1, 32):
        tr, tw = panel_rule(te[k:k + 33], order)
        Y = tr[None, :] / xr[:, None]
        w, dw, P = (a.reshape(Y.shape) for a in W(Y.ravel()))
        WW = np.outer(xw, tw) * tr[None, :] ** s
        g = (h * xp)[:, None] * w
        gx = (dh * xp)[:, None] * w - (h * xp / xr)[:, None] * P
        gt = (h * xp / xr)[:, None] * dw
        G0 += np.sum(WW * g * g)
        G1 += np.sum(WW * (gx * gx + gt * gt))
        H2 += np.sum(WW * g * g / xr[:, None] ** 2)
    w1, dw1, P1 = W(eps / xr)
    g1 = h * xp * w1
    gx1 = dh * xp * w1 - h * xp / xr * P1
    fz = eps ** (1 + s) / (1 + s)
    G0 += fz * np.sum(xw * g1 * g1)
    G1 += fz * np.sum(xw * gx1 * gx1)
    H2 += fz * np.sum(xw * g1 * g1 / xr ** 2)
    Tr2 = np.sum(xw * g1 * g1 / xr ** (1 - s))
    return float(I1 * G0 + I0 * G1), float(I0 * H2), float(I0 * Tr2)


# ------------------------------------------------------ sharpness runs


@dataclass
class SharpnessResult:
    """Quotients along an ``eps`` schedule and the gap to the sharp value."""

    family: str
    params: InequalityParams
    eps: tuple
    quotients: tuple
    errors: tuple
    sharp: float
    limit: float
    gap: float
    monotone: bool
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        return {"family": self.family, "params": self.params.as_dict(),
                "eps": list(self.eps), "quotients": list(self.quotients),
                "errors": list(self.errors), "sharp": self.sharp,
                "limit": self.limit, "gap": self.gap,
                "monotone": self.monotone}


def _check_schedule(eps_schedule):
    eps = tuple(float(e) for e in eps_schedule)
    if not eps:
        raise FamilyError("empty eps schedule")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise FamilyError("eps schedule must be strictly decreasing")
    return eps


def _extrapolate(eps, qs):
    """Value at ``1/ln(1/eps) = 0`` of a polynomial fit through the last points."""
    if len(eps) < 2:
        return qs[-1]
    k = min(3, len(eps))
    x = np.array([1 / math.log(1 / e) for e in eps[-k:]])
    return float(np.polyfit(x, np.array(qs[-k:]), k - 1)[-1])


def sharpness_study(family: str, params: InequalityParams, eps_schedule,
                    cone: ConeDomain | None = None, delta: float | None = None,
                    spec: QuadratureSpec | None = None,
                    cutoffs: CutoffSpec | None = None) -> SharpnessResult:
    """Rayleigh quotients of a family along a decreasing ``eps`` schedule.

    ``limit`` extrapolates in ``x = 1/ln(1/eps)`` with a polynomial
    through the last (up to three) points, since the truncation error
    decays like ``C x``; ``gap`` is
    the relative distance of the last quotient to the sharp constant.
    """
    eps = _check_schedule(eps_schedule)
    spec = spec or QuadratureSpec()
    qs, errs = [], []
    if family == "cone_truncation":
        p = build_cone_profile(params)
        cone = cone or ConeDomain.halfspace(params.n + 1)
        sharp = p.H
        c = (params.beta - 2) ** 2 / 4
        for e in eps:
            u = cone_extremizer(p, e, cutoffs, cone)
            F = cone_functionals(u, cone, params, spec)
            qs.append((F.energy - c * F.hardy) / F.trace)
            errs.append((F.errors["energy"] + c * F.errors["hardy"]) / F.trace
                        + abs(qs[-1]) * F.errors["trace"] / F.trace)
    elif family in ("half_generic", "half_critical"):
        sharp = sharp_constant("k_half", params)
        c = params.beta ** 2 / 4
        for e in eps:
            u = half_extremizer(ExtremizerSpec(family, params, e, delta), cutoffs)
            F = halfspace_functionals(u, params.s, "xn_weight", spec)
            qs.append((F.energy - c * F.hardy) / F.trace)
            errs.append((F.errors["energy"] + c * F.errors["hardy"]) / F.trace
                        + abs(qs[-1]) * F.errors["trace"] / F.trace)
    else:
        raise FamilyError(f"unknown family {family!r}")
    limit = _extrapolate(eps, qs)
    gap = abs(qs[-1] - sharp) / abs(sharp)
    mono = all(b < a for a, b in zip(qs, qs[1:]))
    return SharpnessResult(family, params, eps, tuple(qs), tuple(errs),
                           sharp, limit, gap, mono)


def critical_rates(s: float, deltas: Sequence[float], eps_list: Sequence[float],
                   n: int = 2, cutoffs: CutoffSpec | None = None):
    """Growth rates of the critical family (``beta = 1``).

    For each ``delta`` fits ``trace = c0 + c1 (-ln eps)`` and
    ``excess = e0 + e1 (-ln eps)`` where ``excess = energy - hardy/4 -
    k(s,1) trace``. Returns a list of dicts with the fitted constants;
    ``C_inv_delta = e0 delta`` and ``C_delta_log = e1 / delta`` are the
    constants of the bound ``C/delta - C delta ln eps``.
    """
    params = InequalityParams(n, s, 1.0)
    k = sharp_constant("k_half", params)
    out = []
    L = np.array([-math.log(e) for e in eps_list])
    for d in deltas:
        tr, ex = [], []
        for e in eps_list:
            u = half_extremizer(ExtremizerSpec("half_critical", params, e, d), cutoffs)
            F = halfspace_functionals(u, s, "xn_weight")
            tr.append(F.trace)
            ex.append(F.energy - F.hardy / 4 - k * F.trace)
        c1, c0 = np.polyfit(L, tr, 1)
        e1, e0 = np.polyfit(L, ex, 1)
        out.append({"delta": d, "trace_slope": float(c1), "trace_offset": float(c0),
                    "excess_slope": float(e1), "excess_offset": float(e0),
                    "C_inv_delta": float(e0 * d), "C_delta_log": float(e1 / d),
                    "trace": tr, "excess": ex})
    return out


# --------------------------------------------- logarithmic remainder


def xk_pk(k: int, t):
    """Iterated logarithms ``X_1 = 1/(1 - ln t)``, ``X_k = X_1(X_(k-1))``.

    Returns ``(X_k(t), P_k(t))`` with ``P_k = X_1 ... X_k``.
    """
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t > 1):
        raise ValueError("t must lie in (0, 1]")
    X = t
    P = np.ones_like(t)
    for _ in range(int(k)):
        X = 1.0 / (1.0 - np.log(X))
        P = P * X
    if X.ndim == 0:
        return float(X), float(P)
    return X, P


def _pk_weights(K, D):
    ws = []
    for i in range(1, K + 1):
        def w(r, i=i):
            t = np.clip(np.asarray(r, dtype=float) / D, 1e-300, 1.0)
            return 0.25 * xk_pk(i, t)[1] ** 2
        ws.append(RadialWeight(f"P{i}", w))
    return ws


def _check_D(u, D):
    if not D > 0:
        raise ValueError("D must be positive")
    if u.support_radius > D * (1 + 1e-12):
        raise SupportError(f"support radius {u.support_radius} exceeds D={D}")


def improved_remainder(u: TestField, cone: ConeDomain, params: InequalityParams,
                       D: float, K: int = 5, spec: QuadratureSpec | None = None,
                       return_error=False):
    """``(1/4) sum_(i<=K) int P_i(|x|/D)^2 u^2/|x|^2 d^s`` over the cone."""
    _check_D(u, D)
    if int(K) != K or K < 1:
        raise ValueError("K must be a positive integer")
    F = cone_functionals(u, cone, params, spec, mode="direct",
                         extras=_pk_weights(int(K), D))
    val = sum(F.extras.values())
    err = sum(F.errors[k] for k in F.extras)
    return (val, err) if return_error else val


def improved_certificate(u: TestField, cone: ConeDomain, params: InequalityParams,
                         D: float, K: int = 5,
                         spec: QuadratureSpec | None = None) -> Certificate:
    """Cone inequality with the truncated logarithmic remainder added."""
    _check_D(u, D)
    F = cone_functionals(u, cone, params, spec, mode="direct",
                         extras=_pk_weights(int(K), D))
    c = (params.beta - 2) ** 2 / 4
    H = sharp_constant("H_cone", params)
    rem = sum(F.extras.values())
    e = F.errors
    err = (e["energy"] + c * e["hardy"] + H * e["trace"]
           + sum(e[k] for k in F.extras))
    return Certificate(F.energy, {"hardy": c * F.hardy, "trace": H * F.trace,
                                  "remainder": rem},
                       err, params, "improved_cone_hardy",
                       {"K": int(K), "D": D, "method": F.method})


# ------------------------------------------------ log inequalities


@dataclass(frozen=True)
class RadialProfile:
    """Radial function ``value(r)`` with derivative ``deriv(r)`` on ``r > 0``."""

    value: Callable
    deriv: Callable
    name: str = "profile"

    def __call__(self, r):
        return self.value(r)

    def scaled(self, c: float) -> "RadialProfile":
        v, d = self.value, self.deriv
        return RadialProfile(lambda r: c * v(r), lambda r: c * d(r), self.name)


def _line(fn, lo=-60.0, hi=60.0, rel_tol=1e-13):
    """``int_0^inf fn(r) dr`` in the variable ``ln r``."""
    def g(x):
        r = np.exp(x)
        with np.errstate(over="ignore", under="ignore", invalid="ignore",
                         divide="ignore"):
            v = np.asarray(fn(r), dtype=float) * r
        return np.where(np.isfinite(v), v, 0.0)

    return adaptive_gk(g, lo, hi, rel_tol=rel_tol, abs_tol=1e-300,
                       breaks=np.linspace(lo, hi, 61))


def _xlogx(v2):
    v2 = np.asarray(v2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v2 > 0, v2 * np.log(np.where(v2 > 0, v2, 1.0)), 0.0)


def _normalize(u: RadialProfile, weight, tol):
    mass = _line(lambda r: u(r) ** 2 * weight(r))[0]
    if not np.isfinite(mass) or mass <= 0:
        raise NormalizationError(f"profile mass {mass} cannot be normalized")
    if abs(mass - 1) > tol:
        u = u.scaled(1 / math.sqrt(mass))
    return u, mass


def logsob_extremal(a: float, lam: float = 1.0) -> RadialProfile:
    """``lam^(a/2) (2/Gamma(a/2))^(1/2) exp(-lam^2 r^2/2)``."""
    c = lam ** (a / 2) * math.sqrt(2 / math.gamma(a / 2))
    return RadialProfile(lambda r: c * np.exp(-(lam * np.asarray(r)) ** 2 / 2),
                         lambda r: -c * lam ** 2 * np.asarray(r)
                         * np.exp(-(lam * np.asarray(r)) ** 2 / 2),
                         f"gauss(a={a:g}, lam={lam:g})")


def logsob_halfline(u: RadialProfile, a: float, spec: QuadratureSpec | None = None,
                    tol: float = 1e-8):
    """Deficit of the half-line log-Sobolev inequality with weight ``r^(a-1)``.

    Returns ``(deficit, entropy, energy)`` after normalizing
    ``int u^2 r^(a-1) = 1``; the deficit is
    ``(a/2) ln(K_a energy) - entropy`` with
    ``K_a = 2/(a e) (2/Gamma(a/2))^(2/a)``.
    """
    if a < 1:
        raise ValueError("a must be >= 1")
    wt = lambda r: r ** (a - 1)
    u, _ = _normalize(u, wt, tol)
    ent = _line(lambda r: _xlogx(u(r) ** 2) * wt(r))[0]
    en = _line(lambda r: u.deriv(r) ** 2 * wt(r))[0]
    K = sharp_constant("logsob_halfline", None, a)
    return (a / 2) * math.log(K * en) - ent, ent, en


def transport_map(u: RadialProfile, a: float, r_grid, tol: float = 1e-10):
    """Monotone map pushing ``u^2 r^(a-1) dr`` onto the Gaussian reference.

    ``T(r)`` solves ``int_0^r u^2 t^(a-1) = int_0^T u0^2 t^(a-1)`` with
    ``u0 = exp(-r^2/2)/c_a``, ``c_a^2 = Gamma(a/2)/2``; the reference
    cumulative is the regularized incomplete gamma ``P(a/2, T^2)``. Past
    the median the complementary masses are matched instead, which keeps
    the tail well conditioned.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(np.diff(r_grid) <= 0) or np.any(r_grid <= 0):
        raise ValueError("r_grid must be positive and increasing")
    wt = lambda r: r ** (a - 1)
    u, _ = _normalize(u, wt, 1e-12)
    f = lambda r: u(r) ** 2 * wt(r)
    out = np.empty(r_grid.size)
    for i, r in enumerate(r_grid):
        lower = _line(f, -60.0, math.log(r), rel_tol=1e-14)[0]
        if lower <= 0.5:
            g = lambda T, c=lower: gammainc(a / 2, T * T) - c
        else:
            upper = _line(f, math.log(r), 60.0, rel_tol=1e-14)[0]
            g = lambda T, c=upper: c - gammaincc(a / 2, T * T)
        hi = max(1.0, 2 * r)
        while g(hi) < 0:
            hi *= 2
            if hi > 1e6:
                raise ValueError("transport map bracketing failed")
        if g(0.0) >= 0:
            out[i] = 0.0
            continue
        out[i] = brentq(g, 0.0, hi, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)
    return out


def ls_extremal_profile(n: int, s: float, lam: float = 1.0) -> RadialProfile:
    """Radial extremal of the log-Sobolev trace quotient in ``rho = |(x,t)|``.

    ``c lam^(n/2) exp(-(lam rho)^(1-s)/2)`` with ``c`` chosen so that
    ``|S^(n-1)| int u^2 rho^(n-1) = 1``.
    """
    om = sphere_weight(n, 0.0, boundary=True)
    c = lam ** (n / 2) * math.sqrt((1 - s) / (om * math.gamma(n / (1 - s))))
    e = 1 - s

    def v(r):
        return c * np.exp(-(lam * np.asarray(r, dtype=float)) ** e / 2)

    def dv(r):
        r = np.asarray(r, dtype=float)
        return -c * e / 2 * lam ** e * r ** (e - 1) * np.exp(-(lam * r) ** e / 2)

    return RadialProfile(v, dv, f"ls_extremal(lam={lam:g})")


def lh_extremal_profile(n: int, s: float, lam: float = 1.0) -> RadialProfile:
    """Radial extremal of the log-Hardy trace quotient in ``rho = |(x,t)|``.

    ``c lam^(m/2) (lam rho)^(-m/2) exp(-m^2/(4(A-1)) ln(lam rho)^2)`` with
    ``m = n-1+s``, ``A = 2n/(1-s)``.
    """
    m = n - 1 + s
    A = 2 * n / (1 - s)
    om = sphere_weight(n, 0.0, boundary=True)
    c = (m * m / (2 * math.pi * (A - 1) * om ** 2)) ** 0.25 * lam ** (m / 2)
    kappa = m * m / (4 * (A - 1))

    def v(r):
        lr = np.log(lam * np.asarray(r, dtype=float))
        return c * np.exp(-m / 2 * lr - kappa * lr * lr)

    def dv(r):
        r = np.asarray(r, dtype=float)
        lr = np.log(lam * r)
        return c * np.exp(-m / 2 * lr - kappa * lr * lr) * (-m / 2 - 2 * kappa * lr) / r

    return RadialProfile(v, dv, f"lh_extremal(lam={lam:g})")


def radial_field(v: RadialProfile, n: int, r_min: float = 1e-8,
                 r_max: float = 1e8) -> TestField:
    """Field ``v(|(x, t)|)`` on ``R^n x [0, inf)``, last coordinate ``t``.

    ``[r_min, r_max]`` bounds the quadrature range; the profile must be
    negligible outside it.
    """
    def value(x):
        return v(np.linalg.norm(x, axis=-1))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        rs = np.where(r > 0, r, 1.0)
        return (v.deriv(rs) / rs)[..., None] * x

    breaks = tuple(np.geomspace(r_min, r_max, 9)[:-1])
    return TestField(value=value, gradient=gradient, dim=n + 1,
                     support_radius=r_max, radial_breaks=breaks,
                     name=f"radial[{v.name}]", meta={"radial": v})


def to_sup_variable(u: RadialProfile, s: float) -> RadialProfile:
    """``v(r) = u(r^(2/(1-s)))``, the variable of the radial suprema."""
    q = 2 / (1 - s)
    return RadialProfile(
        lambda r: u(np.asarray(r, dtype=float) ** q),
        lambda r: u.deriv(np.asarray(r, dtype=float) ** q) * q
        * np.asarray(r, dtype=float) ** (q - 1),
        f"{u.name}@sup")


def radial_log_quotients(v: RadialProfile, n: int, s: float, kind: str,
                         spec: QuadratureSpec | None = None,
                         normalize: bool = True, tol: float = 1e-8) -> float:
    """Quotient of the radial log-Sobolev (``LS``) or log-Hardy (``LH``) supremum.

    ``v`` is a profile in the substituted variable (see
    :func:`to_sup_variable`) with weight ``r^(A-1)``, ``A = 2n/(1-s)``.
    The value includes the dimensional prefactor, so its supremum is the
    radial constant.
    """
    if kind not in ("LS", "LH"):
        raise ValueError("kind must be 'LS' or 'LH'")
    A = 2 * n / (1 - s)
    wt = (lambda r: r ** (A - 1)) if kind == "LS" else (lambda r: r ** (A - 3))
    if normalize:
        v, _ = _normalize(v, wt, tol)
    else:
        mass = _line(lambda r: v(r) ** 2 * wt(r))[0]
        if abs(mass - 1) > tol:
            raise NormalizationError(f"profile mass {mass} != 1")
    if kind == "LS":
        ent = _line(lambda r: _xlogx(v(r) ** 2) * r ** (A - 1))[0]
    else:
        def f(r):
            v2 = v(r) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                lg = np.where(v2 > 0, np.log(np.where(v2 > 0, v2, 1.0)), 0.0)
            return v2 * r ** (A - 3) * (lg - (2 - A) * np.log(r))
        ent = _line(f)[0]
    en = _line(lambda r: v.deriv(r) ** 2 * r ** (A - 1))[0]
    return radial_log_prefactor(n, s) * math.exp((1 - s) / n * ent) / en


def gamma_p(n: int, s: float, p: float) -> float:
    """Hardy weight exponent ``(1-s)/p - (p-2)(n+s-1)/(2p)``."""
    return (1 - s) / p - (p - 2) * (n + s - 1) / (2 * p)


def _trace_log_terms_radial(v: RadialProfile, n, s, kind):
    """Energy, trace mass and entropy integral of ``v(|(x, t)|)`` in 1D."""
    om = sphere_weight(n, 0.0, boundary=True)
    en = sphere_weight(n, s) * _line(lambda r: v.deriv(r) ** 2 * r ** (n + s))[0]
    if kind == "LS":
        mass = om * _line(lambda r: v(r) ** 2 * r ** (n - 1))[0]
        S = om * _line(lambda r: _xlogx(v(r) ** 2) * r ** (n - 1))[0]
    else:
        mass = om * _line(lambda r: v(r) ** 2 * r ** (n - 2 + s))[0]

        def f(r):
            v2 = v(r) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                lg = np.where(v2 > 0, np.log(np.where(v2 > 0, v2, 1.0)), 0.0)
            return v2 * r ** (n - 2 + s) * (lg - (1 - s - n) * np.log(r))
        S = om * _line(f)[0]
    tol = 1e-12 * (abs(en) + abs(mass) + abs(S))
    return (en, tol), (mass, tol), (S, tol)


def trace_log_checks(u: TestField, n: int, s: float, kind: str,
                     spec: QuadratureSpec | None = None) -> Certificate:
    """Log-Sobolev / log-Hardy trace inequality with ``C = C_(n,s)``.

    ``u`` lives on ``R^n x [0, inf)`` (last coordinate ``t``); the trace
    normalization is enforced by rescaling. The certificate's ``lhs`` is
    ``(n/(1-s)) ln(C_(n,s) energy)`` and its single ``rhs`` term is the
    entropy, so ``margin >= 0`` is the inequality. Fields built by
    :func:`radial_field` are integrated in the radial variable; others by
    tensor quadrature (``n = 2``) or Monte Carlo.
    """
    if kind not in ("LS", "LH"):
        raise ValueError("kind must be 'LS' or 'LH'")
    if u.dim != n + 1:
        raise ValueError("field dimension must be n + 1")
    spec = spec or QuadratureSpec()
    params = InequalityParams(n, s, 2.0)
    if "radial" in u.meta:
        (E, eE), (mass, em), (S, es) = _trace_log_terms_radial(
            u.meta["radial"], n, s, kind)
        method = "radial"
    else:
        cone = ConeDomain.halfspace(n + 1)
        F = cone_functionals(u, cone, params, spec, mode="direct")
        E, eE, method = F.energy, F.errors["energy"], F.method
        r_of = lambda x: np.linalg.norm(x, axis=-1)
        if kind == "LS":
            mass, em = facet_integral(u, cone, lambda x, v: v * v, spec, n - 1)
            S, es = facet_integral(u, cone, lambda x, v: _xlogx(v * v), spec, n - 1)
        else:
            w = lambda x: r_of(x) ** (s - 1)
            mass, em = facet_integral(u, cone, lambda x, v: v * v * w(x), spec,
                                      n - 2 + s)

            def ent(x, v):
                r = r_of(x)
                v2 = v * v
                with np.errstate(divide="ignore", invalid="ignore"):
                    lg = np.where(v2 > 0, np.log(np.where(v2 > 0, v2, 1.0)), 0.0)
                    lr = np.log(np.where(r > 0, r, 1.0))
                return np.where(v2 > 0, v2 * w(x) * (lg - (1 - s - n) * lr), 0.0)
            S, es = facet_integral(u, cone, ent, spec, n - 2 + s)
    if not mass > 0:
        raise NormalizationError("trace mass is zero")
    if not E > 0:
        raise NormalizationError("energy is zero")
    # rescale u -> u/sqrt(mass): entropy and energy transform explicitly
    entropy = S / mass - math.log(mass)
    energy = E / mass
    C = sharp_constant("trace_sobolev", params)
    lhs = n / (1 - s) * math.log(C * energy)
    err = (n / (1 - s) * (eE / E + em / mass)
           + (es + abs(S) * em / mass) / mass + em / mass)
    return Certificate(lhs, {"entropy": entropy}, err, params,
                       f"log_{kind}_trace",
                       {"energy": energy, "mass": mass, "C": C,
                        "method": method})
