"""Weighted energies, Hardy terms and boundary traces.

Cone integrals are split over the facet regions ``R_i = {d(x) = <x, u_i>}``
and written in facet polar coordinates

    x = r (cos(a) w + sin(a) u_i),   w in S^(N-2) orthogonal to u_i,

so that ``d(x) = r sin(a)`` exactly and ``dx = r^(N-1) cos(a)^(N-2) dr da
dw``. The region is ``0 <= a <= a_max(w)`` with ``w`` in the facet face
``W_i = {<w, u_j> >= 0}``, and the facet itself is ``{r w : w in W_i}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ..constants import InequalityParams, sharp_constant
from ..specfun import bessel_k_profile, extension_profile_deriv
from .geometry import (Certificate, ConeDomain, QuadratureSpec, SupportError,
                       TestField, sphere_measure)
from .quadrature import gauss_legendre, panel_rule, power_graded_rule, quad1d_singular

__all__ = [
    "Functionals", "cone_functionals", "halfspace_functionals",
    "whole_line_functionals", "rayleigh_quotient", "sphere_weight",
    "spectral_energy_identity", "cone_certificate", "halfspace_certificate",
    "whole_line_certificate", "ZeroTraceError", "RadialWeight",
    "facet_integral",
]


class ZeroTraceError(ZeroDivisionError):
    """The boundary term vanishes, so the quotient is undefined."""


@dataclass
class Functionals:
    """Energy, Hardy and trace integrals with error estimates.

    Unpacks as ``energy, hardy, trace``. ``extras`` holds additional
    Hardy-type integrals with radial weights (see :class:`RadialWeight`).
    """

    energy: float
    hardy: float
    trace: float
    errors: dict
    method: str
    extras: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.energy, self.hardy, self.trace))


@dataclass(frozen=True)
class RadialWeight:
    """Extra integrand ``weight(|x|) u^2/|x|^2 d^s`` evaluated alongside."""

    name: str
    weight: Callable


# ------------------------------------------------------- facet geometry


@dataclass
class _Facet:
    index: int
    u: np.ndarray
    basis: np.ndarray          # (N-1, N) orthonormal basis of u^perp
    others: np.ndarray         # (k, N) normals of the other facets
    gap: np.ndarray            # 1 - <u_i, u_j> for those facets
    arc: tuple | None = None   # N = 3: admissible theta interval
    kinks: tuple = ()


def _perp_basis(u):
    n = u.size
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    return q[:, 1:n].T


def _facets(cone: ConeDomain):
    U = cone.normals
    out = []
    for i in range(cone.m):
        g = U @ U[i]
        keep = np.array([j != i and g[j] < 1 - 1e-14 for j in range(cone.m)],
                        dtype=bool)
        f = _Facet(i, U[i], _perp_basis(U[i]), U[keep], 1 - g[keep])
        if cone.dim == 3:
            f.arc = _facet_arc(f)
            if f.arc is not None:
                f.kinks = _arc_kinks(f)
        out.append(f)
    return out


def _w_of_theta(f, theta):
    theta = np.asarray(theta, dtype=float)
    return (np.cos(theta)[..., None] * f.basis[0]
            + np.sin(theta)[..., None] * f.basis[1])


def _facet_arc(f):
    """Interval of theta with <w(theta), u_j> >= 0 for every other facet."""
    lo, hi = 0.0, 2 * math.pi
    full = True
    for v in f.others:
        A, B = v @ f.basis[0], v @ f.basis[1]
        R = math.hypot(A, B)
        if R < 1e-14:
            continue
        c = math.atan2(B, A)
        if full:
            lo, hi, full = c - math.pi / 2, c + math.pi / 2, False
            continue
        mid = 0.5 * (lo + hi)
        c += 2 * math.pi * round((mid - c) / (2 * math.pi))
        lo, hi = max(lo, c - math.pi / 2), min(hi, c + math.pi / 2)
        if hi <= lo:
            return None
    return (lo, hi)


def _alpha_parts(f, w):
    """Per-constraint angle limits ``atan(<w,u_j>/(1-g_ij))``, shape (..., k)."""
    if f.others.shape[0] == 0:
        return np.full(w.shape[:-1] + (1,), math.pi / 2)
    return np.arctan2(w @ f.others.T, f.gap)


def _alpha_max(f, w):
    return np.minimum(_alpha_parts(f, w).min(axis=-1), math.pi / 2)


def _arc_kinks(f, samples=2048):
    lo, hi = f.arc
    if f.others.shape[0] < 2:
        return ()
    th = np.linspace(lo, hi, samples)
    parts = _alpha_parts(f, _w_of_theta(f, th))
    act = parts.argmin(axis=-1)
    kinks = []
    for k in np.flatnonzero(act[1:] != act[:-1]):
        j1, j2 = act[k], act[k + 1]

        def diff(t):
            p = _alpha_parts(f, _w_of_theta(f, np.array([t])))[0]
            return p[j1] - p[j2]
        try:
            kinks.append(brentq(diff, th[k], th[k + 1], xtol=1e-14))
        except ValueError:
            kinks.append(0.5 * (th[k] + th[k + 1]))
    return tuple(kinks)


def _alpha_fraction_rule(order, exp, levels, panels=3):
    """Rule in ``tau = a / a_max`` on [0, 1] for ``tau^exp * smooth``.

    ``levels > 0`` adds geometric panels ``2^-levels, ..., 1/2`` so that
    mixtures of several powers of ``tau`` still converge quickly.
    """
    if levels <= 0:
        return power_graded_rule(1.0, exp, order, panels=panels)
    lo = 2.0 ** -levels
    x0, w0 = power_graded_rule(lo, exp, order)
    edges = np.concatenate([np.geomspace(lo, 0.5, levels),
                            np.linspace(0.5, 1.0, panels + 1)[1:]])
    x1, w1 = panel_rule(edges, order)
    return np.concatenate([x0, x1]), np.concatenate([w0, w1])


def _angular_rule(f, dim, s, order, a_panels=3, t_panels=4, a_exp=None,
                  a_levels=0):
    """Directions ``v``, ``sin(a)`` and weights for the facet region.

    Also returns the facet-face directions and weights for the trace.
    ``a_exp`` is the power of ``a`` the integrand carries at the facet
    (default ``s``, the weight itself).
    """
    # fraction of a_max; the first panel carries the facet power
    tau, wt = _alpha_fraction_rule(order, s if a_exp is None else a_exp,
                                   a_levels, a_panels)
    if dim == 2:
        cands = np.array([f.basis[0], -f.basis[0]])
        ok = [np.all(c @ f.others.T >= -1e-14) for c in cands]
        W = cands[np.array(ok, dtype=bool)]
        wW = np.ones(W.shape[0])
    else:
        if f.arc is None:
            W = np.zeros((0, 3))
            wW = np.zeros(0)
        else:
            lo, hi = f.arc
            edges = [lo, *sorted(k for k in f.kinks if lo < k < hi), hi]
            fine = []
            for a, b in zip(edges[:-1], edges[1:]):
                k = max(1, int(math.ceil(t_panels * (b - a) / (hi - lo))))
                fine.extend(np.linspace(a, b, k + 1)[:-1])
            fine.append(hi)
            th, wW = panel_rule(np.array(fine), order)
            W = _w_of_theta(f, th)
    if W.shape[0] == 0:
        empty = np.zeros((0, dim))
        return empty, np.zeros(0), np.zeros(0), empty, np.zeros(0)
    amax = _alpha_max(f, W)                             # (nw,)
    alpha = amax[:, None] * tau[None, :]                # (nw, na)
    # sin(a)^s = tau^s * smooth, matched by the graded weights
    wa = wt[None, :] * amax[:, None] * np.cos(alpha) ** (dim - 2)
    ca, sa = np.cos(alpha), np.sin(alpha)
    V = ca[..., None] * W[:, None, :] + sa[..., None] * f.u
    weights = wW[:, None] * wa
    return (V.reshape(-1, dim), sa.ravel(), weights.ravel(), W, wW)


def _radial_rule(u: TestField, order, exp, extra_breaks=()):
    lo, hi = float(u.inner_radius), float(u.support_radius)
    if not hi > lo:
        raise SupportError("support_radius must exceed inner_radius")
    breaks = sorted(b for b in (*u.radial_breaks, *extra_breaks) if lo < b < hi)
    start = lo if lo > 0 else hi * 2.0 ** -10
    start = min(start, breaks[0]) if breaks and lo == 0 else start
    # geometric toward the origin, uniform over the outer three quarters
    mid = max(start, lo + 0.25 * (hi - lo))
    k = max(1, int(math.ceil(math.log2(mid / start))))
    edges = np.unique(np.concatenate([np.geomspace(start, mid, k + 1),
                                      np.linspace(mid, hi, 7), breaks]))
    if lo > 0 and hi / lo < 4:
        edges = np.unique(np.concatenate([np.linspace(lo, hi, 4), breaks]))
    r, w = panel_rule(edges, order)
    if lo == 0:
        r0, w0 = power_graded_rule(edges[0], exp, order, panels=2)
        r, w = np.concatenate([r0, r]), np.concatenate([w0, w])
    return r, w


def _grad_sq(u, x):
    g = u.grad(x)
    return np.einsum("...i,...i->...", g, g)


def _cone_tensor_level(u, cone, facets, s, n, order, extras, chunk=200_000):
    N = cone.dim
    r, wr = _radial_rule(u, order, n - 2 + s)
    E = Hd = Tr = 0.0
    X = {e.name: 0.0 for e in extras}
    # fields singular at the facets may declare their leading power
    a_exp = u.meta.get("angular_exponent", s)
    a_levels = u.meta.get("angular_levels", 0)
    for f in facets:
        V, sa, wang, W, wW = _angular_rule(f, N, s, order, a_exp=a_exp,
                                           a_levels=a_levels)
        if V.shape[0] == 0:
            continue
        step = max(1, chunk // V.shape[0])
        for k in range(0, r.size, step):
            rr = r[k:k + step, None]
            ww = wr[k:k + step, None]
            x = rr[..., None] * V[None, :, :]
            vals = u.value(x)
            g2 = _grad_sq(u, x)
            ds = (rr * sa[None, :]) ** s
            base = ww * wang[None, :] * rr ** (N - 1) * ds
            E += float(np.sum(base * g2))
            h = base * vals * vals / (rr * rr)
            Hd += float(np.sum(h))
            for e in extras:
                X[e.name] += float(np.sum(h * e.weight(rr)))
        if W.shape[0]:
            xt = r[:, None, None] * W[None, :, :]
            vt = u.value(xt)
            Tr += float(np.sum(wr[:, None] * wW[None, :] * r[:, None] ** (N - 2)
                               * vt * vt * r[:, None] ** (s - 1)))
    return E, Hd, Tr, X


def _cone_mc(u, cone, facets, s, n, spec, extras):
    N = cone.dim
    rng = spec.rng(f"cone-mc-{u.name}-{N}-{cone.m}")
    lo, hi = float(u.inner_radius), float(u.support_radius)
    nst = spec.mc_strata
    edges = np.linspace(lo, hi, nst + 1)
    per = max(16, spec.mc_samples // (nst * max(1, len(facets))))
    area = sphere_measure(N - 2)
    e_r = n - 2 + s
    acc = {k: [0.0, 0.0] for k in ("E", "Hd", "Tr", *[e.name for e in extras])}

    def add(key, samples, scale):
        m = samples.mean() * scale
        v = samples.var(ddof=1) * scale * scale / samples.size
        acc[key][0] += m
        acc[key][1] += v

    for f in facets:
        for a, b in zip(edges[:-1], edges[1:]):
            tau = rng.random(per)
            if a == 0 and e_r < 0:
                rr = b * tau ** (1 / (1 + e_r))
                dens = (1 + e_r) * rr ** e_r / b ** (1 + e_r)
            else:
                rr = a + (b - a) * tau
                dens = np.full(per, 1 / (b - a))
            g = rng.standard_normal((per, N - 1))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            W = g @ f.basis
            ok = np.all(W @ f.others.T >= 0, axis=1) if f.others.size else np.ones(per, bool)
            amax = np.where(ok, np.maximum(_alpha_max(f, W), 1e-300), 1.0)
            ta = rng.random(per)
            alpha = amax * ta ** (1 / (1 + s))
            dens_a = (1 + s) * alpha ** s / amax ** (1 + s)
            V = np.cos(alpha)[:, None] * W + np.sin(alpha)[:, None] * f.u
            x = rr[:, None] * V
            vals = u.value(x)
            g2 = _grad_sq(u, x)
            base = (ok * area * rr ** (N - 1) * np.cos(alpha) ** (N - 2)
                    * (rr * np.sin(alpha)) ** s / (dens * dens_a))
            add("E", base * g2, 1.0)
            h = base * vals * vals / (rr * rr)
            add("Hd", h, 1.0)
            for e in extras:
                add(e.name, h * e.weight(rr), 1.0)
            vt = u.value(rr[:, None] * W)
            add("Tr", ok * area * rr ** (N - 2) * vt * vt * rr ** (s - 1) / dens, 1.0)
    se = {k: 3 * math.sqrt(v[1]) for k, v in acc.items()}
    return ({k: v[0] for k, v in acc.items()}, se)


def cone_functionals(u: TestField, cone: ConeDomain, params: InequalityParams,
                     spec: QuadratureSpec | None = None, mode="auto",
                     extras: Sequence[RadialWeight] = ()) -> Functionals:
    """Weighted energy, Hardy term and facet trace of ``u`` on ``cone``.

    Parameters
    ----------
    mode : {"auto", "tensor", "mc", "direct"}
        ``auto`` uses the field's reduced form when it has one, tensor
        quadrature for ``N <= 3`` and Monte Carlo otherwise; ``direct`` is
        ``auto`` without the reduced form.

    Notes
    -----
    Tensor errors are the change between the last two Gauss orders in
    ``spec.orders``; Monte Carlo errors are three standard errors.
    """
    spec = spec or QuadratureSpec()
    if u.dim != cone.dim:
        raise ValueError(f"field dimension {u.dim} != cone dimension {cone.dim}")
    if params.n + 1 != cone.dim:
        raise ValueError("params.n + 1 must equal the cone dimension")
    s, n = params.s, params.n
    if mode == "auto" and u.reduced is not None and not extras:
        red = u.reduced(cone, params, spec)
        if red is not NotImplemented:
            E, Hd, Tr, err = red
            return Functionals(E, Hd, Tr, err, "reduced")
    if mode in ("auto", "direct"):
        mode = "tensor" if cone.dim <= 3 else "mc"
    facets = _facets(cone)
    if mode == "tensor":
        if cone.dim > 3:
            raise ValueError("tensor quadrature supports N <= 3 only; use mode='mc'")
        orders = spec.orders[-2:] if len(spec.orders) > 1 else spec.orders * 2
        lv = [_cone_tensor_level(u, cone, facets, s, n, p, extras) for p in orders]
        (E0, H0, T0, X0), (E1, H1, T1, X1) = lv
        err = {"energy": abs(E1 - E0), "hardy": abs(H1 - H0),
               "trace": abs(T1 - T0)}
        err.update({k: abs(X1[k] - X0[k]) for k in X1})
        return Functionals(E1, H1, T1, err, "tensor", X1)
    if mode == "mc":
        vals, se = _cone_mc(u, cone, facets, s, n, spec, extras)
        err = {"energy": se["E"], "hardy": se["Hd"], "trace": se["Tr"]}
        err.update({e.name: se[e.name] for e in extras})
        return Functionals(vals["E"], vals["Hd"], vals["Tr"], err, "mc",
                           {e.name: vals[e.name] for e in extras})
    raise ValueError(f"unknown mode {mode!r}")


def facet_integral(u: TestField, cone: ConeDomain, integrand,
                   spec: QuadratureSpec | None = None, radial_exp=None):
    """``sum_i int_{facet i} integrand(x, u(x)) dH`` with an error estimate.

    ``integrand(x, values)`` is vectorized; ``radial_exp`` is its leading
    power of ``|x|`` at the origin including the ``|x|^(N-2)`` Jacobian
    (default ``N - 2``).
    """
    spec = spec or QuadratureSpec()
    N = cone.dim
    exp = N - 2 if radial_exp is None else radial_exp
    facets = _facets(cone)
    orders = spec.orders[-2:] if len(spec.orders) > 1 else spec.orders * 2
    vals = []
    for order in orders:
        r, wr = _radial_rule(u, order, exp)
        total = 0.0
        for f in facets:
            _, _, _, W, wW = _angular_rule(f, N, 0.0, order)
            if W.shape[0] == 0:
                continue
            x = r[:, None, None] * W[None, :, :]
            g = integrand(x, u.value(x))
            total += float(np.sum(wr[:, None] * wW[None, :]
                                  * r[:, None] ** (N - 2) * g))
        vals.append(total)
    return vals[-1], abs(vals[-1] - vals[0])


# ---------------------------------------------------------- half-space


def _box_bounds(u: TestField):
    N = u.dim
    if u.bounds is not None:
        b = [tuple(map(float, x)) for x in u.bounds]
        if len(b) != N:
            raise ValueError("bounds must give one interval per coordinate")
        return b
    R = u.support_radius
    return [(-R, R)] * (N - 2) + [(0.0, R), (-R, R)]


def _check_xn_support(u, bounds, rng):
    lo = bounds[-2][0]
    depth = lo if lo > 0 else u.support_radius * 1e-6
    N = u.dim
    pts = np.empty((4096, N))
    for k, (a, b) in enumerate(bounds):
        pts[:, k] = rng.uniform(a, b, 4096)
    pts[:, -2] = rng.uniform(0.0, depth, 4096)
    if np.any(u.value(pts) != 0):
        raise SupportError("field does not vanish near x_n = 0")


def _line_rule(a, b, order, panels, exp=None):
    """Gauss rule on [a, b]; ``exp`` grades the first panel at ``a``."""
    if exp is None or exp == 0:
        return panel_rule(np.linspace(a, b, panels + 1), order)
    first = (b - a) / panels
    x0, w0 = power_graded_rule(first, exp, order)
    x1, w1 = panel_rule(np.linspace(a + first, b, panels), order)
    return np.concatenate([a + x0, x1]), np.concatenate([w0, w1])


def _half_box_level(u, s, order, bounds, t_range, panels=12):
    N = u.dim
    rules = [_line_rule(a, b, order, panels) for a, b in bounds[:-1]]
    ta, tb = t_range
    t, wt = _line_rule(ta, tb, order, panels, exp=s if ta == 0 else None)
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, (_, w) in enumerate(rules):
        shape = [1] * len(rules)
        shape[k] = -1
        wgrid = wgrid * w.reshape(shape)
    base = np.stack([g.ravel() for g in grids], axis=-1)   # (P, N-1)
    wb = wgrid.ravel()
    xn = base[:, -1]
    E = Hd = 0.0
    for tk, wk in zip(t, wt):
        x = np.concatenate([base, np.full((base.shape[0], 1), tk)], axis=1)
        v = u.value(x)
        g2 = _grad_sq(u, x)
        ww = wb * wk * abs(tk) ** s
        E += float(np.sum(ww * g2))
        Hd += float(np.sum(ww * v * v / (xn * xn)))
    x0 = np.concatenate([base, np.zeros((base.shape[0], 1))], axis=1)
    v0 = u.value(x0)
    Tr = float(np.sum(wb * v0 * v0 / xn ** (1 - s)))
    return E, Hd, Tr


def _half_box_mc(u, s, spec, bounds, t_range, tag):
    N = u.dim
    rng = spec.rng(f"half-mc-{tag}-{u.name}")
    M = spec.mc_samples
    vol = np.prod([b - a for a, b in bounds[:-1]])
    pts = np.empty((M, N))
    for k, (a, b) in enumerate(bounds[:-1]):
        pts[:, k] = rng.uniform(a, b, M)
    ta, tb = t_range
    tau = rng.random(M)
    if ta == 0:
        pts[:, -1] = tb * tau ** (1 / (1 + s))
        dens_t = (1 + s) * pts[:, -1] ** s / tb ** (1 + s)
    else:
        pts[:, -1] = ta + (tb - ta) * tau
        dens_t = np.full(M, 1 / (tb - ta))
    v = u.value(pts)
    g2 = _grad_sq(u, pts)
    base = vol * np.abs(pts[:, -1]) ** s / dens_t
    xn = pts[:, -2]
    fe, fh = base * g2, base * v * v / (xn * xn)
    p0 = pts.copy()
    p0[:, -1] = 0.0
    v0 = u.value(p0)
    ft = vol * v0 * v0 / xn ** (1 - s)
    out = [float(a.mean()) for a in (fe, fh, ft)]
    se = [3 * float(a.std(ddof=1)) / math.sqrt(M) for a in (fe, fh, ft)]
    return out, se


def halfspace_functionals(u: TestField, s: float, mode="xn_weight",
                          spec: QuadratureSpec | None = None,
                          method="auto", t_sign=1.0) -> Functionals:
    """Functionals of ``u`` on the half-space model.

    ``mode="xn_weight"``: coordinates ``(x', x_n, t)`` with ``x_n > 0``,
    ``t > 0``; energy ``int |grad u|^2 t^s``, Hardy term
    ``int u^2/x_n^2 t^s`` and trace ``int u(x,0)^2 / x_n^(1-s) dx``. The
    field must vanish near ``x_n = 0``.

    ``mode="t_weight"``: the cone functionals of ``{t > 0}`` (``d = t``).

    ``t_sign=-1`` integrates over ``t < 0`` instead (with ``|t|^s``).
    """
    spec = spec or QuadratureSpec()
    if mode == "t_weight":
        cone = ConeDomain.halfspace(u.dim)
        return cone_functionals(u, cone, InequalityParams(u.dim - 1, s, 2.0),
                                spec, mode="auto" if method == "auto" else method)
    if mode != "xn_weight":
        raise ValueError(f"unknown mode {mode!r}")
    if method == "auto" and u.reduced is not None and t_sign > 0:
        red = u.reduced("halfspace", s, spec)
        if red is not NotImplemented:
            E, Hd, Tr, err = red
            return Functionals(E, Hd, Tr, err, "reduced")
    bounds = _box_bounds(u)
    _check_xn_support(u, bounds, spec.rng(f"support-{u.name}"))
    ta, tb = bounds[-1]
    if t_sign > 0:
        t_range = (max(ta, 0.0), max(tb, 0.0))
    else:
        t_range = (min(ta, 0.0), min(tb, 0.0))
    if method == "auto":
        method = "tensor" if u.dim <= 3 else "mc"
    if method == "tensor":
        if t_sign < 0:
            # mirror so the t^s grading sits at the t = 0 end
            refl = _reflect_t(u)
            return halfspace_functionals(refl, s, mode, spec, "tensor", 1.0)
        if t_range[1] <= t_range[0]:
            t_range = (0.0, 0.0)
        orders = spec.orders[-2:] if len(spec.orders) > 1 else spec.orders * 2
        if t_range[1] == 0.0:
            lv = [(0.0, 0.0, _half_box_level(u, s, p, bounds, (0.0, 1.0))[2])
                  for p in orders]
        else:
            lv = [_half_box_level(u, s, p, bounds, t_range) for p in orders]
        (E0, H0, T0), (E1, H1, T1) = lv
        err = {"energy": abs(E1 - E0), "hardy": abs(H1 - H0),
               "trace": abs(T1 - T0)}
        return Functionals(E1, H1, T1, err, "tensor")
    if method == "mc":
        if t_sign < 0:
            return halfspace_functionals(_reflect_t(u), s, mode, spec, "mc", 1.0)
        if t_range[1] <= 0:
            t_range = (0.0, 1e-300)
        (E, Hd, Tr), se = _half_box_mc(u, s, spec, bounds, t_range, "xn")
        return Functionals(E, Hd, Tr, dict(zip(("energy", "hardy", "trace"), se)), "mc")
    raise ValueError(f"unknown method {method!r}")


def _reflect_t(u: TestField) -> TestField:
    if "reflect" in u.meta:
        return u.meta["reflect"]()
    def flip(x):
        x = np.array(x, dtype=float, copy=True)
        x[..., -1] *= -1
        return x

    def grad(x):
        g = u.grad(flip(x))
        g[..., -1] *= -1
        return g

    bounds = None
    if u.bounds is not None:
        bounds = list(u.bounds[:-1]) + [(-u.bounds[-1][1], -u.bounds[-1][0])]
    return TestField(value=lambda x: u.value(flip(x)), gradient=grad,
                     dim=u.dim, support_radius=u.support_radius,
                     inner_radius=u.inner_radius, bounds=bounds,
                     name=f"{u.name}~")


def whole_line_functionals(u: TestField, spec: QuadratureSpec | None = None):
    """Unweighted functionals over ``R^n_+ x R`` by reflection doubling.

    Returns ``Functionals`` whose energy and Hardy term sum the ``t > 0``
    and ``t < 0`` halves (``s = 0``); the trace is counted once.
    """
    spec = spec or QuadratureSpec()
    up = halfspace_functionals(u, 0.0, "xn_weight", spec, method="auto")
    down = halfspace_functionals(_reflect_t(u), 0.0, "xn_weight", spec,
                                 method="auto")
    err = {k: up.errors[k] + down.errors[k] for k in ("energy", "hardy")}
    err["trace"] = up.errors["trace"]
    return Functionals(up.energy + down.energy, up.hardy + down.hardy,
                       up.trace, err, f"doubled-{up.method}")


# ----------------------------------------------------------- quotients


def _is_halfspace(geometry):
    return isinstance(geometry, str) and geometry == "halfspace"


def rayleigh_quotient(u: TestField, geometry, params: InequalityParams,
                      spec: QuadratureSpec | None = None,
                      return_error=False):
    """``(energy - c * hardy) / trace`` for a cone or the half-space.

    ``c = (beta-2)^2/4`` on a :class:`ConeDomain`; ``c = beta^2/4`` for
    ``geometry="halfspace"`` (the ``x_n`` weighted model).
    """
    if _is_halfspace(geometry):
        F = halfspace_functionals(u, params.s, "xn_weight", spec)
        c = params.beta ** 2 / 4
    else:
        F = cone_functionals(u, geometry, params, spec)
        c = (params.beta - 2) ** 2 / 4
    if F.trace <= 0:
        raise ZeroTraceError("trace term is zero")
    q = (F.energy - c * F.hardy) / F.trace
    if not return_error:
        return q
    e = F.errors
    err = (e["energy"] + c * e["hardy"]) / F.trace + abs(q) * e["trace"] / F.trace
    return q, err


def _certificate(F, lhs_err_terms, params, tag, rhs):
    err = sum(lhs_err_terms)
    extras = {"method": F.method, "errors": dict(F.errors)}
    return Certificate(F.energy, rhs, err, params, tag, extras)


def cone_certificate(u: TestField, cone: ConeDomain, params: InequalityParams,
                     spec: QuadratureSpec | None = None) -> Certificate:
    """Certificate for the cone trace Hardy inequality."""
    F = cone_functionals(u, cone, params, spec)
    c = (params.beta - 2) ** 2 / 4
    H = sharp_constant("H_cone", params)
    e = F.errors
    return _certificate(F, (e["energy"], c * e["hardy"], H * e["trace"]), params,
                        "cone_trace_hardy",
                        {"hardy": c * F.hardy, "trace": H * F.trace})


def halfspace_certificate(u: TestField, params: InequalityParams,
                          spec: QuadratureSpec | None = None) -> Certificate:
    """Certificate for the half-space inequality with ``x_n`` weights."""
    F = halfspace_functionals(u, params.s, "xn_weight", spec)
    c = params.beta ** 2 / 4
    k = sharp_constant("k_half", params)
    e = F.errors
    return _certificate(F, (e["energy"], c * e["hardy"], k * e["trace"]), params,
                        "halfspace_trace_hardy",
                        {"hardy": c * F.hardy, "trace": k * F.trace})


def whole_line_certificate(u: TestField, n: int,
                           spec: QuadratureSpec | None = None) -> Certificate:
    """Improved Hardy inequality on ``R^n_+ x R`` (beta = 1, s = 0)."""
    F = whole_line_functionals(u, spec)
    params = InequalityParams(n, 0.0, 1.0)
    k2 = 4 * (math.gamma(0.75) / math.gamma(0.25)) ** 2
    e = F.errors
    return _certificate(F, (e["energy"], 0.25 * e["hardy"], k2 * e["trace"]),
                        params, "whole_line_hardy",
                        {"hardy": 0.25 * F.hardy, "trace": k2 * F.trace})


# ------------------------------------------------------------ misc


def sphere_weight(n: int, s: float, boundary=False) -> float:
    """Weighted hemisphere measure ``int_{S^n_+} t^s``.

    With ``boundary=True`` returns ``|S^(n-1)| = 2 pi^(n/2)/Gamma(n/2)``.
    """
    if boundary:
        return 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    return math.exp((n / 2) * math.log(math.pi) + math.lgamma((1 + s) / 2)
                    - math.lgamma((n + 1 + s) / 2))


def spectral_energy_identity(alpha: float, mode_k: int = 1,
                             spec: QuadratureSpec | None = None):
    """Per-mode extension energy on ``(0, pi)`` against its closed form.

    For the eigenpair ``lambda = k^2``, ``sin(kx)`` the extension
    ``sin(kx) T(k t)`` has energy ``lambda^alpha * I`` with
    ``I = int_0^inf (T'^2 + T^2) tau^(1-2alpha) dtau``. Returns
    ``(lhs, rhs, deviation)`` with ``lhs = I`` computed in the unscaled
    variable ``t`` for the given mode and divided by ``lambda^alpha``,
    and ``rhs = 2^(1-2alpha) Gamma(1-alpha)/Gamma(alpha)``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if int(mode_k) != mode_k or mode_k < 1:
        raise ValueError("mode_k must be a positive integer")
    spec = spec or QuadratureSpec()
    lam = float(mode_k) ** 2
    sq = math.sqrt(lam)

    def parts(t):
        out = np.zeros((2, t.size))
        for i, ti in enumerate(t):
            tau = sq * ti
            if tau > 700:
                continue
            w = lam * ti ** (1 - 2 * alpha)
            out[0, i] = w * bessel_k_profile(alpha, tau)[1] ** 2
            out[1, i] = w * extension_profile_deriv(alpha, tau) ** 2
        return out

    # T^2 t^(1-2alpha) and T'^2 t^(1-2alpha) start like t^(1-2alpha) and
    # t^(2alpha-1): Gauss-Jacobi on a tiny first panel, geometric panels
    # through the mixed powers, then panels over the exponential tail
    cut, upper, tiny = 1.0 / sq, 60.0 / sq, 2.0 ** -40 / sq
    levels = []
    for order in spec.orders[-2:]:
        x1, w1 = panel_rule(np.concatenate([np.geomspace(tiny, cut, 41),
                                            np.geomspace(cut, upper, 9)[1:]]),
                            order)
        total = float(np.sum(parts(x1) @ w1))
        for k, e in enumerate((1 - 2 * alpha, 2 * alpha - 1)):
            x0, w0 = power_graded_rule(tiny, e, order)
            total += float(parts(x0)[k] @ w0)
        levels.append(total)
    lhs = levels[-1] / lam ** alpha
    rhs = sharp_constant("spectral_energy_factor", None, alpha)
    return lhs, rhs, abs(lhs - rhs) / rhs
