"""Explicit boundary profiles for the cone and half-space problems.

Cone: ``phi(x) = |x|^-g omega(d(x)^2/|x|^2)`` with ``g = (n_s - 2)/2`` and
``omega`` a two-term hypergeometric combination solving

    z(z-1) w'' + ((n_s/2) z - (1+s)/2) w' + ((n_s-2)^2 - (beta-2)^2)/16 w = 0,
    w(0) = 1,  w finite at z = 1.

Half-space: ``phi(x, t) = x_n^(-s/2) omega(t/x_n)`` with ``omega`` solving

    (y^2+1) w'' + ((s+2) y + s/y) w' + mu w = 0,   mu = (s(s+2)+beta^2)/4,
    w(0) = 1,  w(inf) = 0.

Both are evaluated in closed form (Gauss functions) with analytic first
and second derivatives; a shooting solver gives an independent check of
the half-space profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import kernels
from ._quadrature import extrapolate_limit
from .constants import InequalityParams, ParameterRangeError, sharp_constant
from .specfun import gamma_fn, hyp2f1, rgamma

__all__ = [
    "ConeProfile", "HalfProfile", "ProfileError", "PropertyViolation",
    "PropertyReport", "ShootingResult", "build_cone_profile",
    "cone_profile_eval", "cone_ode_residual", "cone_continuation_mismatch",
    "cone_boundary_flux_limit", "cone_endpoint_identity", "cone_scan",
    "build_half_profile", "half_profile_eval", "half_ode_residual",
    "shoot_half_ode", "half_property_suite",
]

# |y| above which the half-space profile uses its expansion in -1/y^2
_Y_SWITCH = 1.25
_DEGENERATE_TOL = 1e-12


class ProfileError(ValueError):
    """Invalid evaluation point (origin, exterior, facet tie, y < 0)."""


class PropertyViolation(ArithmeticError):
    """A profile property check failed; ``clause`` names it."""

    def __init__(self, clause, detail):
        super().__init__(f"property {clause} violated: {detail}")
        self.clause = clause


def _f_derivs(a, b, c, u):
    """F, F', F'' of the Gauss function at the points ``u``."""
    f0 = hyp2f1(a, b, c, u)
    if a == 0.0 or b == 0.0:
        z = np.zeros_like(f0)
        return f0, z, z
    f1 = a * b / c * hyp2f1(a + 1, b + 1, c + 1, u)
    if a == -1.0 or b == -1.0:
        return f0, f1, np.zeros_like(f0)
    f2 = (a * b * (a + 1) * (b + 1) / (c * (c + 1))
          * hyp2f1(a + 2, b + 2, c + 2, u))
    return f0, f1, f2


def _power_hyp(y, p, a, b, c, sigma, q):
    """``f = y^p F(a,b,c, sigma y^q)`` and its first two y-derivatives."""
    u = sigma * y ** q
    F0, F1, F2 = _f_derivs(a, b, c, u)
    du = sigma * q * y ** (q - 1)
    d2u = sigma * q * (q - 1) * y ** (q - 2)
    yp = y ** p
    f = yp * F0
    g = F1 * du
    df = p * y ** (p - 1) * F0 + yp * g
    d2f = (p * (p - 1) * y ** (p - 2) * F0 + 2 * p * y ** (p - 1) * g
           + yp * (F2 * du * du + F1 * d2u))
    return f, df, d2f


# ---------------------------------------------------------------- cone


@dataclass(frozen=True)
class ConeProfile:
    """Cone profile ``omega(z) = F(a,b,c,z) + coef z^(1-c) F(a2,b2,c2,z)``.

    ``omega1`` is the finite value at ``z = 1``; past ``z = 1/2`` the
    profile is evaluated as ``omega1 F(a, b, n/2, 1-z)``, the solution
    regular at ``z = 1``.
    """

    params: InequalityParams
    H: float
    a: float
    b: float
    c: float
    a2: float
    b2: float
    c2: float
    coef: float
    omega1: float

    @property
    def gamma(self) -> float:
        return (self.params.n_s - 2) / 2

    @property
    def lam(self) -> float:
        """Zeroth-order coefficient of the profile equation (equals ab)."""
        return self.a * self.b

    def omega(self, z, deriv=2):
        """``(omega, omega', omega'')`` at ``z`` in ``(0, 1]``.

        ``z = 0`` is allowed for the value only; the derivative is
        singular there unless ``s = -1``.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any((z < 0) | (z > 1)):
            raise ProfileError("cone profile argument must lie in [0, 1]")
        w = np.empty_like(z)
        dw = np.full_like(z, np.nan)
        d2w = np.full_like(z, np.nan)
        zero = z == 0
        low = (z > 0) & (z <= 0.5)
        high = z > 0.5
        w[zero] = 1.0
        if low.any():
            zl = z[low]
            f, df, d2f = _power_hyp(zl, 0.0, self.a, self.b, self.c, 1.0, 1.0)
            g, dg, d2g = _power_hyp(zl, 1 - self.c, self.a2, self.b2,
                                    self.c2, 1.0, 1.0)
            w[low] = f + self.coef * g
            dw[low] = df + self.coef * dg
            d2w[low] = d2f + self.coef * d2g
        if high.any():
            F0, F1, F2 = _f_derivs(self.a, self.b, self.params.n / 2,
                                   1.0 - z[high])
            w[high] = self.omega1 * F0
            dw[high] = -self.omega1 * F1
            d2w[high] = self.omega1 * F2
        out = (w, dw, d2w)[: deriv + 1]
        return out if deriv else out[0]

    def residual(self, z):
        w, dw, d2w = self.omega(z)
        ns = self.params.n_s
        return (z * (z - 1) * d2w + (ns / 2 * z - self.c) * dw
                + self.lam * w)


def build_cone_profile(params: InequalityParams) -> ConeProfile:
    """Build the cone profile for ``2 <= beta < n_s``."""
    ns, s, beta = params.n_s, params.s, params.beta
    if not 2.0 <= beta < ns:
        raise ParameterRangeError(
            f"cone profile needs 2 <= beta < n_s={ns}, got {beta}")
    H = sharp_constant("H_cone", params)
    a = (ns + beta - 4) / 4
    b = (ns - beta) / 4
    c = (1 + s) / 2
    a2, b2, c2 = a + 1 - c, b + 1 - c, 2 - c
    coef = -H / (1 - s)
    half = (hyp2f1(a, b, c, 0.5)
            + coef * 0.5 ** (1 - c) * hyp2f1(a2, b2, c2, 0.5))
    omega1 = half / hyp2f1(a, b, params.n / 2, 0.5)
    return ConeProfile(params, H, a, b, c, a2, b2, c2, coef, float(omega1))


def _phi_and_grad(p: ConeProfile, cone, x, on_tie="raise"):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != cone.dim:
        raise ProfileError(f"points must have {cone.dim} coordinates")
    dist = cone.distance(x)
    d, facet, tie = dist.d, dist.facet, dist.tie
    r2 = np.einsum("...i,...i->...", x, x)
    if np.any(r2 == 0):
        raise ProfileError("the profile is singular at the origin")
    if np.any(d <= 0):
        raise ProfileError("point is not strictly inside the cone")
    if on_tie == "raise" and np.any(tie):
        raise ProfileError("two facets are equidistant; grad d is undefined")
    zeta = np.clip(d * d / r2, 0.0, 1.0)
    w, dw = p.omega(zeta.ravel(), deriv=1)
    w = w.reshape(zeta.shape)
    dw = dw.reshape(zeta.shape)
    g = p.gamma
    rg = r2 ** (-g / 2)
    phi = rg * w
    u = cone.normals[facet]
    dzeta = (2 * d / r2)[..., None] * u - (2 * d * d / r2 ** 2)[..., None] * x
    grad = ((-g * rg * w / r2)[..., None] * x
            + (rg * dw)[..., None] * dzeta)
    return phi, grad


def cone_profile_eval(p: ConeProfile, x, cone):
    """``phi(x)`` and its gradient at interior points of ``cone``.

    Raises :class:`ProfileError` at the origin, outside the cone and where
    two facets are equidistant within 1e-12.
    """
    phi, grad = _phi_and_grad(p, cone, x)
    if np.ndim(phi) == 0:
        return float(phi), grad
    return phi, grad


def cone_ode_residual(p: ConeProfile, z_grid) -> float:
    """Maximum absolute residual of the profile equation on ``z_grid``."""
    z = np.asarray(z_grid, dtype=float)
    if np.any((z <= 0) | (z >= 1)):
        raise ProfileError("residual grid must lie inside (0, 1)")
    return float(np.max(np.abs(p.residual(z))))


def cone_continuation_mismatch(p: ConeProfile, z_grid) -> float:
    """Largest gap between the closed form and an ODE march from 1/2.

    Only the points above 1/2 are compared; the march is the same Taylor
    continuation ``hyp2f1`` uses.
    """
    z = np.sort(np.asarray(z_grid, dtype=float))
    z = z[(z > 0.5) & (z < 1)]
    if z.size == 0:
        return 0.0
    w0, dw0, _ = p.omega(0.5)
    marched, _ = kernels.ode_march(p.a, p.b, p.c, 0.5, float(w0[0]),
                                   float(dw0[0]), z)
    return float(np.max(np.abs(marched - p.omega(z, deriv=0))))


def _flux_exponents(s, count):
    ex = sorted({1 + s + 2 * j for j in range(count)}
                | {2.0 + 2 * j for j in range(count)})
    return ex[:count]


def cone_boundary_flux_limit(p: ConeProfile, kmin=3, kmax=10,
                             return_error=False):
    """Extrapolated ``lim z^s d/dz[omega(z^2)]`` as ``z -> 0+``.

    Samples at ``z = 2^-k`` are fitted with the correction exponents
    ``1+s, 2, 3+s, 4, ...`` of the small-z expansion.
    """
    s = p.params.s
    z = 2.0 ** -np.arange(kmin, kmax + 1, dtype=float)
    _, dw = p.omega(z * z, deriv=1)
    vals = z ** s * 2 * z * dw
    lim, err = extrapolate_limit(z, vals, _flux_exponents(s, z.size))
    return (lim, err) if return_error else lim


def cone_endpoint_identity(p: ConeProfile):
    """``(omega'(1), -(2/n) lam omega(1))``; the two should agree."""
    _, dw, _ = p.omega(1.0)
    return float(dw[0]), -(2 / p.params.n) * p.lam * p.omega1


def cone_scan(p: ConeProfile, npts=10_000):
    """Positivity of omega on [0, 1] and sign of omega' on (0, 1]."""
    z = np.linspace(0, 1, npts)
    w = p.omega(z, deriv=0)
    _, dw = p.omega(z[1:], deriv=1)
    return {"min_omega": float(w.min()), "max_domega": float(dw.max()),
            "positive": bool(np.all(w > 0)), "decreasing": bool(np.all(dw < 0))}


# ----------------------------------------------------------- half-space


@dataclass(frozen=True)
class HalfProfile:
    """Half-space profile with its case tag and coefficients.

    For the Generic and Critical cases

        omega(y) = F(a1,b1,c1,-y^2) - K y^(1-s) F(a2,b2,c2,-y^2)

    and for large ``y`` the equivalent decaying form
    ``A y^(-2 a1) F(a1, a2, 1 + r/2, -1/y^2)`` with ``r = sqrt(1-beta^2)``.
    The Degenerate case (``mu = 0``) is ``1 + C int_0^y t^-s/(1+t^2) dt``.
    """

    s: float
    beta: float
    case_tag: str
    K: float
    decay_exponent: float
    r: float
    mu: float
    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float
    A: float
    C: Optional[float]
    k: float

    def omega(self, y, deriv=2):
        """``(omega, omega', omega'')`` at ``y >= 0``.

        At ``y = 0`` the first derivative is its limit (finite only for
        ``s <= 0``) and the second derivative is NaN.
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(y < 0) or np.any(np.isnan(y)):
            raise ProfileError("half-space profile argument must be >= 0")
        w = np.empty_like(y)
        dw = np.empty_like(y)
        d2w = np.full_like(y, np.nan)
        zero = y == 0
        w[zero] = 1.0
        s = self.s
        if zero.any():
            dw[zero] = 0.0 if s < 0 else (-self.k if s == 0 else -np.inf)
        low = (y > 0) & (y <= _Y_SWITCH)
        high = y > _Y_SWITCH
        if self.case_tag == "Degenerate":
            C = self.C
            if low.any():
                yl = y[low]
                f, _, _ = _power_hyp(yl, 1 - s, 1.0, (1 - s) / 2,
                                     (3 - s) / 2, -1.0, 2.0)
                w[low] = 1 + C * f / (1 - s)
            if high.any():
                yh = y[high]
                f, _, _ = _power_hyp(yh, -1 - s, 1.0, (1 + s) / 2,
                                     (3 + s) / 2, -1.0, -2.0)
                # 1 + C * int_0^inf = 0, so only the tail survives
                w[high] = -C * f / (1 + s)
            yy = y[~zero]
            dw[~zero] = C * yy ** -s / (1 + yy * yy)
            d2w[~zero] = C * (-s * yy ** (-s - 1) / (1 + yy * yy)
                              - 2 * yy ** (1 - s) / (1 + yy * yy) ** 2)
        else:
            if low.any():
                yl = y[low]
                f, df, d2f = _power_hyp(yl, 0.0, self.a1, self.b1, self.c1,
                                        -1.0, 2.0)
                g, dg, d2g = _power_hyp(yl, 1 - s, self.a2, self.b2,
                                        self.c2, -1.0, 2.0)
                w[low] = f - self.K * g
                dw[low] = df - self.K * dg
                d2w[low] = d2f - self.K * d2g
            if high.any():
                f, df, d2f = _power_hyp(y[high], -2 * self.a1, self.a1,
                                        self.a2, 1 + self.r / 2, -1.0, -2.0)
                w[high] = self.A * f
                dw[high] = self.A * df
                d2w[high] = self.A * d2f
        out = (w, dw, d2w)[: deriv + 1]
        return out if deriv else out[0]

    def phi(self, xn, t):
        xn = np.asarray(xn, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(xn <= 0):
            raise ProfileError("x_n must be positive")
        return xn ** (-self.s / 2) * self.omega(t / xn, deriv=0).reshape(
            np.broadcast(xn, t).shape)

    def residual(self, y):
        w, dw, d2w = self.omega(y)
        s = self.s
        return ((y * y + 1) * d2w + ((s + 2) * y + s / y) * dw
                + self.mu * w)


def _half_case(s, beta):
    if abs(s * (s + 2) + beta * beta) <= _DEGENERATE_TOL:
        return "Degenerate"
    return "Critical" if beta == 1.0 else "Generic"


def build_half_profile(s: float, beta: float) -> HalfProfile:
    """Build the half-space profile for ``s`` in (-1, 1), ``beta`` in [0, 1]."""
    s, beta = float(s), float(beta)
    if not -1.0 < s < 1.0:
        raise ParameterRangeError(f"s must lie in (-1, 1), got {s}")
    if not 0.0 <= beta <= 1.0:
        raise ParameterRangeError(f"beta must lie in [0, 1], got {beta}")
    tag = _half_case(s, beta)
    r = math.sqrt(max(0.0, 1.0 - beta * beta))
    mu = (s * (s + 2) + beta * beta) / 4
    a1, b1, c1 = (1 + s + r) / 4, (1 + s - r) / 4, (1 + s) / 2
    a2, b2, c2 = (3 - s + r) / 4, (3 - s - r) / 4, (3 - s) / 2
    K = math.exp(math.lgamma(c1) + 2 * math.lgamma(a2) - math.lgamma(c2)
                 - 2 * math.lgamma(a1))
    C = None
    if tag == "Degenerate":
        C = -2.0 / (gamma_fn((1 - s) / 2) * gamma_fn((1 + s) / 2))
        A = 0.0
        k = -C
    elif tag == "Critical":
        A = (2 * math.pi / math.tan(math.pi * a1) * gamma_fn(c1)
             * rgamma(a1) ** 2)
        k = (1 - s) * K
    else:
        A = gamma_fn(c1) * gamma_fn(-r / 2) * (
            rgamma(b1) ** 2 - (gamma_fn(a2) * rgamma(a1) * rgamma(b2)) ** 2)
        k = (1 - s) * K
    return HalfProfile(s, beta, tag, K, (1 + s + r) / 2, r, mu, a1, b1, c1,
                       a2, b2, c2, float(A), C, float(k))


def half_profile_eval(p: HalfProfile, y):
    """``(omega(y), omega'(y), phi)`` with ``phi(x_n, t) = x_n^(-s/2) omega(t/x_n)``."""
    w, dw = p.omega(y, deriv=1)
    if np.ndim(y) == 0:
        return float(w[0]), float(dw[0]), p.phi
    return w, dw, p.phi


def half_ode_residual(p: HalfProfile, y_grid) -> float:
    """Maximum absolute residual of the half-space profile equation."""
    y = np.asarray(y_grid, dtype=float)
    if np.any(y <= 0):
        raise ProfileError("residual grid must lie in (0, inf)")
    return float(np.max(np.abs(p.residual(y))))


# ------------------------------------------------------ shooting oracle


@dataclass
class ShootingResult:
    """Numerical profile from the shooting solver.

    ``kappa`` is the slope parameter in ``omega ~ 1 + kappa y^(1-s)/(1-s)``
    near 0, so it should equal ``-k(s, beta)``.
    """

    s: float
    beta: float
    kappa: float
    y0: float
    Y: float
    _sol0: object = field(repr=False)
    _sol1: object = field(repr=False)

    def __call__(self, y):
        """``(omega, omega')`` on ``[y0, Y]``."""
        y = np.asarray(y, dtype=float)
        x = np.log(y)
        u0 = self._sol0.sol(x)
        u1 = self._sol1.sol(x)
        c = self.kappa / (1 - self.s)
        w = u0[0] + c * u1[0]
        dw = (u0[1] + c * u1[1]) / y
        return w, dw


def _frobenius(sigma, s, mu, y, terms=8):
    """Series solution ``sum c_k y^(sigma + 2k)`` with ``c_0 = 1``."""
    val = np.zeros_like(y, dtype=float)
    der = np.zeros_like(y, dtype=float)
    ck = 1.0
    for k in range(terms):
        m = sigma + 2 * k
        if k > 0:
            ck = -ck * ((m - 2) * (m - 1 + s) + mu) / (m * (m - 1 + s))
        val = val + ck * y ** m
        der = der + ck * m * y ** (m - 1)
    return val, der


def shoot_half_ode(s: float, beta: float, y0=1e-4, Y=1e3, rtol=1e-12):
    """Solve the half-space profile equation by shooting on ``kappa``.

    The two Frobenius solutions at ``y0`` are integrated in ``log y`` to
    ``Y``; ``kappa`` is the root (bracketed, Brent) of the Robin mismatch
    against the decaying two-term asymptotics ``y^-p (1 - q/y^2)``.
    """
    p = build_half_profile(s, beta)
    s = p.s
    mu = p.mu

    def rhs(x, u):
        y2 = math.exp(2 * x)
        w, wx = u
        # (1 + y^-2)(w_xx - w_x) + (s + 2 + s y^-2) w_x + mu w = 0
        wxx = wx - ((s + 2 + s / y2) * wx + mu * w) / (1 + 1 / y2)
        return [wx, wxx]

    x0, x1 = math.log(y0), math.log(Y)
    sols = []
    for sigma in (0.0, 1 - s):
        v, d = _frobenius(sigma, s, mu, np.array(y0))
        sol = solve_ivp(rhs, (x0, x1), [float(v), float(d) * y0],
                        method="DOP853", rtol=rtol, atol=1e-300,
                        dense_output=True)
        if not sol.success:
            raise ArithmeticError(f"shooting integration failed: {sol.message}")
        sols.append(sol)
    dec = p.decay_exponent
    q = p.a1 * p.a2 / (1 + p.r / 2)
    g = Y ** -dec * (1 - q / Y ** 2)
    dg = -dec * Y ** (-dec - 1) * (1 - q / Y ** 2) + Y ** -dec * 2 * q / Y ** 3
    end0 = sols[0].y[:, -1]
    end1 = sols[1].y[:, -1]

    def mismatch(kappa):
        c = kappa / (1 - s)
        w = end0[0] + c * end1[0]
        dw = (end0[1] + c * end1[1]) / Y
        return dw * g - w * dg

    lo, hi = -1.0, 1.0
    for _ in range(60):
        if mismatch(lo) * mismatch(hi) <= 0:
            break
        lo, hi = 2 * lo, 2 * hi
    else:
        raise ArithmeticError("could not bracket the shooting parameter")
    kappa = brentq(mismatch, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return ShootingResult(s, p.beta, kappa, y0, Y, sols[0], sols[1])


# ------------------------------------------------------- property suite


@dataclass
class PropertyReport:
    """Outcome of :func:`half_property_suite`: clause -> record."""

    rows: dict

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows.values())

    @property
    def failures(self):
        return [k for k, r in self.rows.items() if not r["passed"]]


def _near_zero_flux(p: HalfProfile, kmin=4, kmax=12):
    y = 2.0 ** -np.arange(kmin, kmax + 1, dtype=float)
    _, dw = p.omega(y, deriv=1)
    vals = y ** p.s * dw
    return extrapolate_limit(y, vals, _flux_exponents(p.s, y.size))


def _decay_rate(p: HalfProfile, kmin=4, kmax=10):
    y = 2.0 ** np.arange(kmin, kmax + 1, dtype=float)
    w, dw = p.omega(y, deriv=1)
    vals = y * dw / w
    h = 1 / y
    return extrapolate_limit(h, vals, [2.0 * j for j in range(1, h.size)])


def half_energy_identity(p: HalfProfile, rel_tol=1e-11):
    """``int y^s [(1+y^2) w'^2 - mu w^2] dy`` and the separate integrals.

    The combined integrand decays like ``y^(-1-r)``; the two separate
    integrals are finite only for ``beta < 1`` and are reported as
    ``inf`` otherwise.
    """
    from .integrate.quadrature import quad1d_singular
    from .integrate.geometry import QuadratureSpec

    spec = QuadratureSpec(rel_tol=rel_tol, abs_tol=1e-15)
    s, mu, r = p.s, p.mu, p.r

    def pieces(y):
        w, dw = p.omega(y, deriv=1)
        return y ** s * (1 + y * y) * dw * dw, mu * y ** s * w * w

    def far(f):
        return lambda tau: f(1 / tau) / (tau * tau)

    far_exp = r - 1 if r > 0 else 0.0
    comb = lambda y: np.subtract(*pieces(y))
    inner, e1 = quad1d_singular(comb, 0.0, 1.0, -abs(s), 0.0, spec)
    outer, e2 = quad1d_singular(far(comb), 0.0, 1.0, far_exp, 0.0, spec)
    total = inner + outer
    if r > 0:
        grad = lambda y: pieces(y)[0]
        mass = lambda y: pieces(y)[1]
        g = (quad1d_singular(grad, 0.0, 1.0, -s, 0.0, spec)[0]
             + quad1d_singular(far(grad), 0.0, 1.0, r - 1, 0.0, spec)[0])
        m = 0.0
        if mu != 0:
            m = (quad1d_singular(mass, 0.0, 1.0, s, 0.0, spec)[0]
                 + quad1d_singular(far(mass), 0.0, 1.0, r - 1, 0.0, spec)[0])
    else:
        g = m = math.inf
    return total, e1 + e2, g, m


def half_property_suite(p: HalfProfile, tol=1e-6, raise_on_fail=False,
                        grid_points=10_000) -> PropertyReport:
    """Check the four listed properties of the half-space profile.

    (i) ``lim_{y->0} y^s omega' = -k``; (ii) ``y omega'/omega -> -p`` and
    ``omega (1+y^2)^(p/2)`` bounded above and below on ``[0, 1e3]``;
    (iii) the energy identity; (iv) for ``s <= 0``,
    ``y omega' + (s/2) omega <= 0`` on a dense grid. Positivity and strict
    decrease on the same grid are reported as well.
    """
    rows = {}
    lim, err = _near_zero_flux(p)
    dev = abs(lim + p.k) / p.k
    rows["i_flux"] = {"value": lim, "expected": -p.k, "deviation": dev,
                      "extrapolation_error": err, "passed": dev <= tol}

    rate, rerr = _decay_rate(p)
    dev = abs(rate + p.decay_exponent)
    yg = np.concatenate([[0.0], np.logspace(-4, 3, grid_points - 1)])
    w, dw = p.omega(yg, deriv=1)
    ratio = w * (1 + yg * yg) ** (p.decay_exponent / 2)
    bounded = bool(np.all(np.isfinite(ratio)) and ratio.min() > 0)
    rows["ii_decay"] = {"value": rate, "expected": -p.decay_exponent,
                        "deviation": dev, "ratio_min": float(ratio.min()),
                        "ratio_max": float(ratio.max()),
                        "passed": dev <= max(tol, 1e-4) and bounded}

    total, qerr, g, m = half_energy_identity(p)
    dev = abs(total - p.k) / p.k
    rows["iii_energy"] = {"value": total, "expected": p.k, "deviation": dev,
                          "gradient_integral": g, "mass_integral": m,
                          "quadrature_error": qerr, "passed": dev <= tol}

    if p.s <= 0:
        expr = yg * np.where(yg > 0, dw, 0.0) + p.s / 2 * w
        worst = float(expr.max())
        rows["iv_sign"] = {"value": worst, "expected": "<= 0",
                           "passed": worst <= 1e-14}
    pos = bool(np.all(w > 0))
    dec = bool(np.all(np.diff(w) < 0))
    rows["shape"] = {"value": float(w.min()), "expected": "> 0, decreasing",
                     "passed": pos and dec}
    report = PropertyReport(rows)
    if raise_on_fail and not report.passed:
        bad = report.failures[0]
        raise PropertyViolation(bad, rows[bad])
    return report
