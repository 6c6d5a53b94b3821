"""Real-argument special functions.

Gamma, digamma and Pochhammer symbols, the Gauss hypergeometric function
with analytic continuation to ``z < 1``, its behavior at ``z = 1``, the
finite limit of the two-term combination used by the cone profile, and the
modified Bessel function K with the associated extension profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._quadrature import adaptive_gk, extrapolate_limit

__all__ = [
    "PoleError", "DegenerateGammaError", "NonConvergenceError",
    "HypParams", "Z1Regime", "gamma_fn", "rgamma", "digamma",
    "pochhammer", "hyp2f1", "hyp2f1_deriv", "z1_classify", "eta_limit",
    "bessel_k", "bessel_k_profile", "extension_profile_deriv",
    "MAX_SERIES_TERMS",
]

MAX_SERIES_TERMS = 1_000_000
_SERIES_TOL = 1e-16
_INT_TOL = 1e-12
# distance of a-b to an integer below which the 1/z connection formula is
# abandoned (cancellation between its two terms grows like 1/distance)
_NEAR_INT = 1e-3


class PoleError(ValueError):
    """Gamma-type function evaluated at a nonpositive integer."""


class DegenerateGammaError(ArithmeticError):
    """Connection formula needs a Gamma value at a pole."""


class NonConvergenceError(ArithmeticError):
    """Series, continuation or extrapolation failed to reach tolerance."""


def _is_nonpos_int(x, tol=0.0):
    r = round(x)
    return r <= 0 and abs(x - r) <= tol


def gamma_fn(x, log_scale=False):
    """Gamma function, or its logarithm for positive arguments.

    Parameters
    ----------
    x : float
        Argument; must not be a nonpositive integer.
    log_scale : bool
        Return ``ln Gamma(x)`` (requires ``x > 0``).
    """
    x = float(x)
    if _is_nonpos_int(x):
        raise PoleError(f"Gamma has a pole at x={x!r}")
    if log_scale:
        if x <= 0:
            raise ValueError("log_scale requires x > 0")
        return math.lgamma(x)
    return math.gamma(x)


def rgamma(x):
    """Reciprocal Gamma, zero at the poles."""
    if _is_nonpos_int(float(x)):
        return 0.0
    return 1.0 / math.gamma(x)


# Bernoulli-number coefficients B_2k/(2k) of the asymptotic digamma series
_PSI_ASYMP = (1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132,
              -691.0 / 32760, 1.0 / 12)


def digamma(x):
    """Logarithmic derivative of Gamma.

    Reflection for negative arguments, upward recurrence to ``x >= 12``
    and the asymptotic Stirling series there.
    """
    x = float(x)
    if _is_nonpos_int(x):
        raise PoleError(f"digamma has a pole at x={x!r}")
    if x < 0.5:
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    acc = 0.0
    while x < 12.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for coef in _PSI_ASYMP:
        series += coef * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - series


def pochhammer(a, k):
    """Rising factorial ``a (a+1) ... (a+k-1)`` with ``(a)_0 = 1``."""
    k = int(k)
    if k < 0:
        raise ValueError("k must be nonnegative")
    out = 1.0
    for j in range(k):
        out *= a + j
    return out


@dataclass(frozen=True)
class HypParams:
    """Real parameter set ``(a, b, c, z)`` of the Gauss function."""

    a: float
    b: float
    c: float
    z: float = 0.0

    def __post_init__(self):
        if _is_nonpos_int(self.c):
            raise PoleError(f"c={self.c!r} is zero or a negative integer")
        if self.z > 1.0:
            raise ValueError("z must satisfy z <= 1")


@dataclass(frozen=True)
class Z1Regime:
    """Behavior of F(a, b, c, z) as z -> 1-.

    ``coefficient`` is F(1) for ``Finite``, the ``ln(1-z)`` coefficient for
    ``Logarithmic`` and the ``(1-z)**exponent`` coefficient otherwise.
    """

    tag: str
    coefficient: float
    exponent: float


def z1_classify(a, b, c):
    """Classify the z -> 1 behavior of F(a, b, c, z)."""
    if _is_nonpos_int(c):
        raise PoleError(f"c={c!r} is zero or a negative integer")
    d = c - a - b
    try:
        if abs(d) <= _INT_TOL:
            coef = -gamma_fn(a + b) * rgamma(a) * rgamma(b)
            return Z1Regime("Logarithmic", coef, 0.0)
        if d > 0:
            coef = gamma_fn(c) * gamma_fn(d) * rgamma(c - a) * rgamma(c - b)
            return Z1Regime("Finite", coef, d)
        coef = gamma_fn(c) * gamma_fn(-d) * rgamma(a) * rgamma(b)
        return Z1Regime("PowerBlowup", coef, d)
    except PoleError as exc:
        raise PoleError(f"regime coefficient has a pole: {exc}") from exc


def _series(a, b, c, z):
    vals, _ = kernels.gauss_series(a, b, c, np.atleast_1d(z), _SERIES_TOL,
                                   MAX_SERIES_TERMS)
    return vals


def _continue_above_half(a, b, c, z):
    """F(a, b, c, z) for z in (1/2, 1) by marching the ODE from 1/2."""
    z = np.asarray(z, dtype=float)
    order = np.argsort(z)
    f0 = _series(a, b, c, 0.5)[0]
    if a * b == 0.0:
        return np.full(z.shape, f0)
    df0 = a * b / c * _series(a + 1, b + 1, c + 1, 0.5)[0]
    w, _ = kernels.ode_march(a, b, c, 0.5, f0, df0, z[order])
    out = np.empty_like(z)
    out[order] = w
    return out


def _near_int(x):
    return abs(x - round(x)) < _NEAR_INT


def _inverse_argument(a, b, c, z):
    """Connection formula in 1/z for z <= -2."""
    if _near_int(a - b):
        raise DegenerateGammaError("a-b is (close to) an integer")
    mz = -z
    c1 = gamma_fn(c) * gamma_fn(b - a) * rgamma(b) * rgamma(c - a)
    c2 = gamma_fn(c) * gamma_fn(a - b) * rgamma(a) * rgamma(c - b)
    out = np.zeros_like(z)
    if c1 != 0.0:
        out += c1 * mz ** (-a) * _series(a, 1 - c + a, 1 - b + a, 1.0 / z)
    if c2 != 0.0:
        out += c2 * mz ** (-b) * _series(b, 1 - c + b, 1 - a + b, 1.0 / z)
    return out


def _pfaff(a, b, c, z):
    """Pfaff transformation: (1-z)^-a F(a, c-b, c, z/(z-1))."""
    w = z / (z - 1.0)
    inner = np.empty_like(z)
    low = w <= 0.5
    if low.any():
        inner[low] = _series(a, c - b, c, w[low])
    if (~low).any():
        inner[~low] = _continue_above_half(a, c - b, c, w[~low])
    return (1.0 - z) ** (-a) * inner


def hyp2f1(a, b=None, c=None, z=None):
    """Gauss hypergeometric function for real parameters and ``z <= 1``.

    Accepts either a :class:`HypParams` or ``(a, b, c, z)``; ``z`` may be
    an array. Evaluation routes: series for ``|z| <= 1/2``; Pfaff map for
    ``-2 < z < -1/2``; the ``1/z`` connection formula for ``z <= -2``
    (Pfaff plus continuation when ``a - b`` is an integer); ODE
    continuation from ``1/2`` for ``1/2 < z < 1``; ``z = 1`` through
    :func:`z1_classify` when the value is finite.
    """
    if isinstance(a, HypParams):
        a, b, c, z = a.a, a.b, a.c, a.z
    else:
        HypParams(a, b, c, 0.0)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z > 1.0):
        raise ValueError("hyp2f1 is only defined here for z <= 1")
    out = np.empty_like(z)
    if a == 0.0 or b == 0.0:
        out.fill(1.0)
        return float(out[0]) if scalar else out

    mid = np.abs(z) <= 0.5
    pf = (z < -0.5) & (z > -2.0)
    far = z <= -2.0
    up = (z > 0.5) & (z < 1.0)
    one = z == 1.0
    if mid.any():
        out[mid] = _series(a, b, c, z[mid])
    if pf.any():
        out[pf] = _pfaff(a, b, c, z[pf])
    if far.any():
        try:
            out[far] = _inverse_argument(a, b, c, z[far])
        except DegenerateGammaError:
            out[far] = _pfaff(a, b, c, z[far])
    if up.any():
        out[up] = _continue_above_half(a, b, c, z[up])
    if one.any():
        reg = z1_classify(a, b, c)
        if reg.tag != "Finite":
            raise ValueError("F(a,b,c,1) diverges for c-a-b <= 0")
        out[one] = reg.coefficient
    return float(out[0]) if scalar else out


def hyp2f1_deriv(a, b=None, c=None, z=None):
    """Derivative in z: ``(ab/c) F(a+1, b+1, c+1, z)``."""
    if isinstance(a, HypParams):
        a, b, c, z = a.a, a.b, a.c, a.z
    if a == 0.0 or b == 0.0:
        return 0.0 if np.ndim(z) == 0 else np.zeros(np.shape(z))
    return a * b / c * hyp2f1(a + 1, b + 1, c + 1, z)


def _connection_coefficient(a, b, c):
    return -(gamma_fn(c) * gamma_fn(a + 1 - c) * gamma_fn(b + 1 - c)
             / (gamma_fn(2 - c) * gamma_fn(a) * gamma_fn(b)))


_GROWTH_BITS = 16.0  # log2 of the tolerated singular growth in eta_limit


def eta_limit(a, b, c, kmin=3, kmax=13, tol=1e-8, return_error=False):
    """Limit at z = 1 of ``F(a,b,c,z) + C z^(1-c) F(a+1-c,b+1-c,2-c,z)``.

    ``C`` is the fixed coefficient that cancels the singular part. The
    combination is marched along the hypergeometric ODE from ``z = 1/2``
    to ``z_k = 1 - 2^-k`` and the samples are extrapolated with integer
    correction exponents in ``1 - z``.

    Rounding in the march excites the singular solution, which grows like
    ``(1-z)^(c-a-b)``; ``kmax`` is therefore capped so that this growth
    stays below about ``2^16``, and the amplified rounding is added to the
    reported drift. For ``a + b - c`` beyond roughly 2.5 the limit cannot be
    resolved to ``tol`` in double precision and the error is raised.
    """
    if not (a > 0 and b > 0 and 0 < c < 1 and a + b >= c):
        raise ValueError("eta_limit needs a, b > 0, 0 < c < 1, a + b >= c")
    C = _connection_coefficient(a, b, c)
    ap, bp, cp = a + 1 - c, b + 1 - c, 2 - c
    z0 = 0.5
    g = _series(ap, bp, cp, z0)[0]
    dg = ap * bp / cp * _series(ap + 1, bp + 1, cp + 1, z0)[0]
    f0 = _series(a, b, c, z0)[0]
    eta0 = f0 + C * z0 ** (1 - c) * g
    deta0 = (a * b / c * _series(a + 1, b + 1, c + 1, z0)[0]
             + C * ((1 - c) * z0 ** (-c) * g + z0 ** (1 - c) * dg))
    e = a + b - c
    if e > 0:
        kmax = min(kmax, max(kmin + 4, 1 + int(_GROWTH_BITS / e)))
    ks = np.arange(kmin, kmax + 1)
    h = 2.0 ** (-ks.astype(float))
    vals, _ = kernels.ode_march(a, b, c, z0, eta0, deta0, 1.0 - h)
    limit, err = extrapolate_limit(h, vals, range(1, h.size))
    limit2, _ = extrapolate_limit(h[:-1], vals[:-1], range(1, h.size - 1))
    scale = max(abs(f0), abs(C * z0 ** (1 - c) * g), abs(eta0))
    rounding = 64 * np.finfo(float).eps * scale * (z0 / h[-1]) ** max(e, 0.0)
    drift = max(err, abs(limit - limit2)) + rounding
    if not np.isfinite(limit) or drift > tol:
        raise NonConvergenceError(
            f"eta extrapolation unstable (drift {drift:.3e})")
    return (limit, drift) if return_error else limit


def _k_integrand(nu, t):
    def f(u):
        e = -t * np.cosh(u)
        return 0.5 * (np.exp(e + nu * u) + np.exp(e - nu * u))
    return f


def bessel_k(nu, t, rel_tol=1e-12):
    """Modified Bessel K_nu(t) from the cosh integral (0 when t > 700)."""
    t = float(t)
    if t <= 0:
        raise ValueError("t must be positive")
    if t > 700.0:
        return 0.0
    nu = abs(float(nu))
    # integrand is below exp(-750) past U; its peak sits near asinh(nu/t)
    upper = math.acosh(max(1.0, (750.0 + nu * 40.0) / t))
    upper = max(upper, 1.0)
    peak = math.asinh(nu / t) if nu > 0 else 0.0
    breaks = [x for x in (peak, math.acosh(1.0 + 1.0 / t)) if 0 < x < upper]
    val, _ = adaptive_gk(_k_integrand(nu, t), 0.0, upper, rel_tol=rel_tol,
                         abs_tol=0.0, breaks=breaks)
    return val


def bessel_k_profile(nu, t):
    """Return ``(K_nu(t), T(t))`` with ``T = 2^(1-nu)/Gamma(nu) t^nu K_nu``.

    T is the extension profile: ``T(0+) = 1`` and it decays like
    ``e^-t``. Both values underflow to 0 for ``t > 700``.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    k = bessel_k(nu, t)
    if k == 0.0:
        return 0.0, 0.0
    log_pref = (1 - nu) * math.log(2.0) - math.lgamma(nu) + nu * math.log(t)
    return k, math.exp(log_pref) * k


def extension_profile_deriv(nu, t):
    """``T'(t) = -2^(1-nu)/Gamma(nu) t^nu K_(1-nu)(t)``."""
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    k = bessel_k(1.0 - nu, t)
    if k == 0.0:
        return 0.0
    log_pref = (1 - nu) * math.log(2.0) - math.lgamma(nu) + nu * math.log(t)
    return -math.exp(log_pref) * k
