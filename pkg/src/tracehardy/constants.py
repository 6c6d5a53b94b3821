"""Closed-form sharp constants and their consistency relations.

Every constant is a ratio of Gamma values and is evaluated in log-Gamma
space, so large dimensions do not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

__all__ = [
    "ParameterRangeError", "IdentityViolation", "InequalityParams",
    "CONSTANT_KINDS", "sharp_constant", "constant_identities",
    "IdentityReport", "sphere_area", "weighted_hemisphere",
]

CONSTANT_KINDS = (
    "H_cone", "kato", "avf", "trace_hardy_weighted", "hardy_weighted",
    "cs_trace", "pitt", "frac_sobolev", "trace_sobolev", "k_half",
    "spectral_trace", "spectral_energy_factor", "cls_r", "clh_r",
    "logsob_halfline", "flhs_c",
)


class ParameterRangeError(ValueError):
    """A parameter lies outside the range where a formula is valid."""


class IdentityViolation(ArithmeticError):
    """A consistency relation between constants failed."""

    def __init__(self, failures):
        self.failures = failures
        text = "; ".join(f"{name} at {p}: deviation {dev:.3e}"
                         for name, p, dev in failures)
        super().__init__(f"identity violation: {text}")


@dataclass(frozen=True)
class InequalityParams:
    """The triple (n, s, beta) with derived quantities.

    ``beta`` is only range-checked by the constant kinds that use it
    (cone kinds need ``2 <= beta <= n_s``, half-space kinds ``0..1``).
    """

    n: int
    s: float
    beta: float = 2.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterRangeError(f"n must be an integer >= 2, got {self.n}")
        if not -1.0 < self.s < 1.0:
            raise ParameterRangeError(f"s must lie in (-1, 1), got {self.s}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n_s(self) -> float:
        return self.n + 1 + self.s

    @property
    def alpha(self) -> float:
        return (1 - self.s) / 2

    @property
    def two_s_star(self) -> float:
        return 2 * self.n / (self.n - 1 + self.s)

    def replace(self, **kw) -> "InequalityParams":
        data = {"n": self.n, "s": self.s, "beta": self.beta}
        data.update(kw)
        return InequalityParams(**data)

    def as_dict(self):
        return {"n": self.n, "s": self.s, "beta": self.beta}


def _lg(x):
    if x <= 0:
        raise ParameterRangeError(f"Gamma argument {x!r} must be positive")
    return math.lgamma(x)


def _require(cond, message):
    if not cond:
        raise ParameterRangeError(message)


def _cone_beta(p, allow_endpoint=True):
    hi = p.n_s
    ok = 2.0 <= p.beta <= hi if allow_endpoint else 2.0 <= p.beta < hi
    _require(ok, f"beta must satisfy 2 <= beta <= n_s={hi}, got {p.beta}")


def _half_beta(beta):
    _require(0.0 <= beta <= 1.0, f"beta must lie in [0, 1], got {beta}")


def sphere_area(n):
    """Area of the unit sphere S^(n-1) in R^n: 2 pi^(n/2) / Gamma(n/2)."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def weighted_hemisphere(n, s):
    """Integral of t^s over the upper unit hemisphere of R^(n+1)."""
    return math.exp((n / 2) * math.log(math.pi) + _lg((1 + s) / 2)
                    - _lg((n + 1 + s) / 2))


def _h_cone(p):
    _cone_beta(p)
    ns, s, b = p.n_s, p.s, p.beta
    if b == ns:
        return 0.0
    lv = (math.log(2) + _lg((1 + s) / 2) + _lg((ns + b - 2 - 2 * s) / 4)
          + _lg((ns - b + 2 - 2 * s) / 4) - _lg((1 - s) / 2)
          - _lg((ns + b - 4) / 4) - _lg((ns - b) / 4))
    return math.exp(lv)


def _kato(p):
    n = p.n
    return 2 * math.exp(2 * (_lg((n + 1) / 4) - _lg((n - 1) / 4)))


def _avf(p):
    n, b = p.n, p.beta
    _require(2.0 <= b <= n + 1, f"beta must satisfy 2 <= beta <= n+1, got {b}")
    if b == n + 1:
        return 0.0
    return 2 * math.exp(_lg((n + b - 1) / 4) + _lg((n - b + 3) / 4)
                        - _lg((n + b - 3) / 4) - _lg((n + 1 - b) / 4))


def _trace_hardy(p):
    n, s = p.n, p.s
    return 2 * math.exp(_lg((1 + s) / 2) - _lg((1 - s) / 2)
                        + 2 * (_lg((n + 1 - s) / 4) - _lg((n - 1 + s) / 4)))


def _hardy_weighted(p):
    return (p.n_s - 2) ** 2 / 4


def _cs_trace_s(s):
    return 2 ** s * math.exp(_lg((1 + s) / 2) - _lg((1 - s) / 2))


def _pitt(p):
    n, s = p.n, p.s
    return math.exp((1 - s) * math.log(2)
                    + 2 * (_lg((n + 1 - s) / 4) - _lg((n - 1 + s) / 4)))


def _frac_sobolev(n, a):
    _require(0 < a < n / 2, f"alpha must lie in (0, n/2), got {a}")
    lv = (_lg((n - 2 * a) / 2) - 2 * a * math.log(2) - a * math.log(math.pi)
          - _lg((n + 2 * a) / 2) + (2 * a / n) * (_lg(n) - _lg(n / 2)))
    return math.exp(lv)


def _trace_sobolev(p):
    n, s = p.n, p.s
    lv = (-math.log(2) - ((1 - s) / 2) * math.log(math.pi)
          + _lg((1 - s) / 2) + _lg((n - 1 + s) / 2)
          - _lg((1 + s) / 2) - _lg((n + 1 - s) / 2)
          + ((1 - s) / n) * (_lg(n) - _lg(n / 2)))
    return math.exp(lv)


def _k_half_ratio(s, beta):
    _half_beta(beta)
    r = math.sqrt(max(0.0, 1 - beta * beta))
    return 2 * math.exp(_lg((1 + s) / 2) - _lg((1 - s) / 2)
                        + 2 * (_lg((3 - s + r) / 4) - _lg((1 + s + r) / 4)))


def _k_half_product(s, beta):
    """Equivalent product form (1-s) G((1+s)/2) G(a2)^2 / (G((3-s)/2) G(a1)^2)."""
    _half_beta(beta)
    r = math.sqrt(max(0.0, 1 - beta * beta))
    return (1 - s) * math.exp(_lg((1 + s) / 2) - _lg((3 - s) / 2)
                              + 2 * (_lg((3 - s + r) / 4)
                                     - _lg((1 + s + r) / 4)))


def _spectral_trace(a, beta):
    _require(0 < a < 1, f"alpha must lie in (0, 1), got {a}")
    _half_beta(beta)
    r = math.sqrt(max(0.0, 1 - beta * beta))
    return math.exp(2 * a * math.log(2)
                    + 2 * (_lg((2 * (1 + a) + r) / 4)
                           - _lg((2 * (1 - a) + r) / 4)))


def _spectral_energy_factor(a):
    _require(0 < a < 1, f"alpha must lie in (0, 1), got {a}")
    return math.exp((1 - 2 * a) * math.log(2) + _lg(1 - a) - _lg(a))


def _logsob_halfline(a):
    _require(a >= 1, f"a must be >= 1, got {a}")
    return (2 / (a * math.e)) * math.exp((2 / a) * (math.log(2) - _lg(a / 2)))


def _cls_r(p):
    n, s = p.n, p.s
    lv = (math.log(8 / (n * (1 - s) * math.e)) + _lg((n + 1 + s) / 2)
          - _lg(n / 2) - _lg((1 + s) / 2)
          + ((1 - s) / n) * (math.log(1 - s) + _lg(n / 2) - math.log(2)
                             - (n / 2) * math.log(math.pi)
                             - _lg(n / (1 - s))))
    return math.exp(lv)


def _clh_r(p):
    n, s = p.n, p.s
    q = (1 - s) / (2 * n)
    lv = (math.log(2) + _lg((n + 1 + s) / 2) - ((1 - s) / 2) * math.log(math.pi)
          - _lg(n / 2 + 1) - _lg((1 + s) / 2)
          + (1 - q) * math.log((2 * n - 1 + s) / (n - 1 + s) ** 2)
          + q * (math.log(1 - s) + 2 * _lg(n / 2)
                 - math.log(8 * math.pi * math.e)))
    return math.exp(lv)


def _flhs_c(n, a):
    _require(-1 < a < (n - 2) / 2, f"a must lie in (-1, (n-2)/2), got {a}")
    q = (1 + a) / n
    return (4 * (1 + a) ** 2 / n
            * (1 / (2 * math.pi * math.e * (1 + a))) ** q
            * ((n - 1 - a) / (n - 2 * (a + 1)) ** 2) ** (1 - q))


def sharp_constant(kind: str, params: Optional[InequalityParams] = None,
                   extra: Optional[float] = None) -> float:
    """Evaluate a sharp constant by name.

    Parameters
    ----------
    kind : str
        One of :data:`CONSTANT_KINDS`.
    params : InequalityParams
        Dimension, weight exponent and interpolation parameter. Kinds that
        depend only on ``s`` or on ``extra`` ignore the rest.
    extra : float, optional
        ``a`` for ``logsob_halfline`` and ``flhs_c``; ``alpha`` for
        ``frac_sobolev``, ``spectral_trace`` and ``spectral_energy_factor``
        (defaulting to ``(1-s)/2``).

    Returns
    -------
    float
        The constant; ``H_cone`` at ``beta = n_s`` (and ``avf`` at
        ``beta = n+1``) is 0 by continuity.
    """
    if kind not in CONSTANT_KINDS:
        raise ValueError(f"unknown constant kind {kind!r}")
    p = params
    if p is None and kind not in ("logsob_halfline", "spectral_energy_factor"):
        raise ParameterRangeError(f"{kind} needs InequalityParams")
    if kind == "H_cone":
        return _h_cone(p)
    if kind == "kato":
        return _kato(p)
    if kind == "avf":
        return _avf(p)
    if kind == "trace_hardy_weighted":
        return _trace_hardy(p)
    if kind == "hardy_weighted":
        return _hardy_weighted(p)
    if kind == "cs_trace":
        return _cs_trace_s(p.s)
    if kind == "pitt":
        return _pitt(p)
    if kind == "frac_sobolev":
        return _frac_sobolev(p.n, p.alpha if extra is None else float(extra))
    if kind == "trace_sobolev":
        return _trace_sobolev(p)
    if kind == "k_half":
        return _k_half_ratio(p.s, p.beta)
    if kind == "spectral_trace":
        return _spectral_trace(p.alpha if extra is None else float(extra),
                               p.beta)
    if kind == "spectral_energy_factor":
        if extra is None:
            _require(p is not None, "spectral_energy_factor needs alpha")
            extra = p.alpha
        return _spectral_energy_factor(float(extra))
    if kind == "cls_r":
        return _cls_r(p)
    if kind == "clh_r":
        return _clh_r(p)
    if kind == "logsob_halfline":
        if extra is None:
            _require(p is not None, "logsob_halfline needs a")
            extra = 2 * p.n / (1 - p.s)
        return _logsob_halfline(float(extra))
    if kind == "flhs_c":
        a = -(1 + p.s) / 2 if extra is None else float(extra)
        return _flhs_c(p.n, a)
    raise AssertionError(kind)  # pragma: no cover


def radial_log_prefactor(n, s):
    """Factor relating the radial log quotients to the half-line constants."""
    w1 = sphere_area(n)
    return (4 * w1 / ((1 - s) ** 2 * weighted_hemisphere(n, s))
            * (2 * w1 / (1 - s)) ** (-(1 - s) / n))


def _half_space_beta(p):
    if 0.0 <= p.beta <= 1.0:
        return p.beta
    return min(1.0, max(0.0, (p.beta - 2) / (p.n_s - 2)))


def _rel(x, y):
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


@dataclass
class IdentityReport:
    """Per grid point relation deviations; ``None`` marks not applicable."""

    rows: list = field(default_factory=list)
    tol: float = 1e-12

    @property
    def max_deviation(self) -> float:
        devs = [v for r in self.rows for k, v in r["deviations"].items()
                if v is not None]
        return max(devs) if devs else 0.0

    @property
    def failures(self):
        out = []
        for r in self.rows:
            for name, dev in r["deviations"].items():
                if dev is not None and dev > self.tol:
                    out.append((name, r["params"], dev))
            if not r["vanishing_ok"]:
                out.append(("c_vanishing", r["params"], r["H_near_ns"]))
        return out

    @property
    def passed(self) -> bool:
        return not self.failures


IDENTITY_NAMES = ("a_avf", "b_trace_hardy", "c_vanishing", "d_k_forms",
                  "e_pitt", "f_whole_line", "g_trace_sobolev",
                  "h_spectral")


def constant_identities(grid: Iterable[InequalityParams], tol=1e-12,
                        vanish_delta=1e-6, vanish_bound=1e-5,
                        raise_on_fail=False) -> IdentityReport:
    """Cross-check the specializations between the constants.

    For each grid point the relations are

    a. ``H(n, 0, beta)`` equals the interpolation constant ``H(n, beta)``
       (when ``beta <= n+1``);
    b. ``H(n, s, 2)`` equals the weighted trace Hardy constant;
    c. ``H(n, s, n_s - delta) < vanish_bound``;
    d. the two Gamma forms of ``k(s, beta)`` agree (a cone ``beta`` is
       mapped to ``(beta-2)/(n_s-2)`` in ``[0, 1]``);
    e. Pitt constant equals ``H(n, s, 2) / cs_trace(s)``;
    f. ``2 k(0, 1) = 4 (Gamma(3/4)/Gamma(1/4))^2``;
    g. trace Sobolev constant equals fractional Sobolev / ``cs_trace``;
    h. spectral trace constant equals ``k(1-2a, beta)`` times the energy
       factor inverse ``2^(2a-1) Gamma(a)/Gamma(1-a)``.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("identity grid must be nonempty")
    report = IdentityReport(tol=tol)
    g34 = math.gamma(0.75) / math.gamma(0.25)
    whole_line = 4 * g34 ** 2
    for p in grid:
        dev = {}
        if 2 <= p.beta <= p.n + 1:
            dev["a_avf"] = _rel(_h_cone(p.replace(s=0.0)), _avf(p))
        else:
            dev["a_avf"] = None
        dev["b_trace_hardy"] = _rel(_h_cone(p.replace(beta=2.0)),
                                    _trace_hardy(p))
        hb = _half_space_beta(p)
        dev["d_k_forms"] = _rel(_k_half_ratio(p.s, hb), _k_half_product(p.s, hb))
        dev["e_pitt"] = _rel(_pitt(p), _trace_hardy(p) / _cs_trace_s(p.s))
        dev["f_whole_line"] = _rel(2 * _k_half_ratio(0.0, 1.0), whole_line)
        dev["g_trace_sobolev"] = _rel(
            _trace_sobolev(p), _frac_sobolev(p.n, p.alpha) / _cs_trace_s(p.s))
        a = p.alpha
        dev["h_spectral"] = _rel(
            _spectral_trace(a, hb),
            _k_half_ratio(1 - 2 * a, hb) / _spectral_energy_factor(a))
        near = _h_cone(p.replace(beta=p.n_s - vanish_delta))
        report.rows.append({
            "params": p.as_dict(),
            "deviations": dev,
            "H_near_ns": near,
            "vanishing_ok": 0.0 < near < vanish_bound,
        })
    if raise_on_fail and not report.passed:
        raise IdentityViolation(report.failures)
    return report
