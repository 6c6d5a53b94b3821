import math
import time

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tracehardy.constants import (CONSTANT_KINDS, IdentityViolation,
                                  InequalityParams, ParameterRangeError,
                                  constant_identities, radial_log_prefactor,
                                  sharp_constant)

mp.mp.dps = 40
G = mp.gamma


def rel(x, y):
    return abs(x - y) / abs(y)


def H_oracle(n, s, beta):
    n, s, beta = mp.mpf(n), mp.mpf(s), mp.mpf(beta)
    ns = n + 1 + s
    return float(2 * G((1 + s) / 2) * G((ns + beta - 2 - 2 * s) / 4)
                 * G((ns - beta + 2 - 2 * s) / 4)
                 / (G((1 - s) / 2) * G((ns + beta - 4) / 4) * G((ns - beta) / 4)))


def k_oracle(s, beta):
    s, beta = mp.mpf(s), mp.mpf(beta)
    r = mp.sqrt(1 - beta ** 2)
    return float(2 * G((1 + s) / 2) / G((1 - s) / 2)
                 * (G((3 - s + r) / 4) / G((1 + s + r) / 4)) ** 2)


def cls_oracle(n, s):
    n, s = mp.mpf(n), mp.mpf(s)
    return float(8 / (n * (1 - s) * mp.e) * G((n + 1 + s) / 2)
                 / (G(n / 2) * G((1 + s) / 2))
                 * ((1 - s) * G(n / 2) / (2 * mp.pi ** (n / 2) * G(n / (1 - s))))
                 ** ((1 - s) / n))


def clh_oracle(n, s):
    n, s = mp.mpf(n), mp.mpf(s)
    q = (1 - s) / (2 * n)
    return float(2 * G((n + 1 + s) / 2)
                 / (mp.pi ** ((1 - s) / 2) * G(n / 2 + 1) * G((1 + s) / 2))
                 * ((2 * n - 1 + s) / (n - 1 + s) ** 2) ** (1 - q)
                 * ((1 - s) * G(n / 2) ** 2 / (8 * mp.pi * mp.e)) ** q)


P = InequalityParams


def test_params_derived_fields():
    p = P(3, 0.5, 2.5)
    assert p.n_s == 4.5 and p.alpha == 0.25
    assert p.two_s_star == pytest.approx(6 / 2.5)
    assert p.replace(beta=3.0).beta == 3.0


@pytest.mark.parametrize("bad", [dict(n=1, s=0.0), dict(n=2.5, s=0.0),
                                 dict(n=3, s=1.0), dict(n=3, s=-1.0)])
def test_params_rejects_out_of_range(bad):
    with pytest.raises(ParameterRangeError):
        P(**bad)


def test_sharp_constant_examples():
    assert abs(sharp_constant("kato", P(3, 0.0)) - 2 / math.pi) < 1e-13
    assert sharp_constant("cs_trace", P(2, 0.0)) == pytest.approx(1.0, abs=1e-15)
    assert abs(sharp_constant("H_cone", P(3, 0.0, 3.0)) - 0.5) < 1e-13
    assert abs(sharp_constant("H_cone", P(3, 0.0, 2.0)) - 2 / math.pi) < 1e-13
    k = 2 * (math.gamma(0.75) / math.gamma(0.25)) ** 2
    assert abs(sharp_constant("k_half", P(2, 0.0, 1.0)) - k) < 1e-15
    assert abs(sharp_constant("k_half", P(2, 0.0, 1.0)) - 0.2284732) < 1e-7
    assert sharp_constant("hardy_weighted", P(3, 0.0)) == 1.0


@pytest.mark.parametrize("n", [2, 3, 5, 9])
@pytest.mark.parametrize("s", [-0.7, -0.5, 0.0, 0.3, 0.5, 0.9])
def test_H_cone_against_oracle(n, s):
    ns = n + 1 + s
    for beta in np.linspace(2, ns, 7)[:-1]:
        assert rel(sharp_constant("H_cone", P(n, s, beta)), H_oracle(n, s, beta)) < 1e-13


@pytest.mark.parametrize("s", [-0.5, 0.0, 0.5])
@pytest.mark.parametrize("beta", [0.0, 0.3, 0.5, 0.9, 1.0])
def test_k_half_against_oracle(s, beta):
    assert rel(sharp_constant("k_half", P(2, s, beta)), k_oracle(s, beta)) < 1e-13


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("s", [-0.5, 0.0, 0.5])
def test_radial_log_constants(n, s):
    p = P(n, s)
    cls, clh = sharp_constant("cls_r", p), sharp_constant("clh_r", p)
    assert cls > 0 and clh > 0
    assert rel(cls, cls_oracle(n, s)) < 1e-13
    assert rel(clh, clh_oracle(n, s)) < 1e-13
    # composition of the radial prefactor with the half-line constants
    pre = radial_log_prefactor(n, s)
    a = 2 * n / (1 - s)
    assert rel(pre * sharp_constant("logsob_halfline", p, a), cls) < 1e-12
    assert rel(pre * sharp_constant("flhs_c", p), clh) < 1e-12


def test_H_vanishes_at_endpoint():
    for n in (2, 3, 5):
        for s in (-0.5, 0.0, 0.5):
            p = P(n, s, n + 1 + s)
            assert sharp_constant("H_cone", p) == 0.0
            near = sharp_constant("H_cone", p.replace(beta=p.n_s - 1e-6))
            assert 0 < near < 1e-5


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(-0.9, 0.9), st.floats(0.0, 1.0))
def test_H_positive_and_decreasing(n, s, frac):
    ns = n + 1 + s
    b1 = 2 + frac * (ns - 2) * 0.98
    b2 = b1 + 0.01 * (ns - 2)
    h1, h2 = sharp_constant("H_cone", P(n, s, b1)), sharp_constant("H_cone", P(n, s, b2))
    assert h1 > 0 and h2 > 0 and h2 < h1


def test_large_dimension_no_overflow():
    for kind in ("H_cone", "trace_hardy_weighted", "pitt", "trace_sobolev", "cls_r"):
        v = sharp_constant(kind, P(1000, 0.3, 2.0))
        assert math.isfinite(v) and v > 0


def test_every_kind_evaluates():
    p = P(3, 0.0, 2.0)
    for kind in CONSTANT_KINDS:
        q = p.replace(beta=0.5) if kind in ("k_half", "spectral_trace") else p
        assert sharp_constant(kind, q) > 0


def test_extra_parameter_overrides():
    p = P(3, 0.0)
    assert sharp_constant("spectral_energy_factor", None, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert sharp_constant("logsob_halfline", None, 6.0) == sharp_constant("logsob_halfline", p)
    assert sharp_constant("frac_sobolev", p, 0.5) == sharp_constant("frac_sobolev", p)


def test_parameter_errors():
    with pytest.raises(ValueError):
        sharp_constant("no_such_kind", P(2, 0.0))
    with pytest.raises(ParameterRangeError):
        sharp_constant("H_cone", P(2, 0.0, 1.5))
    with pytest.raises(ParameterRangeError):
        sharp_constant("k_half", P(2, 0.0, 1.5))
    with pytest.raises(ParameterRangeError):
        sharp_constant("H_cone", None)


def test_identity_suite_examples():
    rep = constant_identities([P(3, 0.0, 2.0)])
    assert rep.passed and rep.max_deviation < 1e-13
    dev = rep.rows[0]["deviations"]["f_whole_line"]
    assert dev < 1e-13


def test_identity_suite_flags_violation():
    rep = constant_identities([P(3, 0.0, 2.0)], tol=0.0, vanish_bound=0.0)
    assert not rep.passed
    with pytest.raises(IdentityViolation):
        constant_identities([P(3, 0.0, 2.0)], vanish_bound=0.0, raise_on_fail=True)
    with pytest.raises(ValueError):
        constant_identities([])


def test_identity_suite_is_fast():
    grid = [P(n, s, b) for n in (2, 3, 4, 5) for s in (-0.5, 0.0, 0.5)
            for b in np.linspace(2, n + 1 + s, 11)[:-1]]
    t0 = time.perf_counter()
    rep = constant_identities(grid)
    assert time.perf_counter() - t0 < 1.0
    assert rep.passed
