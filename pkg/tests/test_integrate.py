import math

import numpy as np
import pytest

from tracehardy.constants import InequalityParams
from tracehardy.corpus import bump_sum_field, product_field
from tracehardy.integrate import (Certificate, ConeDomain, EmptyConeError,
                                  QuadratureSpec, SupportError, TestField,
                                  ZeroTraceError, cone_distance,
                                  cone_functionals, facet_integral,
                                  halfspace_functionals, quad1d_singular,
                                  rayleigh_quotient, spectral_energy_identity,
                                  sphere_weight, whole_line_functionals)
from tracehardy.integrate.quadrature import QuadratureError

P = InequalityParams
SPEC = QuadratureSpec(orders=(12, 20))


def zero_field(dim):
    return TestField(value=lambda x: np.zeros(np.shape(x)[:-1]),
                     gradient=lambda x: np.zeros(np.shape(x)), dim=dim,
                     support_radius=1.0, bounds=[(-1, 1)] * (dim - 2) + [(0.5, 1), (-1, 1)])


def quarter_plane():
    return ConeDomain([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


# ------------------------------------------------------------ quadrature


def test_quad1d_examples():
    v, e = quad1d_singular(lambda t: t ** -0.5, 0.0, 1.0, -0.5)
    assert abs(v - 2) < 1e-10 and e < 1e-8
    v, _ = quad1d_singular(lambda t: t ** 0.5, 0.0, 1.0, 0.5)
    assert abs(v - 2 / 3) < 1e-12
    v, _ = quad1d_singular(lambda y: 1 / (1 + y * y), 0.0, math.inf)
    assert abs(v - math.pi / 2) < 1e-10


def test_quad1d_two_sided_and_reversed():
    f = lambda t: t ** -0.3 * (1 - t) ** -0.6
    exact = math.gamma(0.7) * math.gamma(0.4) / math.gamma(1.1)
    v, _ = quad1d_singular(f, 0.0, 1.0, -0.3, -0.6)
    assert abs(v - exact) < 1e-9 * exact
    v2, _ = quad1d_singular(lambda t: t ** 2, 1.0, 0.0)
    assert abs(v2 + 1 / 3) < 1e-14
    assert quad1d_singular(lambda t: t, 2.0, 2.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        quad1d_singular(lambda t: t, 0.0, 1.0, -1.0)


def test_quad1d_depth_exhaustion():
    spec = QuadratureSpec(max_depth=1, rel_tol=1e-15, abs_tol=1e-300)
    with pytest.raises(QuadratureError):
        quad1d_singular(lambda t: np.sin(200 * t), 0.0, 1.0, spec=spec)


# ------------------------------------------------------------ geometry


def test_cone_distance_examples():
    half = ConeDomain.halfspace(3)
    assert cone_distance(half, [0, 0, 2.0])[:2] == (2.0, 0)
    assert cone_distance(quarter_plane(), [0.0, 1.0, 2.0])[0] == 1.0
    assert cone_distance(quarter_plane(), [0.0, -1.0, 2.0])[0] < 0
    assert cone_distance(quarter_plane(), [0.0, 1.0, 1.0])[2]


def test_cone_validation(tmp_path):
    with pytest.raises(ValueError):
        ConeDomain([[0.0, 2.0, 0.0]])
    c = ConeDomain([[0.0, 2.0, 0.0]], normalize=True)
    assert np.allclose(c.normals, [[0, 1, 0]])
    with pytest.raises(EmptyConeError):
        ConeDomain([[1.0, 0.0], [-1.0, 0.0]], witness_trials=2000)
    f = tmp_path / "cone.txt"
    f.write_text("# quarter plane\n0 1 0\n0 0 3\n")
    c = ConeDomain.from_file(f)
    assert c.m == 2 and c.dim == 3 and np.all(c.normals @ c.witness > 0)
    (tmp_path / "empty.txt").write_text("# nothing\n")
    with pytest.raises(ValueError):
        ConeDomain.from_file(tmp_path / "empty.txt")


def test_spec_validation():
    for bad in (dict(rel_tol=0.0), dict(mc_samples=10), dict(max_depth=0), dict(seed=-1)):
        with pytest.raises(ValueError):
            QuadratureSpec(**bad)
    s = QuadratureSpec(seed=3)
    assert s.rng("a").random() == s.rng("a").random()
    assert s.rng("a").random() != s.rng("b").random()


def test_field_support_and_fd_gradient():
    u = bump_sum_field([[0.0, 0.5, 0.5]], [0.3], [1.0])
    assert u.check_support()
    v = TestField(value=u.value, dim=3, support_radius=u.support_radius)
    x = np.array([[0.05, 0.6, 0.45], [0.1, 0.4, 0.5]])
    assert np.allclose(v.grad(x), u.grad(x), atol=1e-7)
    w = TestField(value=lambda x: np.ones(np.shape(x)[:-1]), dim=3, support_radius=1.0)
    assert not w.check_support()


def test_sphere_weight_examples():
    assert abs(sphere_weight(2, 0.0) - 2 * math.pi) < 1e-14
    assert abs(sphere_weight(2, 0.0, boundary=True) - 2 * math.pi) < 1e-14
    assert abs(sphere_weight(3, 0.0) - math.pi ** 2) < 1e-13


def test_certificate_fields():
    c = Certificate(1.0, {"a": 0.4, "b": 0.7}, 0.05, P(2, 0.0), "x")
    assert c.margin == pytest.approx(-0.1)
    assert not c.passed
    c = Certificate(1.0, {"a": 0.4, "b": 0.7}, 0.2, P(2, 0.0), "x")
    assert c.passed and c.as_dict()["params"] == {"n": 2, "s": 0.0, "beta": 2.0}


# ------------------------------------------------------------ functionals


def test_zero_field_gives_zeros():
    F = cone_functionals(zero_field(3), quarter_plane(), P(2, 0.0), SPEC)
    assert (F.energy, F.hardy, F.trace) == (0.0, 0.0, 0.0)
    F = halfspace_functionals(zero_field(3), 0.0, spec=SPEC)
    assert (F.energy, F.hardy, F.trace) == (0.0, 0.0, 0.0)
    with pytest.raises(ZeroTraceError):
        rayleigh_quotient(zero_field(3), quarter_plane(), P(2, 0.0), SPEC)


def test_cone_functionals_dimension_checks():
    u = bump_sum_field([[0.0, 0.5, 0.5]], [0.3], [1.0])
    with pytest.raises(ValueError):
        cone_functionals(u, ConeDomain.halfspace(4), P(3, 0.0))
    with pytest.raises(ValueError):
        cone_functionals(u, quarter_plane(), P(3, 0.0))


def _bump_3d():
    return bump_sum_field([[0.1, 0.4, 0.15], [-0.2, 0.3, 0.5]], [0.3, 0.25],
                          [1.0, -0.6])


@pytest.mark.parametrize("geom", ["half", "quarter"])
@pytest.mark.parametrize("s", [0.0, 0.4, -0.4])
def test_dilation_invariance_cone(geom, s):
    cone = ConeDomain.halfspace(3) if geom == "half" else quarter_plane()
    u = _bump_3d()
    p = P(2, s, 2.4)
    q = rayleigh_quotient(u, cone, p, SPEC)
    for lam in (0.5, 2.0):
        assert abs(rayleigh_quotient(u.scaled(lam), cone, p, SPEC) - q) < 1e-6 * abs(q)


@pytest.mark.parametrize("s", [0.0, 0.5, -0.5])
def test_dilation_invariance_halfspace(s):
    u = product_field([0.1, 0.8, 0.2], [0.6, 0.5, 0.7], 1.3)
    p = P(2, s, 0.5)
    direct = QuadratureSpec(orders=(10, 16))
    F = halfspace_functionals(u, s, spec=direct, method="tensor")
    q = (F.energy - p.beta ** 2 / 4 * F.hardy) / F.trace
    for lam in (0.5, 2.0):
        G = halfspace_functionals(u.scaled(lam), s, spec=direct, method="tensor")
        q2 = (G.energy - p.beta ** 2 / 4 * G.hardy) / G.trace
        assert abs(q2 - q) < 1e-6 * abs(q)


def test_halfspace_reduced_matches_tensor():
    for s in (0.0, 0.5, -0.5):
        u = product_field([0.1, 0.8, 0.2], [0.6, 0.5, 0.7], 1.3)
        R = halfspace_functionals(u, s)
        T = halfspace_functionals(u, s, spec=QuadratureSpec(orders=(16, 24)),
                                  method="tensor")
        assert R.method == "reduced"
        for a, b in zip(R, T):
            assert abs(a - b) < 1e-8 * abs(a)


def test_halfspace_support_required():
    u = product_field([0.1, 0.2, 0.2], [0.6, 0.5, 0.7])
    with pytest.raises(SupportError):
        halfspace_functionals(u, 0.0)
    with pytest.raises(SupportError):
        halfspace_functionals(u, 0.0, method="tensor")


def test_monte_carlo_agrees_with_tensor():
    cone = quarter_plane()
    u = _bump_3d()
    p = P(2, 0.3, 2.0)
    T = cone_functionals(u, cone, p, SPEC, mode="tensor")
    M = cone_functionals(u, cone, p, QuadratureSpec(mc_samples=200_000, seed=5), mode="mc")
    for key in ("energy", "hardy", "trace"):
        assert abs(getattr(T, key) - getattr(M, key)) <= 3 * M.errors[key] + T.errors[key]
    u2 = product_field([0.1, 0.8, 0.2], [0.6, 0.5, 0.7], 1.3)
    T = halfspace_functionals(u2, 0.3)
    M = halfspace_functionals(u2, 0.3, spec=QuadratureSpec(mc_samples=200_000, seed=5),
                              method="mc")
    for key in ("energy", "hardy", "trace"):
        assert abs(getattr(T, key) - getattr(M, key)) <= 3 * M.errors[key] + T.errors[key]


def test_monte_carlo_is_seeded():
    u = bump_sum_field([[0.1, 0.2, 0.4, 0.3]], [0.3], [1.0])
    cone = ConeDomain.halfspace(4)
    spec = QuadratureSpec(mc_samples=20_000, seed=11)
    a = cone_functionals(u, cone, P(3, 0.0), spec)
    b = cone_functionals(u, cone, P(3, 0.0), spec)
    assert a.method == "mc" and a.energy == b.energy and a.trace == b.trace


@pytest.mark.parametrize("s", [0.0, 0.5, -0.5])
def test_facet_trace_matches_planar_formula(s):
    # trace over {t = 0} against polar quadrature of int u(x,0)^2 |x|^(s-1) dx
    u = bump_sum_field([[0.2, 0.3, 0.1], [-0.3, 0.1, 0.2]], [0.35, 0.4], [1.0, 0.7])
    F = cone_functionals(u, ConeDomain.halfspace(3), P(2, s, 2.0), SPEC)
    fine = cone_functionals(u, ConeDomain.halfspace(3), P(2, s, 2.0),
                            QuadratureSpec(orders=(16, 24, 32)), mode="tensor")
    th = np.linspace(0, 2 * np.pi, 512, endpoint=False)

    def ring(r):
        r = np.atleast_1d(r)
        x = np.stack([r[:, None] * np.cos(th), r[:, None] * np.sin(th),
                      np.zeros((r.size, th.size))], axis=-1)
        return u(x).__pow__(2).mean(axis=1) * 2 * np.pi * r ** s

    ref = sum(quad1d_singular(ring, a, b, s if a == 0 else 0.0,
                              spec=QuadratureSpec(rel_tol=1e-12))[0]
              for a, b in [(0, 0.05), (0.05, 0.35), (0.35, 0.55), (0.55, 0.8)])
    assert abs(F.trace - ref) <= F.errors["trace"]
    assert abs(fine.trace - ref) <= fine.errors["trace"]
    assert abs(fine.trace - ref) < 1e-7 * ref


def test_facet_integral_matches_trace():
    u = _bump_3d()
    cone = quarter_plane()
    F = cone_functionals(u, cone, P(2, 0.0, 2.0), SPEC)
    v, _ = facet_integral(u, cone, lambda x, w: w * w / np.linalg.norm(x, axis=-1),
                          SPEC, radial_exp=-1e-300)
    assert abs(v - F.trace) < 1e-8 * F.trace


def test_whole_line_doubling_symmetric_field():
    u = product_field([0.0, 0.9, 0.0], [0.5, 0.6, 0.8])
    up = halfspace_functionals(u, 0.0)
    W = whole_line_functionals(u)
    assert W.energy == pytest.approx(2 * up.energy, rel=1e-14)
    assert W.hardy == pytest.approx(2 * up.hardy, rel=1e-14)
    assert W.trace == pytest.approx(up.trace, rel=1e-14)


def test_whole_line_reflection_matches_tensor():
    u = product_field([0.1, 0.9, 0.3], [0.5, 0.6, 0.8])
    W = whole_line_functionals(u)
    spec = QuadratureSpec(orders=(16, 24))
    up = halfspace_functionals(u, 0.0, spec=spec, method="tensor")
    down = halfspace_functionals(u, 0.0, spec=spec, method="tensor", t_sign=-1.0)
    assert abs(W.energy - up.energy - down.energy) < 1e-8 * W.energy
    assert abs(W.hardy - up.hardy - down.hardy) < 1e-8 * W.hardy


# ------------------------------------------------------------ spectral


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("k", [1, 3])
def test_spectral_energy_identity(alpha, k):
    lhs, rhs, dev = spectral_energy_identity(alpha, k)
    assert dev < 1e-6
    if alpha == 0.5:
        assert abs(lhs - 1) < 1e-6 and rhs == pytest.approx(1.0, abs=1e-15)


def test_spectral_domain():
    with pytest.raises(ValueError):
        spectral_energy_identity(1.2)
    with pytest.raises(ValueError):
        spectral_energy_identity(0.5, 0)
