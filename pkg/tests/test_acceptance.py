"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from tracehardy.constants import InequalityParams, constant_identities, sharp_constant
from tracehardy.corpus import (cone_corpus, halfspace_corpus, radial_corpus,
                               whole_line_corpus)
from tracehardy.families import (RadialProfile, improved_certificate,
                                 lh_extremal_profile, logsob_extremal,
                                 logsob_halfline, ls_extremal_profile,
                                 radial_log_quotients, sharpness_study,
                                 to_sup_variable, trace_log_checks)
from tracehardy.integrate import (ConeDomain, QuadratureSpec, cone_certificate,
                                  halfspace_certificate, spectral_energy_identity,
                                  whole_line_certificate)
from tracehardy.profiles import (build_cone_profile, build_half_profile,
                                 cone_boundary_flux_limit, cone_ode_residual,
                                 half_energy_identity, half_ode_residual,
                                 half_property_suite, shoot_half_ode)
from tracehardy.specfun import eta_limit, hyp2f1, hyp2f1_deriv, z1_classify

P = InequalityParams
CONE_CASES = [(2, 0.0, 2.0), (3, 0.0, 2.0), (3, 0.0, 3.0), (2, 0.5, 2.5),
              (2, -0.5, 2.2), (4, 0.3, 4.0), (3, 0.0, 3.9), (5, -0.3, 2.0),
              (2, 0.8, 3.7)]
HALF_CASES = [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (-0.5, 0.5), (0.5, 0.5),
              (0.5, 1.0), (-0.5, 1.0), (0.3, 0.0), (-0.5, 0.0)]


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.dt = time.perf_counter() - self.t0


def finish(acceptance, label, checks, dt, budget):
    """Record the criterion and assert every named check plus the budget."""
    checks = dict(checks)
    checks["runtime"] = dt < budget
    failed = [k for k, ok in checks.items() if not ok]
    acceptance(label, not failed,
               f"({dt:.1f}s of {budget:g}s)" + (f" failed: {failed}" if failed else ""))
    assert not failed, failed


# ------------------------------------------------------------ 1


def test_criterion_1_constant_identities(acceptance):
    with Timer() as t:
        grid = [P(n, s, b) for n in (2, 3, 4, 5) for s in (-0.5, 0.0, 0.5)
                for b in np.linspace(2, n + 1 + s, 11)[:-1]]
        rep = constant_identities(grid, tol=1e-12)
        h2 = sharp_constant("H_cone", P(3, 0.0, 2.0))
        h3 = sharp_constant("H_cone", P(3, 0.0, 3.0))
    finish(acceptance, "criterion 1 constant identities", {
        "identities": rep.passed and rep.max_deviation <= 1e-12,
        "H(3,0,2)": abs(h2 - 2 / math.pi) < 1e-13,
        "H(3,0,3)": abs(h3 - 0.5) < 1e-13}, t.dt, 1.0)


# ------------------------------------------------------------ 2


def test_criterion_2_ode_residuals(acceptance):
    checks = {}
    with Timer() as t:
        z = np.linspace(0.01, 0.99, 100)
        for case in CONE_CASES:
            checks[f"cone{case}"] = cone_ode_residual(build_cone_profile(P(*case)), z) <= 1e-8
        y = np.linspace(0.01, 50, 100)
        for case in HALF_CASES:
            p = build_half_profile(*case)
            sol = shoot_half_ode(*case)
            checks[f"half{case}"] = half_ode_residual(p, y) <= 1e-8
            yy = np.linspace(0.01, 50, 400)
            checks[f"shoot{case}"] = np.max(np.abs(sol(yy)[0] - p.omega(yy, deriv=0))) <= 1e-6
    finish(acceptance, "criterion 2 ODE residuals", checks, t.dt, 30.0)


# ------------------------------------------------------------ 3


def test_criterion_3_flux_limits(acceptance):
    checks = {}
    with Timer() as t:
        for case in [(3, 0.0, 2.0), (2, 0.5, 2.5), (4, 0.3, 4.0)]:
            p = build_cone_profile(P(*case))
            checks[f"cone{case}"] = abs(cone_boundary_flux_limit(p) + p.H) / p.H <= 1e-6
        for case in [(0.0, 0.0), (0.0, 0.5), (-0.5, 0.5)]:
            p = build_half_profile(*case)
            row = half_property_suite(p).rows["i_flux"]
            checks[f"half{case}"] = abs(row["value"] + p.k) / p.k <= 1e-6
        p = build_half_profile(0.0, 0.0)
        checks["degenerate -2/pi"] = abs(
            half_property_suite(p).rows["i_flux"]["value"] + 2 / math.pi) <= 2e-6 / math.pi
    finish(acceptance, "criterion 3 boundary flux limits", checks, t.dt, 10.0)


# ------------------------------------------------------------ 4


def test_criterion_4_energy_identity(acceptance):
    # at beta = 1 the combined integral equals k - p A^2 (see README)
    checks = {}
    with Timer() as t:
        for s, beta in [(0.0, 0.0), (0.0, 1.0), (-0.5, 0.5), (0.5, 0.5)]:
            p = build_half_profile(s, beta)
            total = half_energy_identity(p)[0]
            checks[f"({s},{beta}) dev={abs(total - p.k) / p.k:.2e}"] = \
                abs(total - p.k) / p.k <= 1e-6
    finish(acceptance, "criterion 4 energy identity", checks, t.dt, 10.0)


# ------------------------------------------------------------ 5


def test_criterion_5_sharpness(acceptance):
    checks = {}
    eps = [1e-1, 1e-2, 1e-3]
    with Timer() as t:
        for fam, prm in [("half_generic", P(2, 0.0, 0.5)),
                         ("half_generic", P(2, -0.5, 0.5)),
                         ("cone_truncation", P(2, 0.0, 2.0)),
                         ("cone_truncation", P(2, 0.5, 2.5))]:
            r = sharpness_study(fam, prm, eps)
            tag = f"{fam}(s={prm.s:g},beta={prm.beta:g})"
            checks[f"{tag} gap={r.gap:.3f}"] = r.gap <= 0.05
            checks[f"{tag} decreasing"] = r.monotone
    finish(acceptance, "criterion 5 sharpness at eps=1e-3", checks, t.dt, 300.0)


# ------------------------------------------------------------ 6


def test_criterion_6_certificates(acceptance):
    checks = {}
    size = 50
    with Timer() as t:
        half3 = ConeDomain.halfspace(3)
        quarter = ConeDomain([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        for name, cone, prm in [("cone m=1", half3, P(2, 0.3, 2.5)),
                                ("quarter-plane", quarter, P(2, -0.3, 2.4))]:
            fields = cone_corpus(cone, size, seed=0)
            certs = [cone_certificate(u, cone, prm) for u in fields]
            checks[f"{name} cone inequality"] = all(c.passed for c in certs)
            certs = [improved_certificate(u, cone, prm, 1.0, 5) for u in fields]
            checks[f"{name} improved K=5"] = all(c.passed for c in certs)
        for s in (-0.5, 0.0, 0.5):
            prm = P(2, s, 0.5)
            certs = [halfspace_certificate(u, prm) for u in halfspace_corpus(2, size, 0)]
            checks[f"half-space s={s:g}"] = all(c.passed for c in certs)
        certs = [whole_line_certificate(u, 2) for u in whole_line_corpus(2, size, 0)]
        checks["whole line"] = all(c.passed for c in certs)
    finish(acceptance, "criterion 6 inequality certificates", checks, t.dt, 300.0)


# ------------------------------------------------------------ 7


def test_criterion_7_spectral_identity(acceptance):
    checks = {}
    with Timer() as t:
        for alpha in (0.3, 0.5, 0.7):
            lhs, rhs, dev = spectral_energy_identity(alpha)
            checks[f"alpha={alpha}"] = dev <= 1e-6
        lhs, rhs, _ = spectral_energy_identity(0.5)
        checks["alpha=1/2 equals 1"] = abs(lhs - 1) <= 1e-6 and abs(rhs - 1) < 1e-15
    finish(acceptance, "criterion 7 spectral identity", checks, t.dt, 5.0)


# ------------------------------------------------------------ 8


def test_criterion_8_log_inequalities(acceptance):
    checks = {}
    with Timer() as t:
        for a in (2.0, 3.0, 4.0):
            for lam in (0.5, 1.0, 2.0):
                d = logsob_halfline(logsob_extremal(a, lam), a)[0]
                checks[f"extremal a={a:g} lam={lam:g}"] = abs(d) <= 1e-8
            g = logsob_extremal(a)
            pert = RadialProfile(lambda r, g=g: g(r) * (1 + 0.1 * r * np.exp(-r)),
                                 lambda r, g=g: g.deriv(r) * (1 + 0.1 * r * np.exp(-r))
                                 + g(r) * 0.1 * (1 - r) * np.exp(-r))
            checks[f"perturbed a={a:g}"] = logsob_halfline(pert, a)[0] > 0
        for n, s in [(2, 0.0), (3, 0.0), (3, 0.5)]:
            p = P(n, s)
            for kind, prof, ck in (("LS", ls_extremal_profile, "cls_r"),
                                   ("LH", lh_extremal_profile, "clh_r")):
                q = radial_log_quotients(to_sup_variable(prof(n, s), s), n, s, kind)
                c = sharp_constant(ck, p)
                checks[f"{kind}({n},{s})"] = abs(q / c - 1) <= 1e-6
        for v in radial_corpus(20, seed=0):
            w = to_sup_variable(v, 0.0)
            checks.setdefault("radial corpus below constants", True)
            checks["radial corpus below constants"] &= (
                radial_log_quotients(w, 2, 0.0, "LS") <= sharp_constant("cls_r", P(2, 0.0)) + 1e-6
                and radial_log_quotients(w, 2, 0.0, "LH") <= sharp_constant("clh_r", P(2, 0.0)) + 1e-6)
        ok = True
        for u in cone_corpus(ConeDomain.halfspace(3), 20, seed=0):
            for kind in ("LS", "LH"):
                ok &= trace_log_checks(u, 2, 0.0, kind).passed
        checks["trace-log certificates on corpus"] = ok
    finish(acceptance, "criterion 8 logarithmic inequalities", checks, t.dt, 120.0)


# ------------------------------------------------------------ 9


def _fit_limit(h, v, exps):
    mat = np.column_stack([np.ones_like(h)] + [h ** e for e in exps])
    return np.linalg.lstsq(mat, v, rcond=None)[0][0]


def _hyp_tuples(count=200, seed=2024):
    """Seeded tuples cycling through the finite, power, log and eta cases."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        kind = ("finite", "power", "log", "eta")[len(out) % 4]
        a, b = rng.uniform(0.1, 2.0, 2)
        z = rng.uniform(-5.0, 0.95)
        if kind == "log":
            c = a + b
        elif kind == "eta":
            # beyond a + b - c ~ 1.5 the limit is not resolvable in double precision
            c = rng.uniform(0.1, 0.9)
            if not 0 <= a + b - c <= 1.25:
                continue
        else:
            c = rng.uniform(0.2, 4.0)
            d = c - a - b
            if (kind == "finite") != (d > 0) or abs(d - round(d)) < 0.1 or abs(d) < 0.15:
                continue
        out.append((kind, a, b, c, z))
    return out


def _hyp_properties(kind, a, b, c, z):
    f1 = hyp2f1(a, b, c, z)
    res = {"symmetry": abs(f1 - hyp2f1(b, a, c, z)) <= 1e-12 * max(1.0, abs(f1))}
    h = 1e-5 * max(1.0, abs(z))
    fd = (hyp2f1(a, b, c, z + h) - hyp2f1(a, b, c, z - h)) / (2 * h)
    d = hyp2f1_deriv(a, b, c, z)
    res["derivative"] = abs(fd - d) <= 1e-6 * max(abs(d), abs(f1) * 1e-3, 1e-8)
    if kind == "eta":
        base = eta_limit(a, b, c)
        res["eta swap"] = abs(eta_limit(b, a, c) - base) <= 1e-7
        res["eta range"] = abs(eta_limit(a, b, c, kmin=4, kmax=12) - base) <= 1e-8
        return res
    coef = z1_classify(a, b, c).coefficient
    if kind == "log":
        x = 10.0 ** -np.arange(7, 12)
        L = np.log(x)
        v = np.array([hyp2f1(a, b, c, 1 - xi) for xi in x]) / L
        lim = _fit_limit(-1 / L, v, [1.0])
    else:
        e = abs(c - a - b)
        exps = [p for p in sorted({1.0, 2.0, 3.0} | {e, e + 1, e + 2}) if p < 3.5]
        hh = 10.0 ** -np.arange(2, 7.01, 0.5)
        v = np.array([hyp2f1(a, b, c, 1 - x) for x in hh])
        if kind == "power":
            v = v * hh ** (a + b - c)
        lim = _fit_limit(hh, v, exps)
    res[f"{kind} regime law"] = abs(lim - coef) <= 1e-6 * abs(coef)
    return res


def test_criterion_9_hypergeometric_suite(acceptance):
    failures = {}
    with Timer() as t:
        tuples = _hyp_tuples()
        for tup in tuples:
            try:
                res = _hyp_properties(*tup)
            except ArithmeticError as exc:
                res = {f"raised {type(exc).__name__}": False}
            for k, ok in res.items():
                if not ok:
                    failures.setdefault(k, []).append(tup)
    checks = {"200 tuples": len(tuples) == 200}
    checks.update({f"{k} ({len(v)} tuples)": False for k, v in failures.items()})
    finish(acceptance, "criterion 9 hypergeometric property suite", checks, t.dt, 30.0)
