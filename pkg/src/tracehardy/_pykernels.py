"""NumPy fallback for the compiled kernels in ``_ckernels.pyx``.

Same signatures, same termination rules. The Gauss series is vectorized
over the argument array with a per-point active mask; the Taylor march is
a plain Python loop.
"""
import numpy as np

IMPLEMENTATION = "python"


def gauss_series(a, b, c, z, tol=1e-16, maxterms=1000000):
    z = np.ascontiguousarray(z, dtype=np.float64)
    total = np.ones_like(z)
    term = np.ones_like(z)
    small = np.zeros(z.shape, dtype=np.int64)
    active = np.ones(z.shape, dtype=bool)
    nterms = np.zeros(z.shape, dtype=np.int64)
    k = 0
    while active.any():
        idx = np.flatnonzero(active)
        x = z[idx]
        t = term[idx] * (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x
        term[idx] = t
        total[idx] += t
        k += 1
        nterms[idx] = k
        tiny = np.abs(t) <= tol * np.abs(total[idx]) + 1e-300
        small[idx] = np.where(tiny, small[idx] + 1, 0)
        shrinking = np.abs((a + k) * (b + k) * x) < np.abs((c + k) * (k + 1.0))
        done = (t == 0.0) | ((small[idx] >= 2) & shrinking)
        active[idx[done]] = False
        if k >= maxterms and active.any():
            bad = z[active][0]
            raise ArithmeticError(
                "Gauss series did not converge at z=%r after %d terms"
                % (bad, k))
    worst = int(nterms.max()) if nterms.size else 0
    return total, worst


def ode_march(a, b, c, z0, w0, dw0, targets, tol=1e-16, maxterms=100000):
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    w_out = np.empty_like(targets)
    dw_out = np.empty_like(targets)
    z, w, dw = float(z0), float(w0), float(dw0)
    ab1 = a + b + 1.0
    for i, zt in enumerate(targets):
        zt = float(zt)
        while z != zt:
            rho = min(z, 1.0 - z)
            if rho <= 0.0:
                raise ArithmeticError("march left the interval (0, 1)")
            h = zt - z
            if abs(h) > 0.5 * rho:
                h = 0.5 * rho if h > 0 else -0.5 * rho
            p0 = z * (1.0 - z)
            p1 = 1.0 - 2.0 * z
            q0 = c - ab1 * z
            # recur on the scaled coefficients u_k = w^(k)(z) h^k / k!, which
            # stay bounded even when 1 - z is tiny
            u0, u1 = w, dw * h
            hh = h * h
            sw = u0 + u1
            sdw = dw
            small = 0
            k = 0
            while True:
                u2 = ((k + a) * (k + b) * u0 * hh
                      - (k + 1.0) * (p1 * k + q0) * u1 * h) \
                    / (p0 * (k + 1.0) * (k + 2.0))
                term_w = u2
                term_dw = (k + 2.0) * u2 / h
                sw += term_w
                sdw += term_dw
                u0, u1 = u1, u2
                k += 1
                if (abs(term_w) <= tol * abs(sw) + 1e-300
                        and abs(term_dw) <= tol * abs(sdw) + 1e-300):
                    small += 1
                    if small >= 2:
                        break
                else:
                    small = 0
                if k >= maxterms:
                    raise ArithmeticError("Taylor step did not converge")
            z = z + h if abs(zt - z - h) > 0.0 else zt
            w, dw = sw, sdw
        w_out[i] = w
        dw_out[i] = dw
    return w_out, dw_out
