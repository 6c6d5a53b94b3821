"""Polyhedral cones, test fields, quadrature settings and certificates."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "EmptyConeError", "TieError", "SupportError", "ConeDomain",
    "DistanceResult", "cone_distance", "TestField", "QuadratureSpec",
    "Certificate", "sphere_measure",
]

TIE_TOL = 1e-12


class EmptyConeError(ValueError):
    """No interior witness was found for the cone."""


class TieError(ValueError):
    """Two facets are equidistant, so the distance has no gradient."""


class SupportError(ValueError):
    """A field does not satisfy the support requirements of a routine."""


def sphere_measure(k):
    """Surface measure of the unit sphere S^k (k >= 0); S^0 has 2 points."""
    return 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


@dataclass(frozen=True)
class DistanceResult:
    d: np.ndarray
    facet: np.ndarray
    tie: np.ndarray


class ConeDomain:
    """Open polyhedral cone ``{x : <x, u_i> > 0 for all i}`` in R^N.

    Parameters
    ----------
    normals : array_like, shape (m, N)
        Inward unit normals, one row per facet.
    normalize : bool
        Rescale rows to unit length instead of rejecting them.
    witness_trials : int
        Rejection-sampling budget for the nonemptiness check.
    """

    def __init__(self, normals, normalize=False, witness_trials=100_000,
                 seed=0):
        u = np.atleast_2d(np.asarray(normals, dtype=float))
        if u.ndim != 2 or u.shape[0] < 1 or u.shape[1] < 2:
            raise ValueError("normals must have shape (m, N) with m >= 1, N >= 2")
        norms = np.linalg.norm(u, axis=1)
        if normalize:
            if np.any(norms == 0):
                raise ValueError("zero normal vector")
            u = u / norms[:, None]
        elif np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("normals must be unit vectors (|u_i| = 1 within 1e-12)")
        self.normals = u
        self.normals.setflags(write=False)
        self.witness = self._find_witness(witness_trials, seed)

    @classmethod
    def halfspace(cls, dim):
        e = np.zeros(dim)
        e[-1] = 1.0
        return cls([e])

    @classmethod
    def from_file(cls, path, normalize=True):
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    rows.append([float(v) for v in line.split()])
        if not rows:
            raise ValueError(f"{path}: no normals found")
        return cls(rows, normalize=normalize)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def m(self) -> int:
        return self.normals.shape[0]

    def _find_witness(self, trials, seed):
        # the sum of the normals is interior for most cones; try it first
        guess = self.normals.sum(axis=0)
        if np.all(self.normals @ guess > 0):
            return guess / np.linalg.norm(guess)
        rng = np.random.default_rng(seed)
        done = 0
        while done < trials:
            k = min(10_000, trials - done)
            x = rng.standard_normal((k, self.dim))
            ok = np.all(x @ self.normals.T > 0, axis=1)
            if ok.any():
                w = x[np.argmax(ok)]
                return w / np.linalg.norm(w)
            done += k
        raise EmptyConeError(f"no interior point found in {trials} trials")

    def distance(self, x) -> DistanceResult:
        x = np.asarray(x, dtype=float)
        g = x @ self.normals.T
        facet = np.argmin(g, axis=-1)
        d = np.take_along_axis(g, facet[..., None], axis=-1)[..., 0]
        if self.m > 1:
            part = np.partition(g, 1, axis=-1)
            tie = (part[..., 1] - part[..., 0]) <= TIE_TOL
        else:
            tie = np.zeros(d.shape, dtype=bool)
        return DistanceResult(d, facet, tie)

    def contains(self, x):
        return self.distance(x).d > 0

    def __repr__(self):
        return f"ConeDomain(N={self.dim}, m={self.m})"


def cone_distance(cone: ConeDomain, x):
    """Distance to the boundary, active facet and tie flag for one point.

    Returns ``(d, facet, tie)``; ``d < 0`` for exterior points.
    """
    r = cone.distance(np.asarray(x, dtype=float))
    if np.ndim(r.d) == 0:
        return float(r.d), int(r.facet), bool(r.tie)
    return r.d, r.facet, r.tie


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy and sampling controls shared by the integrators.

    ``orders`` is the sequence of Gauss-Legendre orders used by the
    tensor rules; the last two levels give the error estimate.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_depth: int = 60
    mc_samples: int = 1_000_000
    seed: int = 0
    orders: tuple = (6, 10, 16)
    mc_strata: int = 64

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.mc_samples < 1000:
            raise ValueError("mc_samples must be at least 1000")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def rng(self, tag: str) -> np.random.Generator:
        """Generator seeded from ``(seed, tag)``; independent per call site."""
        return np.random.default_rng([int(self.seed),
                                      zlib.crc32(tag.encode())])

    def coarser(self) -> "QuadratureSpec":
        return replace(self, orders=self.orders[:-1] or self.orders)


def _fd_gradient(value, x, dim):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    h = r * 1e-6 + 1e-9
    out = np.empty_like(x)
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        out[..., k] = (value(x + h * e) - value(x - h * e)) / (2 * h[..., 0])
    return out


@dataclass
class TestField:
    """Scalar field on R^N with gradient access and support hints.

    Parameters
    ----------
    value : callable
        Vectorized ``f(x)`` for ``x`` of shape ``(..., N)``.
    dim : int
        Ambient dimension N.
    support_radius : float
        The field vanishes for ``|x| > support_radius``.
    gradient : callable, optional
        Analytic gradient; central differences are used otherwise.
    inner_radius : float
        The field vanishes for ``|x| < inner_radius``.
    bounds : sequence of (lo, hi), optional
        Coordinate box containing the support (used by box quadrature).
    radial_breaks : sequence of float
        Radii where the field is less smooth; used as panel edges.
    reduced : callable, optional
        ``reduced(geometry, params, spec) -> (energy, hardy, trace, err)``
        for fields whose functionals separate exactly.
    """

    __test__ = False

    value: Callable
    dim: int
    support_radius: float
    gradient: Optional[Callable] = None
    inner_radius: float = 0.0
    bounds: Optional[Sequence[tuple]] = None
    radial_breaks: Sequence[float] = ()
    reduced: Optional[Callable] = None
    name: str = "field"
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.value(x)

    def grad(self, x):
        if self.gradient is not None:
            return self.gradient(x)
        return _fd_gradient(self.value, x, self.dim)

    def scaled(self, lam: float) -> "TestField":
        """The dilated field ``x -> u(lam x)``."""
        lam = float(lam)
        value, grad = self.value, self.grad
        bounds = None
        if self.bounds is not None:
            bounds = [(lo / lam, hi / lam) for lo, hi in self.bounds]
        return TestField(
            value=lambda x: value(lam * np.asarray(x)),
            gradient=lambda x: lam * grad(lam * np.asarray(x)),
            dim=self.dim,
            support_radius=self.support_radius / lam,
            inner_radius=self.inner_radius / lam,
            bounds=bounds,
            radial_breaks=tuple(r / lam for r in self.radial_breaks),
            name=f"{self.name}@{lam:g}",
        )

    def multiplied(self, c: float) -> "TestField":
        value, grad = self.value, self.grad
        return replace(self, value=lambda x: c * value(x),
                       gradient=lambda x: c * grad(x), reduced=None)

    def check_support(self, rng=None, samples=4096) -> bool:
        """Sample the shell outside ``support_radius`` and check zeros."""
        rng = rng or np.random.default_rng(0)
        x = rng.standard_normal((samples, self.dim))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        rad = self.support_radius * (1.0 + 1e-9 + rng.exponential(1.0, samples))
        vals = self.value(x * rad[:, None])
        return bool(np.all(vals == 0))


@dataclass
class Certificate:
    """Evaluated sides of an inequality ``lhs >= sum(rhs_terms)``."""

    lhs: float
    rhs_terms: dict
    error_estimate: float
    params: object
    inequality_tag: str
    extras: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.lhs - sum(self.rhs_terms.values())

    @property
    def passed(self) -> bool:
        return self.margin >= -self.error_estimate

    def as_dict(self):
        p = self.params.as_dict() if hasattr(self.params, "as_dict") else self.params
        return {
            "inequality": self.inequality_tag,
            "params": p,
            "lhs": self.lhs,
            "rhs_terms": dict(self.rhs_terms),
            "margin": self.margin,
            "error_estimate": self.error_estimate,
            "passed": self.passed,
            **({"extras": self.extras} if self.extras else {}),
        }
