"""Cone and half-space geometry, quadrature and weighted functionals."""
from .geometry import (Certificate, ConeDomain, DistanceResult,
                       EmptyConeError, QuadratureSpec, SupportError,
                       TestField, TieError, cone_distance, sphere_measure)
from .quadrature import QuadratureError, quad1d_singular
from .functionals import (Functionals, RadialWeight, ZeroTraceError,
                          cone_certificate, cone_functionals, facet_integral,
                          halfspace_certificate, halfspace_functionals,
                          rayleigh_quotient, spectral_energy_identity,
                          sphere_weight, whole_line_certificate,
                          whole_line_functionals)
