"""Radial Compensation on constant-curvature manifolds.

Samplers and densities whose geodesic radius follows a prescribed 1D law,
independently of the scalar-Jacobian chart used to build them.
"""

from .charts import AtlasGate, Chart, RadialProfile, atlas_log_density, bexp_profile, make_chart
from .errors import (
    ConvergenceError,
    CutLocusError,
    DivergentMomentError,
    DomainError,
    EnvelopeError,
    RadcompError,
    StepSizeUnderflow,
)
from .manifold import ManifoldSpec, exp_map, geodesic_distance, log_map
from .radial import RadialLaw, ReflectedLaw, fisher_1d, kl_divergence, parse_law
from .rc import RcModel, WrappedModel, log_density_radial, log_density_volume, sample_rc, sample_wrapped

__all__ = [
    "AtlasGate",
    "Chart",
    "ConvergenceError",
    "CutLocusError",
    "DivergentMomentError",
    "DomainError",
    "EnvelopeError",
    "ManifoldSpec",
    "RadcompError",
    "RadialLaw",
    "RadialProfile",
    "RcModel",
    "ReflectedLaw",
    "StepSizeUnderflow",
    "WrappedModel",
    "atlas_log_density",
    "bexp_profile",
    "exp_map",
    "fisher_1d",
    "geodesic_distance",
    "kl_divergence",
    "log_density_radial",
    "log_density_volume",
    "log_map",
    "make_chart",
    "parse_law",
    "sample_rc",
    "sample_wrapped",
]
