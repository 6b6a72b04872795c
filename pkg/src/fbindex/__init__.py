"""Morse index and nullity of free boundary minimal surfaces in the ball.

The index is certified from two spectra: the fixed-boundary spectrum of
the second-variation operator and the spectrum of the associated
boundary (Dirichlet-to-Neumann type) map.  The critical catenoid's
closed-form spectrum serves as the exact oracle for every numerical
path (per-mode 1D solvers and the full 2D finite element pipeline).
"""

from .catenoid import (
    ModeEigenpair,
    closed_form_index,
    closed_form_spectrum,
    growth_check_n_ge_2,
    ladder_apply,
)
from .certify import (
    BorderlineError,
    IndexCertificate,
    certify_1d,
    certify_2d,
    certify_closed_form,
    certify_sandwich,
    decomposition_check,
)
from .geometry import (
    DEFAULT_TOLERANCES,
    SingularChartError,
    SurfaceChart,
    ToleranceProfile,
    ValidationError,
    catenoid_parameters,
    chart_from_descriptor,
    free_boundary_residual,
    jacobi_field_residual,
    make_critical_catenoid,
    make_equatorial_disk,
)
from .reports import SpectrumReport

__all__ = [
    "BorderlineError",
    "DEFAULT_TOLERANCES",
    "IndexCertificate",
    "ModeEigenpair",
    "SingularChartError",
    "SpectrumReport",
    "SurfaceChart",
    "ToleranceProfile",
    "ValidationError",
    "catenoid_parameters",
    "certify_1d",
    "certify_2d",
    "certify_closed_form",
    "certify_sandwich",
    "chart_from_descriptor",
    "closed_form_index",
    "closed_form_spectrum",
    "decomposition_check",
    "free_boundary_residual",
    "growth_check_n_ge_2",
    "jacobi_field_residual",
    "ladder_apply",
    "make_critical_catenoid",
    "make_equatorial_disk",
]
