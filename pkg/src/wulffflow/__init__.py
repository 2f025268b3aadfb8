"""Inverse anisotropic mean curvature flow of star-shaped hypersurfaces.

Modules
-------
norm         Minkowski norms, duals and Wulff-shape data.
sphere_grid  Structured grids on S^1 and S^2 with 4th-order calculus.
geometry     Pointwise geometry of radial graphs.
flow         Time integration and diagnostics.
functionals  Curvature integrals, mixed volumes, Minkowski inequality.
cli          Configuration files and the ``wulffflow`` command.
"""

from .errors import (ConfigError, DegenerateNodeError, DomainError, DualConvergenceError,
                     FlowBreakdownError, NumericError, WulffFlowError)
from .flow import FlowParameters, FlowRecord, FlowState, RunResult, choose_dt, rhs, run, step
from .functionals import (InequalityReport, anisotropic_area, first_variation_check,
                          minkowski_check, mixed_volumes, sigma2_integral, total_HF,
                          wulff_volume)
from .geometry import (GeometryFields, RadialGraph, anisotropic_H_graph_formula,
                       check_admissible, compute_fields)
from .norm import (MinkowskiNorm, NormValidityReport, WulffSample, bidual_eval, dual_eval,
                   norm_eval, norm_gradient, norm_hessian, validate_norm, wulff_point)
from .sphere_grid import SphereGrid, build_grid, grad_s, hess_s, integrate

__version__ = "0.1.0"
