"""Global curvature integrals, mixed volumes and the Minkowski-type inequality.

For a star-shaped, F-mean-convex hypersurface M bounding K and the Wulff
body L, the mixed volumes used here are

    V1 = 1/(n+1) * int F(nu) dmu,
    V2 = 1/((n+1) n) * int H_F F(nu) dmu,

and the inequality checked is ``V2^n >= V1^(n-1) Vol(L)``, with equality
exactly for rescaled (and translated) Wulff shapes.
"""

from dataclasses import dataclass
from math import fsum

import numpy as np

from .errors import DomainError, NumericError
from .geometry import RadialGraph, check_admissible, compute_fields
from .norm import anisotropy_matrices

TOL_INEQ = 1e-8
TOL_EQ = 5e-3


def anisotropic_area(fields):
    """``int_M F(nu) dmu``."""
    return fsum(fields.dmu_F.tolist())


def total_HF(fields):
    """``int_M H_F F(nu) dmu``."""
    return fields.integrate(fields.H_F)


def sigma2_integral(fields):
    """``int_M 2 sigma_2(kappa^F) F(nu) dmu`` (zero on curves)."""
    return fields.integrate(2.0 * fields.sigma2_F)


def wulff_volume(norm, grid):
    """Volume of the Wulff body, ``1/(n+1) int_{S^n} F det(A_F)``."""
    if norm.dim != grid.n + 1:
        raise DomainError(f"norm acts on R^{norm.dim}, grid is S^{grid.n}")
    a = anisotropy_matrices(norm, grid.directions, grid.frames)
    det = np.linalg.det(a) if grid.n == 2 else a[:, 0, 0]
    return grid.integrate(norm.value(grid.directions) * det) / (grid.n + 1)


def mixed_volumes(fields, norm=None):
    """``(V1, V2)`` of the body bounded by ``fields`` relative to the Wulff body."""
    n = fields.n
    return anisotropic_area(fields) / (n + 1), total_HF(fields) / ((n + 1) * n)


@dataclass
class InequalityReport:
    V1: float
    V2: float
    vol_L: float
    lhs: float
    rhs: float
    normalized_deficit: float
    holds: bool
    near_equality: bool
    admissible: bool = True
    min_H_F: float = float("nan")
    tol_ineq: float = TOL_INEQ
    tol_eq: float = TOL_EQ

    def as_dict(self):
        return dict(self.__dict__)

    def to_text(self):
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.as_dict().items())


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def minkowski_check(fields, norm, vol_L=None, tol_ineq=TOL_INEQ, tol_eq=TOL_EQ):
    """Evaluate both sides of ``V2^n >= V1^(n-1) Vol(L)``.

    ``normalized_deficit = (lhs - rhs) / rhs``; the inequality holds when it
    is at least ``-tol_ineq`` and is near equality when its magnitude is below
    ``tol_eq``.  Surfaces with ``H_F < 0`` somewhere (or ``u <= 0``) are
    reported with ``admissible = False`` rather than rejected.
    """
    n = fields.n
    if vol_L is None:
        vol_L = wulff_volume(norm, fields.grid)
    v1, v2 = mixed_volumes(fields, norm)
    lhs = v2 ** n
    rhs = v1 ** (n - 1) * vol_L
    deficit = (lhs - rhs) / rhs
    adm = check_admissible(fields, u_margin=0.0, H_margin=-np.inf)
    min_h = float(fields.H_F.min())
    return InequalityReport(
        V1=v1, V2=v2, vol_L=vol_L, lhs=lhs, rhs=rhs, normalized_deficit=deficit,
        holds=bool(deficit >= -tol_ineq), near_equality=bool(abs(deficit) < tol_eq),
        admissible=bool(adm.admissible and min_h >= 0.0), min_H_F=min_h,
        tol_ineq=tol_ineq, tol_eq=tol_eq,
    )


# ------------------------------------------------------------ first variation


@dataclass
class VariationReport:
    """Central-difference derivatives of the area functionals vs. their formulas.

    ``residual_*`` are ``|fd - predicted| / scale`` where ``scale`` is the
    integral of the absolute integrand (so mean-zero cases are meaningful).
    """

    eps: float
    d_area_fd: float
    d_area_pred: float
    residual_area: float
    d_HF_fd: float
    d_HF_pred: float
    residual_HF: float
    admissible: bool = True

    def as_dict(self):
        return dict(self.__dict__)


def normal_perturbation(graph, fields, psi, eps):
    """Radial graph of ``X + eps psi nu`` to first order: ``rho + eps psi W``."""
    rho = graph.rho + eps * np.asarray(psi) * fields.W
    if np.any(~(rho > 0)):
        raise NumericError("perturbed surface is not a positive radial graph")
    return RadialGraph.from_rho(graph.grid, rho)


def first_variation_check(graph, norm, psi, eps):
    """Compare ``d/de`` of ``int F dmu`` and ``int H_F F dmu`` with their formulas.

    The surface is moved by ``eps psi nu`` (realized as the radial change
    ``eps psi W``).  The predicted first variations are ``int H_F psi dmu``
    and ``int 2 sigma_2(kappa^F) psi dmu`` (on curves the latter is zero).
    """
    psi = graph.grid.check_field(psi)
    base = compute_fields(graph, norm)
    vals = {}
    admissible = True
    for sgn in (1, -1):
        try:
            f = compute_fields(normal_perturbation(graph, base, psi, sgn * eps), norm)
        except (NumericError, ArithmeticError):
            admissible = False
            f = None
        if f is None:
            vals[sgn] = (np.nan, np.nan)
            continue
        admissible = admissible and check_admissible(f).admissible
        vals[sgn] = (anisotropic_area(f), total_HF(f))
    d_area = (vals[1][0] - vals[-1][0]) / (2 * eps)
    d_hf = (vals[1][1] - vals[-1][1]) / (2 * eps)
    pa = base.integrate(base.H_F * psi, measure="dmu")
    sa = base.integrate(np.abs(base.H_F * psi), measure="dmu")
    ph = base.integrate(2.0 * base.sigma2_F * psi, measure="dmu")
    sh = base.integrate(np.abs(2.0 * base.sigma2_F * psi), measure="dmu")
    return VariationReport(
        eps=eps, d_area_fd=d_area, d_area_pred=pa, residual_area=abs(d_area - pa) / sa,
        d_HF_fd=d_hf, d_HF_pred=ph,
        residual_HF=abs(d_hf - ph) / sh if sh > 0 else abs(d_hf - ph),
        admissible=admissible,
    )


def epsilon_ladder(graph, norm, psi, eps0, levels=4):
    """Run :func:`first_variation_check` at ``eps0 / 2^k`` and estimate the order.

    The order in ``eps`` is measured from successive differences of the
    central-difference estimates, ``log2(|D(e) - D(e/2)| / |D(e/2) - D(e/4)|)``,
    which isolates the truncation error from the (eps-independent) spatial
    discretization error.
    """
    reports = [first_variation_check(graph, norm, psi, eps0 / 2 ** k) for k in range(levels)]
    orders = {}
    for key in ("d_area_fd", "d_HF_fd"):
        d = np.array([getattr(r, key) for r in reports])
        diffs = np.abs(np.diff(d))
        with np.errstate(divide="ignore", invalid="ignore"):
            orders[key] = np.log2(diffs[:-1] / diffs[1:])
    return reports, orders
