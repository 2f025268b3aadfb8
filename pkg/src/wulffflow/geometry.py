"""Pointwise geometry of radial graphs ``X(x) = rho(x) x`` over S^n.

Two independent routes to the anisotropic mean curvature are provided:

* :func:`compute_fields` differentiates the ambient components of ``X`` on
  the grid, builds the first and second fundamental forms, and forms the
  anisotropic Weingarten map ``d nu_F = D^2F(nu) o S`` in an orthonormal
  basis of the tangent plane.
* :func:`anisotropic_H_graph_formula` evaluates the scalar formula in terms
  of ``gamma = log rho`` and its covariant derivatives only.

Sign conventions: ``nu`` is the outer unit normal and the second fundamental
form is positive on spheres, so a sphere of radius ``r`` has ``S = Id / r``.
"""

from dataclasses import dataclass
from math import fsum

import numba
import numpy as np

from .errors import DegenerateNodeError, DomainError

M_EIG_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class RadialGraph:
    """Star-shaped hypersurface ``rho(x) x`` stored as ``gamma = log rho``."""

    grid: object
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid.check_field(self.gamma), dtype=float)
        if g.ndim != 1:
            raise DomainError("gamma must be a single nodal field")
        if not np.all(np.isfinite(g)):
            raise DomainError("gamma has non-finite values")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_rho(cls, grid, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(~(rho > 0)):
            raise DomainError("rho must be positive at every node")
        return cls(grid, np.log(rho))

    @property
    def rho(self):
        return np.exp(self.gamma)

    @property
    def points(self):
        return self.rho[:, None] * self.grid.directions

    def scaled(self, factor):
        return RadialGraph(self.grid, self.gamma + np.log(factor))


@dataclass(frozen=True, eq=False)
class GeometryFields:
    """Per-node geometric quantities of a radial graph.

    Matrices ``S``, ``M``, ``weingarten_F`` are expressed in the orthonormal
    tangent basis ``basis`` (ambient columns, shape ``(N, n+1, n)``);
    ``tangents`` holds the coordinate tangent vectors ``d_i X`` along the
    grid frame directions.
    ``dmu`` and ``dmu_F`` already include the grid quadrature weights, so
    ``sum(f * dmu)`` approximates the surface integral of ``f``.
    """

    grid: object
    rho: np.ndarray
    X: np.ndarray
    W: np.ndarray
    nu: np.ndarray
    nu_F: np.ndarray
    F_nu: np.ndarray
    u: np.ndarray
    u_hat: np.ndarray
    basis: np.ndarray
    S: np.ndarray
    M: np.ndarray
    H: np.ndarray
    H_F: np.ndarray
    kappa_F: np.ndarray
    sigma2_F: np.ndarray
    dmu: np.ndarray
    dmu_F: np.ndarray
    tangents: np.ndarray = None

    @property
    def n(self):
        return self.grid.n

    @property
    def weingarten_F(self):
        return self.M @ self.S

    def integrate(self, f, measure="dmu_F"):
        """Integral of a nodal field against ``dmu`` or ``dmu_F``."""
        w = self.dmu_F if measure == "dmu_F" else self.dmu
        return fsum((np.asarray(f, dtype=float) * w).tolist())


# ------------------------------------------------------------ node kernels


@numba.njit(cache=True, error_model="numpy")
def _eig_sym(a00, a01, a11, n):
    if n == 1:
        return a00, a00
    m = 0.5 * (a00 + a11)
    d = np.hypot(0.5 * (a00 - a11), a01)
    return m - d, m + d


@numba.njit(cache=True, error_model="numpy")
def _surface_kernel(x, frames, rho, dgamma, dX, d2X, W, nu, basis, S):
    """Normal, orthonormal tangent basis and shape operator at every node.

    Returns the first node with a non-finite result, or -1.
    """
    npts, dim = x.shape
    n = dim - 1
    J = np.empty((dim, 2))
    for p in range(npts):
        w2 = 1.0
        for i in range(n):
            w2 += dgamma[p, i] * dgamma[p, i]
        w = np.sqrt(w2)
        W[p] = w
        for a in range(dim):
            v = x[p, a]
            for i in range(n):
                v -= frames[p, a, i] * dgamma[p, i]
            nu[p, a] = v / w
        for a in range(dim):
            for i in range(n):
                J[a, i] = dX[a, p, i]
        h00 = 0.0
        h01 = 0.0
        h11 = 0.0
        for a in range(dim):
            h00 -= d2X[a, p, 0, 0] * nu[p, a]
            if n == 2:
                h01 -= 0.5 * (d2X[a, p, 0, 1] + d2X[a, p, 1, 0]) * nu[p, a]
                h11 -= d2X[a, p, 1, 1] * nu[p, a]
        g00 = 0.0
        g01 = 0.0
        g11 = 0.0
        for a in range(dim):
            g00 += J[a, 0] * J[a, 0]
            if n == 2:
                g01 += J[a, 0] * J[a, 1]
                g11 += J[a, 1] * J[a, 1]
        # g = R R^T (lower Cholesky), L = R^{-1}
        r00 = np.sqrt(g00)
        l00 = 1.0 / r00
        if n == 1:
            for a in range(dim):
                basis[p, a, 0] = J[a, 0] * l00
            S[p, 0, 0] = h00 * l00 * l00
        else:
            r10 = g01 / r00
            r11 = np.sqrt(g11 - r10 * r10)
            l11 = 1.0 / r11
            l10 = -r10 / (r00 * r11)
            for a in range(dim):
                basis[p, a, 0] = J[a, 0] * l00
                basis[p, a, 1] = J[a, 0] * l10 + J[a, 1] * l11
            S[p, 0, 0] = l00 * l00 * h00
            s01 = l00 * (l10 * h00 + l11 * h01)
            S[p, 0, 1] = s01
            S[p, 1, 0] = s01
            S[p, 1, 1] = l10 * l10 * h00 + 2.0 * l10 * l11 * h01 + l11 * l11 * h11
        ok = np.isfinite(w)
        for i in range(n):
            for j in range(n):
                ok = ok and np.isfinite(S[p, i, j])
        if not ok:
            return p
    return -1


@numba.njit(cache=True, error_model="numpy")
def _anisotropy_kernel(basis, S, D2F, floor, M, kappa, H_F, H):
    """``M = basis^T D^2F basis``, ``H_F = tr(M S)`` and the eigenvalues of
    ``M^(1/2) S M^(1/2)``.  Returns the first node where ``M`` has an
    eigenvalue below ``floor`` (or is not finite), else -1.
    """
    npts, dim, n = basis.shape
    for p in range(npts):
        m00 = 0.0
        m01 = 0.0
        m11 = 0.0
        for a in range(dim):
            t0 = 0.0
            t1 = 0.0
            for b in range(dim):
                t0 += D2F[p, a, b] * basis[p, b, 0]
                if n == 2:
                    t1 += D2F[p, a, b] * basis[p, b, 1]
            m00 += basis[p, a, 0] * t0
            if n == 2:
                m01 += 0.5 * (basis[p, a, 0] * t1 + basis[p, a, 1] * t0)
                m11 += basis[p, a, 1] * t1
        s00 = S[p, 0, 0]
        M[p, 0, 0] = m00
        if n == 1:
            emin = m00
            H[p] = s00
            H_F[p] = m00 * s00
            kappa[p, 0] = m00 * s00
        else:
            s01 = S[p, 0, 1]
            s11 = S[p, 1, 1]
            M[p, 0, 1] = m01
            M[p, 1, 0] = m01
            M[p, 1, 1] = m11
            emin, _ = _eig_sym(m00, m01, m11, 2)
            H[p] = s00 + s11
            H_F[p] = m00 * s00 + 2.0 * m01 * s01 + m11 * s11
            # M^(1/2) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M))
            sd = np.sqrt(max(m00 * m11 - m01 * m01, 0.0))
            tq = np.sqrt(m00 + m11 + 2.0 * sd)
            q00 = (m00 + sd) / tq
            q01 = m01 / tq
            q11 = (m11 + sd) / tq
            # Q S Q
            a00 = q00 * s00 + q01 * s01
            a01 = q00 * s01 + q01 * s11
            a10 = q01 * s00 + q11 * s01
            a11 = q01 * s01 + q11 * s11
            b00 = a00 * q00 + a01 * q01
            b01 = 0.5 * ((a00 * q01 + a01 * q11) + (a10 * q00 + a11 * q01))
            b11 = a10 * q01 + a11 * q11
            k0, k1 = _eig_sym(b00, b01, b11, 2)
            kappa[p, 0] = k0
            kappa[p, 1] = k1
        if not (emin >= floor) or not np.isfinite(H_F[p]):
            return p
    return -1


def sym_eigvals(a):
    """Ascending eigenvalues of stacked symmetric 1x1 or 2x2 matrices."""
    if a.shape[-1] == 1:
        return a[..., 0, :1].copy()
    m = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    d = np.hypot(0.5 * (a[..., 0, 0] - a[..., 1, 1]), 0.5 * (a[..., 0, 1] + a[..., 1, 0]))
    return np.stack([m - d, m + d], axis=-1)


# ------------------------------------------------------------------- fields


def compute_fields(graph, norm):
    """All pointwise quantities of ``graph`` for the anisotropy ``norm``.

    ``nu = (x - grad gamma) / W`` with ``W = sqrt(1 + |grad gamma|^2)``; the
    tangent vectors ``d_i X`` and the second fundamental form
    ``h_ij = -<Hess X, nu>`` come from differencing the ambient components of
    ``X``.  With ``g = R R^T`` the basis ``J R^{-T}`` is orthonormal, the shape
    operator is ``S = R^{-1} h R^{-T}`` and ``M`` is ``D^2F(nu)`` in that basis.

    Raises
    ------
    DegenerateNodeError
        If ``W``, the metric or the shape operator is not finite, or ``M`` has
        an eigenvalue below ``1e-8`` at some node.
    """
    grid = graph.grid
    if norm.dim != grid.n + 1:
        raise DomainError(f"norm acts on R^{norm.dim}, grid is S^{grid.n}")
    n, dim, npts = grid.n, grid.n + 1, grid.size
    x = grid.directions
    rho = graph.rho
    X = rho[:, None] * x

    d1, d2 = grid.derivatives(np.vstack([graph.gamma[None, :], X.T]))
    dgamma, dX, d2X = d1[0], d1[1:], d2[1:]
    W = np.empty(npts)
    nu = np.empty((npts, dim))
    basis = np.empty((npts, dim, n))
    S = np.empty((npts, n, n))
    with np.errstate(all="ignore"):
        bad = _surface_kernel(x, grid.frames, rho, dgamma, dX, d2X, W, nu, basis, S)
    if bad >= 0:
        raise DegenerateNodeError(f"non-finite normal or metric at grid node {bad} "
                                  "(overflow in 1 + |grad gamma|^2?)", node=bad)

    F_nu, DF, D2F = norm.derivatives(nu)
    M = np.empty((npts, n, n))
    kappa = np.empty((npts, n))
    H_F = np.empty(npts)
    H = np.empty(npts)
    bad = _anisotropy_kernel(basis, S, np.ascontiguousarray(D2F), M_EIG_FLOOR, M, kappa, H_F, H)
    if bad >= 0:
        raise DegenerateNodeError(
            f"D^2F(nu) not positive definite on the tangent plane at grid node {bad}", node=bad)
    sigma2 = kappa[:, 0] * kappa[:, 1] if n == 2 else np.zeros(npts)

    u = np.einsum("pa,pa->p", X, nu)
    dmu = rho ** n * W * grid.weights
    return GeometryFields(
        grid=grid, rho=rho, X=X, W=W, nu=nu, nu_F=DF, F_nu=F_nu, u=u, u_hat=u / F_nu,
        basis=basis, S=S, M=M, H=H, H_F=H_F, kappa_F=kappa, sigma2_F=sigma2,
        dmu=dmu, dmu_F=F_nu * dmu, tangents=np.moveaxis(dX, 0, 1),
    )


def anisotropic_H_graph_formula(graph, norm):
    """H_F from ``gamma`` and its covariant derivatives alone.

    In the orthonormal frame ``e_i`` of S^n at ``x``, with ``g_i = gamma_i``,
    ``W^2 = 1 + |grad gamma|^2`` and ``Pi = delta - g g^T / W^2``::

        H_F = tr(A K) / (rho W),    K = delta - Pi Hess(gamma),
        A   = Pi (E + x g^T)^T D^2F(nu) (E + x g^T),

    where ``E`` holds the frame vectors as columns.  ``A`` is ``D^2F(nu)``
    written as an endomorphism of the tangent plane in the coordinate basis
    ``d_i X / rho = e_i + g_i x``, and ``K / (rho W)`` is the Weingarten map
    in the same basis.
    """
    grid = graph.grid
    x, frames = grid.directions, grid.frames
    rho = graph.rho
    dg, hg = grid.derivatives(graph.gamma)
    W2 = 1.0 + np.einsum("pi,pi->p", dg, dg)
    W = np.sqrt(W2)
    nu = (x - np.einsum("pai,pi->pa", frames, dg)) / W[:, None]
    D2F = norm.hessian(nu)
    eye = np.eye(grid.n)
    pi_ = eye - dg[:, :, None] * dg[:, None, :] / W2[:, None, None]
    B = frames + x[:, :, None] * dg[:, None, :]          # columns e_i + g_i x
    A = pi_ @ (np.swapaxes(B, -1, -2) @ (D2F @ B))
    K = eye - pi_ @ hg
    return np.einsum("pij,pji->p", A, K) / (rho * W)


@dataclass(frozen=True)
class AdmissibilityReport:
    min_u: float
    min_H_F: float
    argmin_u: int
    argmin_H_F: int
    u_margin: float
    H_margin: float
    admissible: bool

    def as_dict(self):
        return dict(self.__dict__)


def check_admissible(fields, u_margin=0.0, H_margin=0.0):
    """Star-shapedness (``u > u_margin``) and F-mean convexity (``H_F > H_margin``)."""
    iu = int(np.argmin(fields.u))
    ih = int(np.argmin(fields.H_F))
    mu, mh = float(fields.u[iu]), float(fields.H_F[ih])
    ok = bool(mu > u_margin and mh > H_margin and np.all(np.isfinite(fields.H_F)))
    return AdmissibilityReport(mu, mh, iu, ih, u_margin, H_margin, ok)
