"""Minkowski norms F on R^{n+1}, their duals and Wulff-shape data.

Families
--------
``euclidean``
    F(x) = |x|.
``ellipsoid``
    F(x) = |M x| for a symmetric positive definite matrix M, the support
    function of the ellipsoid M(B) with semi-axes given by the eigenvalues
    of M.
``perturbed_sphere``
    F(x) = |x| + sum_i a_i P_i(x) |x|^(1 - l_i), the 1-homogeneous extension
    of 1 + sum_i a_i Y_i on the sphere (harmonics as in :mod:`.harmonics`).
``blended_lp``
    F(x) = sqrt((1 - lam) |x|^2 + lam ||x||_p^2).

All evaluation routines are vectorized over leading axes of ``x``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, DualConvergenceError
from .harmonics import real_harmonic
from .sphere_grid import sample_directions, tangent_frame

FAMILIES = ("euclidean", "ellipsoid", "perturbed_sphere", "blended_lp")
ANALYTIC_DUAL = ("euclidean", "ellipsoid")


@dataclass(frozen=True, eq=False)
class MinkowskiNorm:
    """Anisotropy F on R^dim (dim = n + 1).

    Use the constructors :meth:`euclidean`, :meth:`ellipsoid`,
    :meth:`perturbed_sphere` and :meth:`blended_lp`.  ``derivative_mode`` is
    ``"analytic"`` or ``"finite_difference"``; in the latter case first
    derivatives use central differences with step ``fd_step * |x|`` and
    second derivatives step ``10 * fd_step * |x|``.
    """

    family: str
    dim: int
    matrix: np.ndarray = None
    terms: tuple = ()
    p: float = None
    blend: float = None
    derivative_mode: str = "analytic"
    fd_step: float = 1e-5
    _cache: dict = field(default_factory=dict, repr=False)

    # ----------------------------------------------------------- constructors
    @classmethod
    def euclidean(cls, dim=3, **kw):
        return cls("euclidean", dim, **kw)

    @classmethod
    def ellipsoid(cls, matrix, **kw):
        m = np.array(matrix, dtype=float)
        if m.ndim == 1:
            m = np.diag(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
            raise DomainError("ellipsoid matrix must be 2x2 or 3x3")
        return cls("ellipsoid", m.shape[0], matrix=m, **kw)

    @classmethod
    def perturbed_sphere(cls, terms, dim=3, **kw):
        terms = tuple((int(l), int(m), float(a)) for l, m, a in terms)
        for l, m, _ in terms:
            if l < 0 or (dim == 3 and abs(m) > l):
                raise DomainError(f"invalid harmonic term (degree={l}, order={m})")
        return cls("perturbed_sphere", dim, terms=terms, **kw)

    @classmethod
    def blended_lp(cls, p, blend, dim=3, **kw):
        if not 1 < p < np.inf:
            raise DomainError("p must lie in (1, inf)")
        if not 0 <= blend <= 1:
            raise DomainError("blend must lie in [0, 1]")
        return cls("blended_lp", dim, p=float(p), blend=float(blend), **kw)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown norm family '{self.family}'")
        if self.derivative_mode not in ("analytic", "finite_difference"):
            raise DomainError(f"unknown derivative mode '{self.derivative_mode}'")
        if self.family == "ellipsoid":
            q = self.matrix.T @ self.matrix
            self._cache["Q"] = q
            try:
                self._cache["Qinv"] = np.linalg.inv(q)
            except np.linalg.LinAlgError:
                self._cache["Qinv"] = None

    @property
    def n(self):
        return self.dim - 1

    def describe(self):
        if self.family == "ellipsoid":
            return f"ellipsoid(matrix={self.matrix.tolist()})"
        if self.family == "perturbed_sphere":
            return f"perturbed_sphere(terms={list(self.terms)})"
        if self.family == "blended_lp":
            return f"blended_lp(p={self.p}, blend={self.blend})"
        return "euclidean"

    def scaled(self, factor):
        """The norm ``factor * F`` (Wulff shape scaled by ``factor``)."""
        kw = dict(derivative_mode=self.derivative_mode, fd_step=self.fd_step)
        if self.family == "ellipsoid":
            return MinkowskiNorm.ellipsoid(factor * self.matrix, **kw)
        return _ScaledNorm(self, float(factor))

    # ------------------------------------------------------------- evaluation
    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(f"expected vectors in R^{self.dim}, got shape {x.shape}")
        r = np.linalg.norm(x, axis=-1)
        if np.any(r == 0):
            raise DomainError("norm evaluated at the zero vector")
        return x, r

    def value(self, x):
        """F(x) for nonzero ``x``."""
        x, r = self._check(x)
        return self._value(x, r)

    def gradient(self, x):
        """DF(x); 0-homogeneous."""
        x, r = self._check(x)
        if self.derivative_mode == "finite_difference":
            return self._fd_gradient(x, r, self.fd_step)
        return self._analytic(x, r, order=1)[1]

    def hessian(self, x):
        """D^2 F(x); satisfies D^2F(x) x = 0."""
        x, r = self._check(x)
        if self.derivative_mode == "finite_difference":
            return self._fd_hessian(x, r, 10 * self.fd_step)
        return self._analytic(x, r, order=2)[2]

    def derivatives(self, x):
        """``(F, DF, D^2F)`` in one call."""
        x, r = self._check(x)
        if self.derivative_mode == "finite_difference":
            return (self._value(x, r), self._fd_gradient(x, r, self.fd_step),
                    self._fd_hessian(x, r, 10 * self.fd_step))
        return self._analytic(x, r, order=2)

    def truncation_error(self, x):
        """Richardson estimate of the finite-difference error in DF and D^2F.

        Returns ``(grad_err, hess_err)`` as max-abs estimates per point; zeros
        in analytic mode.
        """
        x, r = self._check(x)
        if self.derivative_mode == "analytic":
            z = np.zeros(x.shape[:-1])
            return z, z
        g1 = self._fd_gradient(x, r, self.fd_step)
        g2 = self._fd_gradient(x, r, 2 * self.fd_step)
        h1 = self._fd_hessian(x, r, 10 * self.fd_step)
        h2 = self._fd_hessian(x, r, 20 * self.fd_step)
        return (np.abs(g2 - g1).max(axis=-1) / 3.0,
                np.abs(h2 - h1).max(axis=(-2, -1)) / 3.0)

    # closed forms
    def _value(self, x, r):
        fam = self.family
        if fam == "euclidean":
            return r
        if fam == "ellipsoid":
            q = self._cache["Q"]
            return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", x, q, x), 0.0))
        if fam == "perturbed_sphere":
            out = r.copy()
            for l, m, a in self.terms:
                out = out + a * real_harmonic(l, m, self.dim).value(x) * r ** (1 - l)
            return out
        lam, p = self.blend, self.p
        nrm = np.sum(np.abs(x) ** p, axis=-1) ** (1 / p)
        return np.sqrt((1 - lam) * r * r + lam * nrm * nrm)

    def _analytic(self, x, r, order):
        fam = self.family
        eye = np.eye(self.dim)
        if fam == "euclidean":
            xh = x / r[..., None]
            hess = (eye - xh[..., :, None] * xh[..., None, :]) / r[..., None, None]
            return r, xh, hess
        if fam == "ellipsoid":
            q = self._cache["Q"]
            qx = x @ q
            f = np.sqrt(np.sum(x * qx, axis=-1))
            df = qx / f[..., None]
            if order == 1:
                return f, df, None
            hess = (q - df[..., :, None] * df[..., None, :]) / f[..., None, None]
            return f, df, hess
        if fam == "perturbed_sphere":
            f = r.copy()
            df = x / r[..., None]
            hess = (eye - df[..., :, None] * df[..., None, :]) / r[..., None, None]
            outer = x[..., :, None] * x[..., None, :]
            for l, m, a in self.terms:
                poly = real_harmonic(l, m, self.dim)
                pv, pg, ph = poly.value(x), poly.gradient(x), poly.hessian(x)
                k = 1 - l
                g = r ** k
                dg = (k * r ** (k - 2))[..., None] * x
                d2g = (k * r ** (k - 2))[..., None, None] * eye + \
                    (k * (k - 2) * r ** (k - 4))[..., None, None] * outer
                f = f + a * pv * g
                df = df + a * (pg * g[..., None] + pv[..., None] * dg)
                hess = hess + a * (ph * g[..., None, None]
                                   + pg[..., :, None] * dg[..., None, :]
                                   + dg[..., :, None] * pg[..., None, :]
                                   + pv[..., None, None] * d2g)
            return f, df, hess
        # blended l^p through Phi = F^2 / 2
        lam, p = self.blend, self.p
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            nrm = np.sum(ax ** p, axis=-1) ** (1 / p)
            dn = np.sign(x) * ax ** (p - 1) * (nrm ** (1 - p))[..., None]
            d2n = (p - 1) * (_diag(ax ** (p - 2)) * (nrm ** (1 - p))[..., None, None]
                             - dn[..., :, None] * dn[..., None, :] / nrm[..., None, None])
        f = np.sqrt((1 - lam) * r * r + lam * nrm * nrm)
        dphi = (1 - lam) * x + lam * nrm[..., None] * dn
        d2phi = (1 - lam) * eye + lam * (dn[..., :, None] * dn[..., None, :]
                                         + nrm[..., None, None] * d2n)
        df = dphi / f[..., None]
        hess = (d2phi - df[..., :, None] * df[..., None, :]) / f[..., None, None]
        return f, df, hess

    # finite differences
    def _fd_gradient(self, x, r, rel):
        h = (rel * r)[..., None]
        out = np.empty(x.shape)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            xp, xm = x + h * e, x - h * e
            out[..., i] = (self._value(xp, np.linalg.norm(xp, axis=-1))
                           - self._value(xm, np.linalg.norm(xm, axis=-1))) / (2 * h[..., 0])
        return out

    def _fd_hessian(self, x, r, rel):
        h = (rel * r)[..., None]
        d = self.dim
        f0 = self._value(x, r)
        out = np.empty(x.shape + (d,))

        def val(y):
            return self._value(y, np.linalg.norm(y, axis=-1))

        eye = np.eye(d)
        for i in range(d):
            ei = h * eye[i]
            out[..., i, i] = (val(x + ei) - 2 * f0 + val(x - ei)) / h[..., 0] ** 2
            for j in range(i + 1, d):
                ej = h * eye[j]
                v = (val(x + ei + ej) - val(x + ei - ej) - val(x - ei + ej)
                     + val(x - ei - ej)) / (4 * h[..., 0] ** 2)
                out[..., i, j] = v
                out[..., j, i] = v
        return out


def _diag(v):
    out = np.zeros(v.shape + (v.shape[-1],))
    idx = np.arange(v.shape[-1])
    out[..., idx, idx] = v
    return out


class _ScaledNorm(MinkowskiNorm):
    """``c * F`` for a base norm F (used for homogeneity checks)."""

    def __init__(self, base, factor):
        object.__setattr__(self, "_base", base)
        object.__setattr__(self, "_factor", factor)
        super().__init__(base.family, base.dim, base.matrix, base.terms, base.p, base.blend,
                         base.derivative_mode, base.fd_step, {})

    def _value(self, x, r):
        return self._factor * self._base._value(x, r)

    def _analytic(self, x, r, order):
        f, df, hess = self._base._analytic(x, r, order)
        return self._factor * f, self._factor * df, self._factor * hess

    def describe(self):
        return f"{self._factor} * {self._base.describe()}"


# ---------------------------------------------------------------------------
# operations


def norm_eval(norm, x):
    """F(x), the 1-homogeneous extension, for nonzero ``x``."""
    return norm.value(x)


def norm_gradient(norm, x):
    return norm.gradient(x)


def norm_hessian(norm, x):
    return norm.hessian(x)


@dataclass(frozen=True)
class WulffSample:
    """Point of the Wulff shape with outer normal ``direction``.

    ``A_F`` is D^2F(x) restricted to the tangent frame ``frame`` at ``x``,
    i.e. the spherical Hessian of F plus F times the round metric.
    """

    direction: np.ndarray
    point: np.ndarray
    A_F: np.ndarray
    frame: np.ndarray


def wulff_point(norm, x):
    """Wulff-shape point ``F(x) x + grad^S F(x)`` and ``A_F`` at unit ``x``."""
    x = np.asarray(x, dtype=float)
    x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    _, df, hess = norm.derivatives(x)
    frame = tangent_frame(x)
    a = np.einsum("...ai,...ab,...bj->...ij", frame, hess, frame)
    return WulffSample(x, df, a, frame)


def anisotropy_matrices(norm, directions, frames):
    """``A_F`` at many directions in the given frames, shape (N, n, n)."""
    hess = norm.hessian(directions)
    return np.einsum("pai,pab,pbj->pij", frames, hess, frames)


# ---------------------------------------------------------------- dual norm


_COARSE = {}


def _coarse_directions(dim, count=2000):
    key = (dim, count)
    if key not in _COARSE:
        _COARSE[key] = sample_directions(dim, count)
    return _COARSE[key]


def sup_ratio(value, gradient, targets, hessian=None, start=None, tol=1e-10,
              max_iter=200, coarse_count=2000):
    """Maximize ``<x, xi> / G(x)`` over unit ``x`` for each row ``xi`` of ``targets``.

    ``G`` is a positive 1-homogeneous function given through ``value`` and
    ``gradient`` (and optionally ``hessian``) callables on arrays of vectors.
    Without ``hessian`` the Hessian of G is a central difference of
    ``gradient``.  Starts from the best point of a coarse quasi-uniform direction set (or
    from ``start``) and refines by projected ascent on the sphere: a Newton
    direction in the tangent plane when the reduced Hessian is negative
    definite, the curvature-scaled gradient otherwise, each followed by
    backtracking on the objective.  Converged when the tangential gradient is
    below ``tol * |xi|``.

    Returns ``(sup_value, maximizer)``.
    """
    xi = np.atleast_2d(np.asarray(targets, dtype=float))
    dim = xi.shape[-1]
    scale = np.linalg.norm(xi, axis=-1)
    if np.any(scale == 0):
        raise DomainError("dual norm evaluated at the zero vector")

    if start is None:
        cand = _coarse_directions(dim, coarse_count)
        gc = value(cand)
        x = np.empty_like(xi)
        for lo in range(0, xi.shape[0], 512):
            blk = xi[lo:lo + 512]
            ratio = (blk @ cand.T) / gc[None, :]
            x[lo:lo + 512] = cand[np.argmax(ratio, axis=1)]
    else:
        x = np.array(np.broadcast_to(start, xi.shape), dtype=float)
        x /= np.linalg.norm(x, axis=-1, keepdims=True)

    def objective(y, t):
        return np.einsum("...i,...i->...", y, t) / value(y)

    active = np.ones(xi.shape[0], dtype=bool)
    best = objective(x, xi)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        y, t = x[idx], xi[idx]
        g = value(y)
        dg = gradient(y)
        proj = np.einsum("...i,...i->...", y, t)
        grad = t / g[:, None] - proj[:, None] * dg / (g * g)[:, None]
        grad -= np.einsum("...i,...i->...", grad, y)[:, None] * y
        gnorm = np.linalg.norm(grad, axis=-1)
        done = gnorm < tol * scale[idx]
        active[idx[done]] = False
        keep = ~done
        if not np.any(keep):
            break
        idx, y, t, g, dg, proj, grad = (a[keep] for a in (idx, y, t, g, dg, proj, grad))
        step = grad.copy()
        # Newton direction in the tangent plane, curvature-scaled gradient otherwise
        frame = tangent_frame(y)
        d2g = hessian(y) if hessian is not None else _fd_jacobian(gradient, y)
        g2 = (g * g)[:, None, None]
        hq = (-(t[:, :, None] * dg[:, None, :] + dg[:, :, None] * t[:, None, :]) / g2
              - proj[:, None, None] * d2g / g2
              + 2 * proj[:, None, None] * dg[:, :, None] * dg[:, None, :] / (g2 * g[:, None, None]))
        hr = np.einsum("pai,pab,pbj->pij", frame, hq, frame)
        gr = np.einsum("pai,pa->pi", frame, grad)
        eig = np.linalg.eigvalsh(hr)
        newton_ok = eig.max(axis=-1) < 0
        if np.any(newton_ok):
            sol = np.linalg.solve(hr[newton_ok], -gr[newton_ok][..., None])[..., 0]
            step[newton_ok] = np.einsum("pai,pi->pa", frame[newton_ok], sol)
        # scale plain gradient steps by the curvature bound
        plain = ~newton_ok
        if np.any(plain):
            curv = np.maximum(np.abs(eig[plain]).max(axis=-1), 1e-12)
            step[plain] = grad[plain] / curv[:, None]
        f0 = objective(y, t)
        alpha = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        new = y.copy()
        for _ in range(60):
            trial = y[pending] + alpha[pending, None] * step[pending]
            trial /= np.linalg.norm(trial, axis=-1, keepdims=True)
            ft = objective(trial, t[pending])
            # accept round-off level ties so Newton steps near the optimum go through
            ok = ft >= f0[pending] - 4e-16 * np.abs(f0[pending])
            sel = np.nonzero(pending)[0]
            new[sel[ok]] = trial[ok]
            pending[sel[ok]] = False
            alpha[sel[~ok]] *= 0.5
            if not np.any(pending):
                break
        stalled = pending
        x[idx] = new
        best[idx] = np.maximum(best[idx], objective(new, t))
        if np.any(stalled):
            # no ascent possible at round-off level: accept as converged
            active[idx[stalled]] = False
    else:
        raise DualConvergenceError("sup-ratio optimizer did not converge", best=best)
    return objective(x, xi), x


def _fd_jacobian(func, y, rel=1e-5):
    """Symmetrized central-difference Jacobian of a vector field at rows of ``y``."""
    h = rel * np.linalg.norm(y, axis=-1)[:, None]
    cols = []
    for e in np.eye(y.shape[-1]):
        cols.append((func(y + h * e) - func(y - h * e)) / (2 * h))
    jac = np.stack(cols, axis=-1)
    return 0.5 * (jac + np.swapaxes(jac, -1, -2))


def dual_eval(norm, xi, method="auto", return_argmax=False, start=None, tol=1e-10):
    """Dual norm ``F^0(xi) = sup_x <x, xi> / F(x)``.

    ``method`` is ``"analytic"`` (euclidean / ellipsoid only), ``"numeric"``
    or ``"auto"``.  With ``return_argmax`` the unit maximizer ``x*`` is also
    returned; ``x* / F(x*)`` is the gradient of F^0 at ``xi``.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi2 = np.atleast_2d(xi)
    if np.any(np.linalg.norm(xi2, axis=-1) == 0):
        raise DomainError("dual norm evaluated at the zero vector")
    if method == "auto":
        method = "analytic" if norm.family in ANALYTIC_DUAL and not isinstance(norm, _ScaledNorm) \
            else "numeric"
    if method == "analytic":
        if norm.family == "euclidean" and not isinstance(norm, _ScaledNorm):
            val = np.linalg.norm(xi2, axis=-1)
            arg = xi2 / val[:, None]
        elif norm.family == "ellipsoid":
            qinv = norm._cache["Qinv"]
            if qinv is None:
                raise DomainError("ellipsoid matrix is singular")
            qx = xi2 @ qinv
            val = np.sqrt(np.einsum("pi,pi->p", xi2, qx))
            arg = qx / np.linalg.norm(qx, axis=-1, keepdims=True)
        else:
            raise DomainError(f"no analytic dual for {norm.describe()}")
    else:
        hess = norm.hessian
        val, arg = sup_ratio(norm.value, norm.gradient, xi2, hessian=hess, start=start, tol=tol)
    if single:
        val, arg = val[0], arg[0]
    return (val, arg) if return_argmax else val


def dual_gradient(norm, xi, method="auto"):
    """DF^0(xi) through the maximizer of the sup ratio (envelope theorem)."""
    _, arg = dual_eval(norm, xi, method=method, return_argmax=True)
    return arg / norm.value(arg)[..., None]


def bidual_eval(norm, x, method="auto", tol=1e-10):
    """``F^00(x) = sup_xi <x, xi> / F^0(xi)`` by the same sup-ratio oracle."""
    x = np.atleast_2d(np.asarray(x, dtype=float))

    def g0(y):
        return dual_eval(norm, y, method=method)

    def dg0(y):
        return dual_gradient(norm, y, method=method)

    val, _ = sup_ratio(g0, dg0, x, tol=tol, coarse_count=500)
    return val


# ------------------------------------------------------------------ validity


@dataclass
class NormValidityReport:
    min_AF_eigenvalue: float
    max_AF_eigenvalue: float
    homogeneity_residual: float
    euler_residual: float
    gradient_check_residual: float
    valid: bool
    sample_count: int
    reasons: list = field(default_factory=list)

    def as_dict(self):
        return {
            "min_AF_eigenvalue": self.min_AF_eigenvalue,
            "max_AF_eigenvalue": self.max_AF_eigenvalue,
            "homogeneity_residual": self.homogeneity_residual,
            "euler_residual": self.euler_residual,
            "gradient_check_residual": self.gradient_check_residual,
            "sample_count": self.sample_count,
            "valid": self.valid,
            "reasons": "; ".join(self.reasons) if self.reasons else "none",
        }


MIN_SAMPLES = 50


def validate_norm(norm, sample_count=1000, eig_margin=1e-8, residual_tol=1e-6):
    """Scan ``A_F`` and consistency residuals over quasi-uniform directions.

    The sample always contains the signed coordinate axes.  The gradient
    check compares ``norm.gradient`` with an independent central difference
    of ``norm.value`` (step ``1e-6 |x|``).  Never raises for bad parameters;
    problems are listed in ``reasons`` and make ``valid`` false.
    """
    if sample_count < MIN_SAMPLES:
        raise DomainError(f"sample_count must be at least {MIN_SAMPLES}")
    reasons = []
    if norm.family == "ellipsoid":
        m = norm.matrix
        if not np.allclose(m, m.T, atol=1e-14 * max(1.0, np.abs(m).max())):
            reasons.append("ellipsoid matrix is not symmetric")
        elif np.linalg.eigvalsh(m).min() <= 0:
            reasons.append("ellipsoid matrix is not positive definite")

    x = sample_directions(norm.dim, sample_count)
    with np.errstate(all="ignore"):
        f = norm.value(x)
        _, df, hess = norm.derivatives(x)
        frames = tangent_frame(x)
        a = np.einsum("pai,pab,pbj->pij", frames, hess, frames)
        sym = 0.5 * (a + np.swapaxes(a, -1, -2))
        finite = np.all(np.isfinite(sym), axis=(-2, -1))
        eig = np.full((x.shape[0], norm.n), np.nan)
        eig[finite] = np.linalg.eigvalsh(sym[finite])
        min_eig = float(np.nanmin(eig)) if np.any(finite) else float("nan")
        max_eig = float(np.nanmax(eig)) if np.any(finite) else float("nan")
        if not np.all(finite):
            reasons.append("A_F not finite at some sampled direction")

        homog = 0.0
        for lam in (0.5, 2.0, 10.0):
            homog = max(homog, float(np.nanmax(np.abs(norm.value(lam * x) - lam * f) / f)))
        euler = float(np.nanmax(np.abs(np.einsum("pi,pi->p", x, df) - f) / f))
        fd = norm._fd_gradient(x, np.ones(x.shape[0]), 1e-6)
        gcheck = float(np.nanmax(np.abs(fd - df)))

    if not np.all(f > 0):
        reasons.append("F is not positive on the sphere")
    if not min_eig > eig_margin:
        reasons.append(f"A_F not uniformly positive definite (min eigenvalue {min_eig:.3e})")
    for name, v in (("homogeneity", homog), ("Euler identity", euler),
                    ("gradient check", gcheck)):
        if not v <= residual_tol:
            reasons.append(f"{name} residual {v:.3e} above tolerance {residual_tol:.1e}")
    return NormValidityReport(min_eig, max_eig, homog, euler, gcheck, not reasons,
                              int(x.shape[0]), reasons)


def max_anisotropy_eigenvalue(norm, sample_count=2000):
    """Largest eigenvalue of ``A_F`` over a direction sample (for time-step control)."""
    x = sample_directions(norm.dim, sample_count)
    frames = tangent_frame(x)
    a = np.einsum("pai,pab,pbj->pij", frames, norm.hessian(x), frames)
    return float(np.linalg.eigvalsh(a).max())


@dataclass
class DualityReport:
    """Largest residuals of the duality identities over a direction sample.

    ``dual_of_gradient``: ``|F^0(DF(x)) - 1|``; ``gradient_inverse``:
    ``|DF^0(DF(x)) - x / F(x)|``; ``bidual``: ``|F^00(x) - F(x)| / F(x)``;
    ``analytic_vs_numeric``: ``|F^0_analytic - F^0_numeric| / F^0`` (NaN when
    the family has no closed-form dual).
    """

    sample_count: int
    dual_of_gradient: float
    gradient_inverse: float
    bidual: float
    analytic_vs_numeric: float

    def max_residual(self):
        vals = [self.dual_of_gradient, self.gradient_inverse, self.bidual]
        if not np.isnan(self.analytic_vs_numeric):
            vals.append(self.analytic_vs_numeric)
        return max(vals)

    def as_dict(self):
        return dict(self.__dict__)


def duality_check(norm, sample_count=1000):
    """Evaluate the duality identities on ``sample_count`` quasi-uniform directions."""
    if sample_count < MIN_SAMPLES:
        raise DomainError(f"sample_count must be at least {MIN_SAMPLES}")
    x = sample_directions(norm.dim, sample_count)
    f = norm.value(x)
    g = norm.gradient(x)
    r1 = float(np.max(np.abs(dual_eval(norm, g) - 1.0)))
    r2 = float(np.max(np.abs(dual_gradient(norm, g) - x / f[:, None])))
    r3 = float(np.max(np.abs(bidual_eval(norm, x) - f) / f))
    r4 = float("nan")
    if norm.family in ANALYTIC_DUAL and not isinstance(norm, _ScaledNorm):
        a = dual_eval(norm, x, method="analytic")
        b = dual_eval(norm, x, method="numeric")
        r4 = float(np.max(np.abs(a - b) / a))
    return DualityReport(int(x.shape[0]), r1, r2, r3, r4)
