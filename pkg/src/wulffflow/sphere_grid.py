"""Structured grids on S^1 and S^2 with 4th-order tangential calculus.

Node layout
-----------
``n == 1``: ``N`` equally spaced angles ``t_i = 2 pi i / N``.

``n == 2``: equiangular latitude-longitude grid.  Colatitudes are
``t_j = j h`` with ``h = pi / (N_t + 1)``; ``j = 1 .. N_t`` are the interior
rings and ``j = 0, N_t + 1`` the two poles.  Longitudes ``p_k = 2 pi k / N_p``
with ``N_p = 2 N_t``.  Flat node order is: north pole, ring 1 (all
longitudes), ..., ring N_t, south pole.

Tangent frames
--------------
Away from the poles the orthonormal frame is ``(e_t, e_p)``, the normalized
coordinate vectors of spherical coordinates.  At the north pole it is
``((1,0,0), (0,1,0))``, at the south pole ``((1,0,0), (0,-1,0))``; both are
right-handed with respect to the outward normal.  On S^1 the frame is
``(-sin t, cos t)``.

Pole closure
------------
Colatitude stencils that cross a pole read ghost rows, i.e. the adjacent
rings shifted by half a revolution in longitude, together with the shared
pole value.  The pole itself is an ordinary unknown: its gradient and
Hessian are least-squares fits (Fourier modes 1 and 0/2) of the 4th-order
directional derivatives along all meridian great circles through it.

Quadrature
----------
Clenshaw-Curtis weights in ``cos t`` (the colatitudes are exactly the
Chebyshev extreme points) times the trapezoidal rule in longitude.  Weights
sum to 4 pi up to round-off and the rule is spectrally accurate for smooth
integrands.  Sums are evaluated with :func:`math.fsum`, which is correctly
rounded and therefore independent of summation order.
"""

from dataclasses import dataclass, field
from math import fsum, pi

import numba
import numpy as np

from .errors import ConfigError

MIN_RESOLUTION = {1: 8, 2: 16}


def tangent_frame(x):
    """Orthonormal tangent frame at unit vectors ``x``.

    Returns an array of shape ``(..., n+1, n)`` whose columns span ``x^perp``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] == 2:
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)[..., None]
    if x.shape[-1] != 3:
        raise ValueError("tangent_frame supports R^2 and R^3 only")
    rxy = np.hypot(x[..., 0], x[..., 1])
    theta = np.arctan2(rxy, x[..., 2])
    phi = np.arctan2(x[..., 1], x[..., 0])
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    e1 = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e2 = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    polar = rxy < 1e-12
    if np.any(polar):
        north = polar & (x[..., 2] > 0)
        south = polar & (x[..., 2] < 0)
        e1[north] = (1.0, 0.0, 0.0)
        e2[north] = (0.0, 1.0, 0.0)
        e1[south] = (1.0, 0.0, 0.0)
        e2[south] = (0.0, -1.0, 0.0)
    return np.stack([e1, e2], axis=-1)


def sample_directions(dim, count, include_axes=True):
    """Deterministic quasi-uniform unit vectors in R^dim.

    Fibonacci lattice on S^2, equally spaced angles (with a half-step offset)
    on S^1.  With ``include_axes`` the ``2 dim`` signed coordinate axes are
    appended.
    """
    if dim == 2:
        t = 2 * pi * (np.arange(count) + 0.5) / count
        pts = np.stack([np.cos(t), np.sin(t)], axis=-1)
    elif dim == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        r = np.sqrt(1 - z * z)
        golden = pi * (3 - np.sqrt(5.0))
        p = golden * i
        pts = np.stack([r * np.cos(p), r * np.sin(p), z], axis=-1)
    else:
        raise ValueError("dim must be 2 or 3")
    if include_axes:
        eye = np.eye(dim)
        pts = np.concatenate([pts, eye, -eye])
    return pts


def clenshaw_curtis_weights(k):
    """Clenshaw-Curtis weights on ``cos(j pi / k)``, ``j = 0..k``, for [-1, 1]."""
    theta = pi * np.arange(k + 1) / k
    w = np.zeros(k + 1)
    ti = theta[1:k]
    v = np.ones(k - 1)
    if k % 2 == 0:
        w[0] = w[k] = 1.0 / (k * k - 1)
        for j in range(1, k // 2):
            v -= 2 * np.cos(2 * j * ti) / (4 * j * j - 1)
        v -= np.cos(k * ti) / (k * k - 1)
    else:
        w[0] = w[k] = 1.0 / (k * k)
        for j in range(1, (k - 1) // 2 + 1):
            v -= 2 * np.cos(2 * j * ti) / (4 * j * j - 1)
    w[1:k] = 2 * v / k
    return w


# 4th-order central stencils
def _d1_periodic(a, step, axis=-1):
    return (np.roll(a, 2, axis) - 8 * np.roll(a, 1, axis)
            + 8 * np.roll(a, -1, axis) - np.roll(a, -2, axis)) / (12 * step)


def _d2_periodic(a, step, axis=-1):
    return (-np.roll(a, 2, axis) + 16 * np.roll(a, 1, axis) - 30 * a
            + 16 * np.roll(a, -1, axis) - np.roll(a, -2, axis)) / (12 * step * step)


def _fd_symbol(k):
    """Eigenvalue (times step^2) of the 4th-order second-difference for wavenumber k."""
    return 2.5 - (8.0 / 3.0) * np.cos(k) + np.cos(2 * k) / 6.0


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Discretization of S^n (n = 1 or 2); immutable after construction.

    Attributes
    ----------
    n : int
    resolution : int
        ``N`` for n = 1, ``N_t`` (interior latitudes) for n = 2.
    directions : ndarray (N_nodes, n+1)
    weights : ndarray (N_nodes,)
    frames : ndarray (N_nodes, n+1, n)
    theta, phi : ndarray (N_nodes,)
        Angle of each node (``phi`` is zero on S^1 and at the poles).
    """

    n: int
    resolution: int
    directions: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    h: float
    dphi: float
    _aux: dict = field(default_factory=dict, repr=False)

    @property
    def size(self):
        return self.directions.shape[0]

    @property
    def n_theta(self):
        return self.resolution if self.n == 2 else None

    @property
    def n_phi(self):
        return 2 * self.resolution if self.n == 2 else None

    def check_field(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.size:
            raise ValueError(f"field has {f.shape[-1]} values, grid has {self.size} nodes")
        return f

    # ---------------------------------------------------------------- calculus
    def derivatives(self, f):
        """Tangential gradient and covariant Hessian of ``f`` in the node frames.

        ``f`` may carry leading batch dimensions.  Returns ``(grad, hess)`` with
        shapes ``(..., N_nodes, n)`` and ``(..., N_nodes, n, n)``.
        """
        f = self.check_field(f)
        batch = f.shape[:-1]
        f2 = f.reshape(-1, self.size)
        if self.n == 1:
            g = _d1_periodic(f2, self.h)[..., None]
            hs = _d2_periodic(f2, self.h)[..., None, None]
        else:
            g, hs = self._derivatives_s2(f2)
        return g.reshape(batch + g.shape[1:]), hs.reshape(batch + hs.shape[1:])

    def grad(self, f):
        return self.derivatives(f)[0]

    def hess(self, f):
        return self.derivatives(f)[1]

    def laplacian(self, f):
        return np.trace(self.hess(f), axis1=-2, axis2=-1)

    def _derivatives_s2(self, f):
        b = f.shape[0]
        grad = np.empty((b, self.size, 2))
        hess = np.empty((b, self.size, 2, 2))
        aux = self._aux
        _s2_derivatives_kernel(np.ascontiguousarray(f), self.resolution, self.h, self.dphi,
                               aux["sin_ring"][:, 0], aux["cot_ring"][:, 0],
                               aux["north_gpinv"], aux["north_hpinv"],
                               aux["south_gpinv"], aux["south_hpinv"], grad, hess)
        return grad, hess

    # -------------------------------------------------------------- quadrature
    def integrate(self, f):
        """Quadrature of ``f`` over S^n (correctly rounded weighted sum)."""
        f = self.check_field(f)
        prod = np.asarray(f * self.weights)
        if prod.ndim == 1:
            return fsum(prod.tolist())
        return np.array([fsum(row.tolist()) for row in prod.reshape(-1, self.size)]).reshape(prod.shape[:-1])

    # ------------------------------------------------------------ polar filter
    def polar_filter(self, f):
        """Remove longitudinal modes whose 4th-order second-difference eigenvalue
        on a ring exceeds the equatorial Nyquist value.

        Identity on S^1 and at rings near the equator.  Pole values are untouched.
        """
        if self.n == 1:
            return f
        f = self.check_field(f)
        nt, npf = self.resolution, 2 * self.resolution
        out = np.array(f, dtype=float, copy=True)
        rings = out[..., 1:-1].reshape(f.shape[:-1] + (nt, npf))
        rows = self._aux["filtered_rings"]
        if rows.size == 0:
            return out
        modes = np.fft.rfft(rings[..., rows, :], axis=-1)
        modes *= self._aux["filter_mask"]
        rings[..., rows, :] = np.fft.irfft(modes, n=npf, axis=-1)
        out[..., 1:-1] = rings.reshape(f.shape[:-1] + (nt * npf,))
        return out

    def cfl_spacing(self, filtered=True):
        """Effective angular spacing ``delta`` for the explicit diffusion limit.

        ``1/delta^2`` is the sum of ``1/step^2`` over the coordinate directions,
        using the equatorial longitude step when the polar filter is active.
        """
        if self.n == 1:
            return self.h
        if filtered:
            return 1.0 / np.sqrt(1.0 / self.h ** 2 + 1.0 / self.dphi ** 2)
        s = self._aux["sin_ring"].min()
        return 1.0 / np.sqrt(1.0 / self.h ** 2 + 1.0 / (s * self.dphi) ** 2)


def build_grid(n, resolution):
    """Build the grid on S^n.

    Parameters
    ----------
    n : int
        1 (circle) or 2 (two-sphere).
    resolution : int
        Node count ``N`` on S^1, interior latitude count ``N_t`` on S^2
        (the longitude count is ``2 N_t``).
    """
    if n not in (1, 2):
        raise ConfigError(f"unsupported dimension n={n} (only 1 and 2)", key="dimension")
    resolution = int(resolution)
    if resolution < MIN_RESOLUTION[n]:
        raise ConfigError(f"resolution {resolution} below minimum {MIN_RESOLUTION[n]}",
                          key="resolution")
    if n == 1:
        t = 2 * pi * np.arange(resolution) / resolution
        dirs = np.stack([np.cos(t), np.sin(t)], axis=-1)
        w = np.full(resolution, 2 * pi / resolution)
        h = 2 * pi / resolution
        return SphereGrid(1, resolution, dirs, w, tangent_frame(dirs), t, np.zeros_like(t), h, h)

    nt, npf = resolution, 2 * resolution
    k = nt + 1
    h = pi / k
    dp = 2 * pi / npf
    ring_t = h * np.arange(1, nt + 1)
    p = dp * np.arange(npf)
    tt, pp = np.meshgrid(ring_t, p, indexing="ij")
    theta = np.concatenate([[0.0], tt.ravel(), [pi]])
    phi = np.concatenate([[0.0], pp.ravel(), [0.0]])
    st = np.sin(theta)
    dirs = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
    dirs[0] = (0.0, 0.0, 1.0)
    dirs[-1] = (0.0, 0.0, -1.0)
    frames = tangent_frame(dirs)

    cc = clenshaw_curtis_weights(k)
    w = np.empty(theta.size)
    w[0] = 2 * pi * cc[0]
    w[-1] = 2 * pi * cc[-1]
    w[1:-1] = np.repeat(cc[1:k] * dp, npf)

    aux = {
        "sin_ring": np.sin(ring_t)[:, None],
        "cot_ring": (np.cos(ring_t) / np.sin(ring_t))[:, None],
    }
    cp, sp = np.cos(p), np.sin(p)
    for key, c2 in (("north", sp), ("south", -sp)):
        dirs_c = np.stack([cp, c2], axis=-1)
        aux[key + "_gpinv"] = np.linalg.pinv(dirs_c)
        design = np.stack([cp * cp, 2 * cp * c2, c2 * c2], axis=-1)
        aux[key + "_hpinv"] = np.linalg.pinv(design)

    modes = np.arange(npf // 2 + 1)
    sym = _fd_symbol(modes * dp)
    limit = _fd_symbol(np.pi) * np.sin(ring_t) ** 2
    mask = sym[None, :] <= limit[:, None] * (1 + 1e-12)
    rows = np.nonzero(~mask.all(axis=1))[0]
    aux["filtered_rings"] = rows
    aux["filter_mask"] = mask[rows].astype(float)
    return SphereGrid(2, nt, dirs, w, frames, theta, phi, h, dp, aux)


def grad_s(grid, f):
    """Tangential gradient of a nodal field, components in the node frames."""
    return grid.grad(f)


def hess_s(grid, f):
    """Covariant Hessian of a nodal field, components in the node frames."""
    return grid.hess(f)


def integrate(grid, f):
    """Quadrature of a nodal field over S^n."""
    return grid.integrate(f)


def to_ambient(grid, components):
    """Map frame components ``(..., N, n)`` to ambient tangent vectors ``(..., N, n+1)``."""
    return np.einsum("pai,...pi->...pa", grid.frames, components)


@numba.njit(cache=True, inline="always")
def _wrap(k, m):
    # k lies in [-m, 2m)
    if k < 0:
        return k + m
    if k >= m:
        return k - m
    return k


@numba.njit(cache=True, error_model="numpy")
def _s2_derivatives_kernel(f, nt, h, dp, sin_ring, cot_ring, gpn, hpn, gps, hps, grad, hess):
    """Fill gradient and covariant Hessian of each row of ``f`` (see SphereGrid).

    Ring ``q`` outside ``0..nt-1`` is read through the pole: ``q = -1`` and
    ``q = nt`` are the poles, ``q = -2`` and ``q = nt + 1`` the first and last
    rings shifted by half a revolution.
    """
    npf = 2 * nt
    half = nt
    c1 = 1.0 / (12.0 * h)
    c2 = 1.0 / (12.0 * h * h)
    p1 = 1.0 / (12.0 * dp)
    p2 = 1.0 / (12.0 * dp * dp)
    nodes = nt * npf + 2
    ft = np.empty((nt, npf))
    col = np.empty(5)
    for b in range(f.shape[0]):
        fb = f[b]
        north = fb[0]
        south = fb[nodes - 1]
        for j in range(nt):
            for k in range(npf):
                for o in range(5):
                    q = j + o - 2
                    if q == -1:
                        col[o] = north
                    elif q == nt:
                        col[o] = south
                    elif q == -2:
                        col[o] = fb[1 + _wrap(k + half, npf)]
                    elif q == nt + 1:
                        col[o] = fb[1 + (nt - 1) * npf + _wrap(k + half, npf)]
                    else:
                        col[o] = fb[1 + q * npf + k]
                ft[j, k] = (col[0] - 8.0 * col[1] + 8.0 * col[3] - col[4]) * c1
                ftt = (-col[0] + 16.0 * col[1] - 30.0 * col[2] + 16.0 * col[3] - col[4]) * c2
                base = 1 + j * npf
                km2 = base + _wrap(k - 2, npf)
                km1 = base + _wrap(k - 1, npf)
                kp1 = base + _wrap(k + 1, npf)
                kp2 = base + _wrap(k + 2, npf)
                fp = (fb[km2] - 8.0 * fb[km1] + 8.0 * fb[kp1] - fb[kp2]) * p1
                fpp = (-fb[km2] + 16.0 * fb[km1] - 30.0 * col[2] + 16.0 * fb[kp1] - fb[kp2]) * p2
                node = base + k
                s = sin_ring[j]
                grad[b, node, 0] = ft[j, k]
                grad[b, node, 1] = fp / s
                hess[b, node, 0, 0] = ftt
                hess[b, node, 1, 1] = fpp / (s * s) + cot_ring[j] * ft[j, k]
                # store fp temporarily in the off-diagonal slot
                hess[b, node, 0, 1] = fp
        for j in range(nt):
            s = sin_ring[j]
            for k in range(npf):
                node = 1 + j * npf + k
                ftp = (ft[j, _wrap(k - 2, npf)] - 8.0 * ft[j, _wrap(k - 1, npf)]
                       + 8.0 * ft[j, _wrap(k + 1, npf)] - ft[j, _wrap(k + 2, npf)]) * p1
                off = (ftp - cot_ring[j] * hess[b, node, 0, 1]) / s
                hess[b, node, 0, 1] = off
                hess[b, node, 1, 0] = off
        # poles: least-squares fit of meridian derivatives
        for side in range(2):
            if side == 0:
                pole, near, nxt, idx, gp, hp = north, 0, 1, 0, gpn, hpn
            else:
                pole, near, nxt, idx, gp, hp = south, nt - 1, nt - 2, nodes - 1, gps, hps
            g0 = 0.0
            g1 = 0.0
            h0 = 0.0
            h1 = 0.0
            h2 = 0.0
            for k in range(npf):
                ks = _wrap(k + half, npf)
                m2 = fb[1 + nxt * npf + ks]
                m1 = fb[1 + near * npf + ks]
                a1 = fb[1 + near * npf + k]
                a2 = fb[1 + nxt * npf + k]
                d1 = (m2 - 8.0 * m1 + 8.0 * a1 - a2) * c1
                d2 = (-m2 + 16.0 * m1 - 30.0 * pole + 16.0 * a1 - a2) * c2
                g0 += gp[0, k] * d1
                g1 += gp[1, k] * d1
                h0 += hp[0, k] * d2
                h1 += hp[1, k] * d2
                h2 += hp[2, k] * d2
            grad[b, idx, 0] = g0
            grad[b, idx, 1] = g1
            hess[b, idx, 0, 0] = h0
            hess[b, idx, 0, 1] = h1
            hess[b, idx, 1, 0] = h1
            hess[b, idx, 1, 1] = h2
