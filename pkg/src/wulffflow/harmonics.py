"""Real spherical harmonics as homogeneous harmonic polynomials.

On S^2 we use orthonormal real harmonics without the Condon-Shortley phase::

    Y_l^0  = N_l0 P_l(cos t)
    Y_l^m  = sqrt(2) N_lm P_l^m(cos t) cos(m p)     (m > 0)
    Y_l^-m = sqrt(2) N_lm P_l^m(cos t) sin(m p)     (m > 0)

with N_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!), so that the integral of Y^2
over the unit sphere is 1.  On S^1 the "harmonics" are plain Fourier modes,
cos(k t) for order >= 0 and sin(k t) for order < 0, without normalization.

Each harmonic is stored as its solid extension, a homogeneous harmonic
polynomial P of degree l with P(x) = Y(x) on the unit sphere.  Exact
gradients and Hessians of P come from the polynomial representation.
"""

from functools import lru_cache
from math import factorial, pi, sqrt

import numpy as np
import sympy


class HarmonicPolynomial:
    """Homogeneous harmonic polynomial in ``dim`` variables.

    Parameters
    ----------
    degree : int
        Polynomial degree (harmonic degree l, or Fourier wavenumber k).
    order : int
        Harmonic order m with ``|m| <= degree``.  For ``dim == 2`` only the
        sign matters (cosine for ``order >= 0``, sine otherwise).
    dim : int
        Ambient dimension, 2 or 3.
    """

    def __init__(self, degree, order, dim=3):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if degree < 0:
            raise ValueError("degree must be non-negative")
        if dim == 3 and abs(order) > degree:
            raise ValueError(f"order {order} exceeds degree {degree}")
        self.degree = int(degree)
        self.order = int(order)
        self.dim = dim

        syms = sympy.symbols("x0:%d" % dim, real=True)
        expr = _solid_harmonic(self.degree, self.order, syms)
        poly = sympy.Poly(sympy.expand(expr), *syms)
        self._value = _compile(poly)
        self._grad = [_compile(poly.diff(s)) for s in syms]
        self._hess = [[_compile(poly.diff(a).diff(b)) for b in syms] for a in syms]

    def __repr__(self):
        return f"HarmonicPolynomial(degree={self.degree}, order={self.order}, dim={self.dim})"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return _evaluate(self._value, x, self.degree)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([_evaluate(t, x, self.degree) for t in self._grad], axis=-1)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        rows = [np.stack([_evaluate(t, x, self.degree) for t in row], axis=-1)
                for row in self._hess]
        return np.stack(rows, axis=-2)


def _solid_harmonic(degree, order, syms):
    if len(syms) == 2:
        x, y = syms
        z = sympy.expand((x + sympy.I * y) ** degree)
        return sympy.re(z) if order >= 0 else sympy.im(z)

    x, y, z = syms
    m = abs(order)
    t = sympy.Symbol("t")
    dleg = sympy.Poly(sympy.diff(sympy.legendre(degree, t), t, m), t)
    r2 = x * x + y * y + z * z
    radial = 0
    for (k,), c in dleg.terms():
        # degree - m - k is even for every nonzero coefficient
        radial += c * z ** k * r2 ** ((degree - m - k) // 2)
    planar = sympy.expand((x + sympy.I * y) ** m)
    planar = sympy.re(planar) if order >= 0 else sympy.im(planar)
    norm = sqrt((2 * degree + 1) / (4 * pi) * factorial(degree - m) / factorial(degree + m))
    if m:
        norm *= sqrt(2.0)
    return norm * radial * planar


def _compile(poly):
    terms = [(tuple(int(e) for e in mon), float(c)) for mon, c in poly.terms() if c != 0]
    return terms


def _evaluate(terms, x, degree):
    shape = x.shape[:-1]
    if not terms:
        return np.zeros(shape)
    powers = [[np.ones(shape)] for _ in range(x.shape[-1])]
    for a in range(x.shape[-1]):
        xa = x[..., a]
        for _ in range(degree):
            powers[a].append(powers[a][-1] * xa)
    out = np.zeros(shape)
    for mon, c in terms:
        term = c
        for a, e in enumerate(mon):
            if e:
                term = term * powers[a][e]
        out = out + term
    return out


@lru_cache(maxsize=None)
def real_harmonic(degree, order, dim=3):
    """Cached :class:`HarmonicPolynomial` for ``(degree, order, dim)``."""
    return HarmonicPolynomial(degree, order, dim)


def harmonic_series(terms, directions):
    """Evaluate ``sum(amp * Y_{l,m}(x))`` at unit ``directions``.

    Parameters
    ----------
    terms : iterable of (degree, order, amplitude)
    directions : ndarray, shape (..., dim)
    """
    directions = np.asarray(directions, dtype=float)
    out = np.zeros(directions.shape[:-1])
    for degree, order, amp in terms:
        out = out + amp * real_harmonic(int(degree), int(order), directions.shape[-1]).value(directions)
    return out
