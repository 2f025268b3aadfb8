import math

import numpy as np
import pytest

from wulffflow.harmonics import HarmonicPolynomial, harmonic_series, real_harmonic
from wulffflow.sphere_grid import sample_directions


def test_y20_at_north_pole_matches_polynomial_formula():
    # Y_2^0 = sqrt(5 / (16 pi)) (3 z^2 - 1)
    y = real_harmonic(2, 0).value(np.array([0.0, 0.0, 1.0]))
    assert y == pytest.approx(math.sqrt(5 / (16 * math.pi)) * 2, rel=1e-14)


def test_real_harmonics_are_orthonormal(grid32):
    labels = [(l, m) for l in range(4) for m in range(-l, l + 1)]
    vals = np.array([real_harmonic(l, m).value(grid32.directions) for l, m in labels])
    gram = np.array([[grid32.integrate(a * b) for b in vals] for a in vals])
    assert np.max(np.abs(gram - np.eye(len(labels)))) < 1e-12


@pytest.mark.parametrize("degree,order", [(1, 0), (2, -1), (3, 2), (4, -4), (5, 3)])
def test_solid_harmonics_are_harmonic_and_homogeneous(degree, order, rng):
    p = real_harmonic(degree, order)
    x = rng.normal(size=(20, 3))
    assert np.max(np.abs(np.trace(p.hessian(x), axis1=1, axis2=2))) < 1e-10
    np.testing.assert_allclose(p.value(2.5 * x), 2.5 ** degree * p.value(x), rtol=1e-12,
                               atol=1e-12)
    # Euler identity for homogeneous polynomials
    np.testing.assert_allclose(np.einsum("pi,pi->p", x, p.gradient(x)), degree * p.value(x),
                               rtol=1e-11, atol=1e-11)


def test_derivatives_match_central_differences(rng):
    p = real_harmonic(3, -2)
    x = rng.normal(size=(5, 3))
    h = 1e-6
    fd = np.stack([(p.value(x + h * e) - p.value(x - h * e)) / (2 * h) for e in np.eye(3)], -1)
    np.testing.assert_allclose(p.gradient(x), fd, atol=1e-8)
    fdh = np.stack([(p.gradient(x + h * e) - p.gradient(x - h * e)) / (2 * h) for e in np.eye(3)],
                   -1)
    np.testing.assert_allclose(p.hessian(x), fdh, atol=1e-7)


def test_circle_harmonics_are_fourier_modes():
    t = np.linspace(0, 2 * np.pi, 17)
    x = np.stack([np.cos(t), np.sin(t)], -1)
    np.testing.assert_allclose(real_harmonic(3, 1, 2).value(x), np.cos(3 * t), atol=1e-14)
    np.testing.assert_allclose(real_harmonic(3, -1, 2).value(x), np.sin(3 * t), atol=1e-14)


def test_series_sums_terms():
    x = sample_directions(3, 60)
    terms = [(1, 0, 0.3), (2, 2, -0.1)]
    expect = 0.3 * real_harmonic(1, 0).value(x) - 0.1 * real_harmonic(2, 2).value(x)
    np.testing.assert_allclose(harmonic_series(terms, x), expect, rtol=1e-15)


def test_invalid_order_rejected():
    with pytest.raises(ValueError):
        HarmonicPolynomial(2, 3)
