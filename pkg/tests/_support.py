"""Shared builders for the test suite."""

import numpy as np

from wulffflow import MinkowskiNorm, RadialGraph, dual_eval
from wulffflow.harmonics import harmonic_series

ELLIPSOID_DIAG = (1.0, 1.3, 1.7)


def ellipsoid_norm(diag=ELLIPSOID_DIAG):
    return MinkowskiNorm.ellipsoid(np.diag(diag))


def sample_norms():
    """One valid representative of every norm family on R^3."""
    return {
        "euclidean": MinkowskiNorm.euclidean(),
        "ellipsoid": ellipsoid_norm(),
        "perturbed": MinkowskiNorm.perturbed_sphere([(2, 0, 0.08), (3, 1, 0.04)]),
        "blended": MinkowskiNorm.blended_lp(4.0, 0.5),
    }


def wulff_graph(grid, norm, scale=1.0):
    """The rescaled Wulff shape ``scale * W`` as the radial graph ``scale / F^0``."""
    return RadialGraph.from_rho(grid, scale / dual_eval(norm, grid.directions))


def harmonic_graph(grid, terms, base=1.0):
    """``rho = base + sum amplitude * Y``."""
    return RadialGraph.from_rho(grid, base + harmonic_series(terms, grid.directions))


def random_terms(rng, max_degree=4, count=4, amplitude=0.1, dim=3):
    """Random low-degree harmonic terms with total amplitude at most ``amplitude``."""
    terms = []
    for _ in range(count):
        l = int(rng.integers(1, max_degree + 1))
        m = int(rng.integers(-l, l + 1)) if dim == 3 else int(rng.choice([-1, 1]))
        terms.append((l, m, float(rng.uniform(-1, 1))))
    scale = amplitude / sum(abs(a) for _, _, a in terms)
    return [(l, m, a * scale) for l, m, a in terms]


def translated_wulff_rho(directions, q_inv, center, lam):
    """Radial function of ``center + lam * W`` for an ellipsoid norm with ``Q^-1``.

    The Wulff body is ``{y : y^T Q^-1 y <= 1}``; the ray ``rho x`` meets the
    translated boundary where ``(rho x - c)^T Q^-1 (rho x - c) = lam^2``.
    """
    a = np.einsum("pi,ij,pj->p", directions, q_inv, directions)
    b = directions @ (q_inv @ center)
    c = center @ q_inv @ center - lam ** 2
    return (b + np.sqrt(b * b - a * c)) / a


# one summary line per acceptance criterion, printed at the end of the session
ACCEPTANCE = {}


def begin(number):
    """Mark an acceptance criterion as started (it reads as failed until it finishes)."""
    ACCEPTANCE[number] = f"criterion {number}: FAIL  did not complete"


def verdict(number, ok, detail):
    """Store the pass/fail line of an acceptance criterion and return ``ok``."""
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok
