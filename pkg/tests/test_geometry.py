import math

import numpy as np
import pytest

from wulffflow import (DegenerateNodeError, DomainError, MinkowskiNorm, RadialGraph,
                       anisotropic_H_graph_formula, build_grid, check_admissible,
                       compute_fields, dual_eval)
from wulffflow.geometry import sym_eigvals

from _support import harmonic_graph, wulff_graph

SMOOTH_TERMS = [(2, 0, 0.15), (3, -1, 0.08), (1, 1, 0.1)]


def sphere(grid, r=1.0):
    return RadialGraph.from_rho(grid, np.full(grid.size, r))


def test_unit_sphere_euclidean(grid32):
    # the trace route differentiates the components of X, so S and H_F carry
    # the O(h^4) error of the stencils; nu, u and dmu are exact
    f = compute_fields(sphere(grid32), MinkowskiNorm.euclidean())
    np.testing.assert_allclose(f.nu, grid32.directions, atol=1e-15)
    np.testing.assert_allclose(f.u, 1.0, rtol=1e-15)
    np.testing.assert_allclose(f.u_hat, 1.0, rtol=1e-15)
    np.testing.assert_allclose(f.dmu, grid32.weights, rtol=1e-15)
    np.testing.assert_allclose(f.S, np.broadcast_to(np.eye(2), f.S.shape), atol=1e-5)
    np.testing.assert_allclose(f.H_F, 2.0, atol=1e-5)
    np.testing.assert_allclose(f.kappa_F, 1.0, atol=1e-5)


@pytest.mark.parametrize("r", [0.5, 3.0])
def test_sphere_of_radius_r(grid32, r):
    norm = MinkowskiNorm.euclidean()
    f = compute_fields(sphere(grid32, r), norm)
    np.testing.assert_allclose(f.H_F, 2.0 / r, rtol=1e-5)
    # constant gamma has exactly vanishing derivatives in the graph formula
    np.testing.assert_allclose(anisotropic_H_graph_formula(sphere(grid32, r), norm), 2.0 / r,
                               rtol=1e-11)


def test_sphere_curvature_error_is_fourth_order():
    errs = [np.abs(compute_fields(sphere(build_grid(2, nt)), MinkowskiNorm.euclidean()).H_F - 2)
            .max() for nt in (16, 32, 64)]
    assert errs[0] / errs[1] >= 12 and errs[1] / errs[2] >= 12


def test_circle_of_radius_r(circle256):
    f = compute_fields(sphere(circle256, 2.0), MinkowskiNorm.euclidean(dim=2))
    np.testing.assert_allclose(f.H_F, 0.5, rtol=1e-7)
    assert f.kappa_F.shape == (circle256.size, 1)


@pytest.mark.parametrize("name", ["euclidean", "ellipsoid", "perturbed", "blended"])
def test_wulff_shape_has_unit_anisotropic_curvatures(norms, name):
    errs = []
    for nt in (16, 32, 64):
        g = build_grid(2, nt)
        f = compute_fields(wulff_graph(g, norms[name]), norms[name])
        errs.append(max(np.abs(f.H_F - 2).max(), np.abs(f.kappa_F - 1).max()))
        np.testing.assert_allclose(f.u_hat, 1.0, atol=20 * errs[-1])
    # the blended l^4 shape has the strongest curvature variation and is the
    # slowest to reach the asymptotic regime (ratio about 7 from 32 to 64)
    assert errs[-1] < 2e-3
    assert errs[1] / errs[2] > 6


def test_wulff_curve_has_unit_anisotropic_curvature(circle256):
    norm = MinkowskiNorm.ellipsoid(np.diag([1.0, 1.8]))
    f = compute_fields(wulff_graph(circle256, norm), norm)
    np.testing.assert_allclose(f.H_F, 1.0, atol=1e-5)


@pytest.mark.parametrize("name", ["euclidean", "ellipsoid", "perturbed", "blended"])
def test_graph_formula_agrees_with_trace_route(norms, name):
    diffs = []
    for nt in (16, 32, 64):
        g = build_grid(2, nt)
        graph = harmonic_graph(g, SMOOTH_TERMS)
        a = compute_fields(graph, norms[name]).H_F
        b = anisotropic_H_graph_formula(graph, norms[name])
        diffs.append(math.sqrt(g.integrate((a - b) ** 2)))
    assert diffs[0] / diffs[1] >= 12 and diffs[1] / diffs[2] >= 12


def test_graph_formula_on_wulff_shape(grid32, ellipsoid):
    h = anisotropic_H_graph_formula(wulff_graph(grid32, ellipsoid), ellipsoid)
    np.testing.assert_allclose(h, 2.0, atol=5e-3)


def test_node_invariants(grid32, norms):
    graph = harmonic_graph(grid32, SMOOTH_TERMS)
    for norm in norms.values():
        f = compute_fields(graph, norm)
        np.testing.assert_allclose(np.linalg.norm(f.nu, axis=1), 1.0, atol=1e-14)
        np.testing.assert_allclose(f.nu_F, norm.gradient(f.nu), atol=0)
        np.testing.assert_allclose(dual_eval(norm, f.nu_F), 1.0, atol=1e-9)
        np.testing.assert_allclose(f.H_F, f.kappa_F.sum(axis=1), atol=1e-12)
        np.testing.assert_allclose(f.u_hat * f.F_nu, f.u, rtol=1e-15)
        np.testing.assert_allclose(f.dmu_F, f.F_nu * f.dmu, rtol=1e-15)
        np.testing.assert_allclose(f.sigma2_F, f.kappa_F[:, 0] * f.kappa_F[:, 1], rtol=1e-15)
        # symmetrized eigenvalues against the non-symmetric product M S
        eig = np.sort(np.linalg.eigvals(f.weingarten_F).real, axis=1)
        np.testing.assert_allclose(f.kappa_F, eig, atol=1e-10)


def test_normal_orthogonality_is_fourth_order():
    errs = []
    for nt in (16, 32, 64):
        g = build_grid(2, nt)
        f = compute_fields(harmonic_graph(g, SMOOTH_TERMS), MinkowskiNorm.euclidean())
        dots = np.einsum("pai,pa->pi", f.tangents, f.nu)
        errs.append(math.sqrt(g.integrate(np.sum(dots ** 2, axis=1))))
    assert errs[0] / errs[1] >= 12 and errs[1] / errs[2] >= 12


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_rescaling_laws(grid32, ellipsoid, lam):
    graph = harmonic_graph(grid32, SMOOTH_TERMS)
    f1 = compute_fields(graph, ellipsoid)
    f2 = compute_fields(graph.scaled(lam), ellipsoid)
    np.testing.assert_allclose(f2.kappa_F, f1.kappa_F / lam, rtol=1e-10)
    np.testing.assert_allclose(f2.u_hat, lam * f1.u_hat, rtol=1e-12)
    np.testing.assert_allclose(f2.H_F * f2.u_hat, f1.H_F * f1.u_hat, rtol=1e-10)


def _spheroid_graph(grid, a, c):
    x = grid.directions
    rho = 1.0 / np.sqrt((x[:, 0] ** 2 + x[:, 1] ** 2) / a ** 2 + x[:, 2] ** 2 / c ** 2)
    return RadialGraph.from_rho(grid, rho)


def test_euclidean_curvatures_of_spheroid_at_axis_points():
    a, c = 1.0, 1.6
    g = build_grid(2, 64)
    f = compute_fields(_spheroid_graph(g, a, c), MinkowskiNorm.euclidean())
    pole = 0
    np.testing.assert_allclose(f.kappa_F[pole], [c / a ** 2] * 2, rtol=5e-5)
    # equator point on the x axis: meridian curvature a / c^2, parallel curvature 1 / a
    eq = int(np.argmin(np.linalg.norm(g.directions - [1.0, 0.0, 0.0], axis=1)))
    assert np.allclose(g.directions[eq], [1, 0, 0], atol=0.03)
    # the closest node lies slightly off the equator when N_t is even; compare with the
    # exact principal curvatures of the spheroid at that node
    p = f.X[eq]
    k1, k2 = _spheroid_principal_curvatures(p, a, c)
    np.testing.assert_allclose(np.sort(f.kappa_F[eq]), np.sort([k1, k2]), rtol=1e-5)
    np.testing.assert_allclose(np.sort(f.kappa_F[eq]), np.sort(sym_eigvals(f.S[eq:eq + 1])[0]),
                               rtol=1e-14)


def _spheroid_principal_curvatures(p, a, c):
    """Principal curvatures of x^2/a^2 + y^2/a^2 + z^2/c^2 = 1 at the point ``p``."""
    s = math.hypot(p[0], p[1])
    z = p[2]
    # meridian ellipse (s, z) = (a cos t, c sin t)
    t = math.atan2(z / c, s / a)
    ds, dz = -a * math.sin(t), c * math.cos(t)
    d2s, d2z = -a * math.cos(t), -c * math.sin(t)
    speed = math.hypot(ds, dz)
    k_mer = abs(ds * d2z - dz * d2s) / speed ** 3
    # parallel curvature: sin(normal angle to the axis) / s
    normal = np.array([dz, -ds]) / speed
    k_par = abs(normal[0]) / s
    return k_mer, k_par


def test_admissibility_of_unit_sphere(grid16):
    rep = check_admissible(compute_fields(sphere(grid16), MinkowskiNorm.euclidean()))
    assert rep.admissible
    assert rep.min_u == pytest.approx(1.0, rel=1e-15)
    assert rep.min_H_F == pytest.approx(2.0, rel=1e-3)


def test_strongly_shifted_sphere_is_not_admissible(grid32):
    x = grid32.directions
    graph = RadialGraph.from_rho(grid32, 1 + 0.95 * x[:, 2])
    rep = check_admissible(compute_fields(graph, MinkowskiNorm.euclidean()))
    assert not rep.admissible
    # a radial graph always has u = rho / W > 0; the loss of admissibility shows
    # up as negative curvature where the surface folds in towards the origin
    assert rep.min_u > 0
    assert rep.min_H_F < 0


def test_pinched_dumbbell_is_not_mean_convex(grid32, norms):
    x = grid32.directions
    graph = RadialGraph.from_rho(grid32, 0.45 + 0.55 * x[:, 2] ** 2)
    for norm in norms.values():
        rep = check_admissible(compute_fields(graph, norm))
        assert rep.min_H_F < 0 and not rep.admissible
        assert abs(x[rep.argmin_H_F, 2]) < 0.5


def test_margins(grid16):
    f = compute_fields(sphere(grid16), MinkowskiNorm.euclidean())
    assert not check_admissible(f, H_margin=2.5).admissible
    assert not check_admissible(f, u_margin=1.0).admissible


def test_degenerate_anisotropy_names_the_node(grid16):
    with pytest.raises(DegenerateNodeError) as info:
        compute_fields(sphere(grid16), MinkowskiNorm.blended_lp(4.0, 1.0))
    node = info.value.node
    # A_F of pure l^4 degenerates along the coordinate axes
    assert np.max(np.abs(grid16.directions[node])) > 0.99
    assert str(node) in str(info.value)


def test_invalid_graphs_rejected(grid16):
    with pytest.raises(DomainError):
        RadialGraph(grid16, np.full(grid16.size, np.nan))
    with pytest.raises(DomainError):
        RadialGraph.from_rho(grid16, np.zeros(grid16.size))
    with pytest.raises(DomainError):
        compute_fields(sphere(grid16), MinkowskiNorm.euclidean(dim=2))
