import math

import numpy as np
import pytest

from wulffflow import (ConfigError, FlowBreakdownError, FlowParameters, FlowState,
                       MinkowskiNorm, RadialGraph, build_grid, choose_dt, compute_fields,
                       dual_eval, rhs, run, step, wulff_volume)
from wulffflow.flow import RECORD_FIELDS, limit_report
from wulffflow.harmonics import real_harmonic
from wulffflow.norm import max_anisotropy_eigenvalue

from _support import harmonic_graph, wulff_graph


def sphere(grid, r=1.0):
    return RadialGraph.from_rho(grid, np.full(grid.size, r))


def homothetic_error(result, norm, lam=1.0):
    g = result.final_state.graph
    t = result.final_state.t
    n = g.grid.n
    exact = lam * math.exp(t / n) / dual_eval(norm, g.grid.directions)
    return float(np.max(np.abs(g.rho / exact - 1)))


# ----------------------------------------------------------------- rhs / step


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_rhs_on_spheres_is_one_over_n(grid32, r):
    np.testing.assert_allclose(rhs(sphere(grid32, r), MinkowskiNorm.euclidean()), 0.5,
                               rtol=1e-5)


def test_rhs_on_circles(circle256):
    np.testing.assert_allclose(rhs(sphere(circle256, 1.5), MinkowskiNorm.euclidean(dim=2)), 1.0,
                               rtol=1e-7)


@pytest.mark.parametrize("name", ["ellipsoid", "perturbed", "blended"])
def test_rhs_on_wulff_shape_is_one_over_n(norms, name):
    g = build_grid(2, 64)
    np.testing.assert_allclose(rhs(wulff_graph(g, norms[name]), norms[name]), 0.5, atol=1e-3)


def test_rhs_at_spheroid_equator_matches_meridian_curve():
    a, c = 1.0, 1.5
    grid = build_grid(2, 33)            # odd N_t puts a ring on the equator
    x = grid.directions
    rho = 1 / np.sqrt((x[:, 0] ** 2 + x[:, 1] ** 2) / a ** 2 + x[:, 2] ** 2 / c ** 2)
    v = rhs(RadialGraph.from_rho(grid, rho), MinkowskiNorm.euclidean())
    node = int(np.argmin(np.linalg.norm(x - [1.0, 0.0, 0.0], axis=1)))
    assert np.allclose(x[node], [1, 0, 0], atol=1e-15)
    # independent 1-D computation: curvature of the meridian ellipse on S^1 at (a, 0)
    circle = build_grid(1, 512)
    y = circle.directions
    meridian = RadialGraph.from_rho(circle, 1 / np.sqrt(y[:, 0] ** 2 / a ** 2
                                                        + y[:, 1] ** 2 / c ** 2))
    k_mer = compute_fields(meridian, MinkowskiNorm.euclidean(dim=2)).H_F[0]
    # at the equator W = 1, F = 1, rho = a and the parallel circle has curvature 1 / a
    oracle = 1.0 / (a * (k_mer + 1.0 / a))
    assert v[node] == pytest.approx(oracle, rel=1e-5)


def test_rk4_step_on_sphere_adds_dt_over_n(grid16):
    norm = MinkowskiNorm.euclidean()
    state = FlowState(0.0, sphere(grid16))
    for dt in (1e-3, 1e-2):
        new = step(state, norm, dt)
        # the gain is dt / n up to the O(h^4) curvature error of the grid
        np.testing.assert_allclose(new.graph.gamma - state.graph.gamma, dt / 2, rtol=5e-4)
        assert new.t == dt and new.step_index == 1 and new.dt_last == dt
        # the rhs barely changes along spheres, so the step is exact in time up to
        # round-off: two half steps reproduce one full step
        half = step(step(state, norm, dt / 2), norm, dt / 2)
        np.testing.assert_allclose(half.graph.gamma, new.graph.gamma, atol=1e-12)


def test_choose_dt_formula(grid16):
    norm = MinkowskiNorm.ellipsoid(np.diag([1.0, 1.3, 1.7]))
    state = FlowState(0.0, sphere(grid16, 2.0))
    params = FlowParameters(c_cfl=0.3, dt_max=10.0)
    f = compute_fields(state.graph, norm)
    lam = max_anisotropy_eigenvalue(norm)
    expect = 0.3 * grid16.cfl_spacing() ** 2 * np.min((f.rho * f.H_F) ** 2 / f.F_nu) / lam
    assert choose_dt(state, norm, params) == pytest.approx(expect, rel=1e-12)
    assert choose_dt(state, norm, FlowParameters(dt_max=1e-5)) == 1e-5


def test_breakdown_reports_node_and_time(grid32):
    x = grid32.directions
    bad = RadialGraph.from_rho(grid32, 0.45 + 0.55 * x[:, 2] ** 2)
    with pytest.raises(FlowBreakdownError) as info:
        rhs(bad, MinkowskiNorm.euclidean(), t=0.25)
    err = info.value
    assert err.t == 0.25
    assert 0 <= err.node < grid32.size
    assert "refine" in str(err) or "finer" in str(err)
    with pytest.raises(FlowBreakdownError):
        run(bad, MinkowskiNorm.euclidean(), FlowParameters(T_max=0.1))


@pytest.mark.parametrize("kwargs", [dict(c_cfl=0), dict(c_cfl=1.5), dict(dt_max=-1),
                                    dict(T_max=0), dict(record_interval=0),
                                    dict(eps_stop=-1), dict(T_max=1, snapshot_times=(2,))])
def test_parameter_validation(kwargs):
    with pytest.raises(ConfigError):
        FlowParameters(**kwargs).validate()


# --------------------------------------------------------------------- runs


@pytest.fixture(scope="module")
def sphere_run():
    grid = build_grid(2, 32)
    params = FlowParameters(T_max=2.0, eps_stop=0.0, record_interval=0.05)
    return run(sphere(grid), MinkowskiNorm.euclidean(), params)


def test_sphere_run_area_law_and_umbilicity(sphere_run):
    t = sphere_run.column("t")
    area = sphere_run.column("area_F")
    assert t[-1] == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(area / area[0], np.exp(t), rtol=1e-4)
    assert np.all(sphere_run.column("umb_deficit") <= 1e-8)
    assert homothetic_error(sphere_run, MinkowskiNorm.euclidean()) < 1e-5


def test_records_are_ordered_and_finite(sphere_run):
    t = sphere_run.column("t")
    assert np.all(np.diff(t) > 0)
    np.testing.assert_allclose(t, 0.05 * np.arange(len(t)), atol=1e-12)
    for rec in sphere_run.records:
        assert np.all(np.isfinite(rec.row()))
        assert len(rec.row()) == len(RECORD_FIELDS)
    assert sphere_run.records[0].dt == 0.0


@pytest.fixture(scope="module")
def perturbed_run():
    grid = build_grid(2, 16)
    x = grid.directions
    graph = RadialGraph.from_rho(grid, 1 + 0.2 * real_harmonic(2, 0).value(x))
    params = FlowParameters(T_max=4.0, eps_stop=0.0, record_interval=0.02)
    return graph, run(graph, MinkowskiNorm.euclidean(), params)


def test_perturbed_sphere_monotone_quantities(perturbed_run):
    _, res = perturbed_run
    h = res.column("H_func")
    assert np.all(np.diff(h) <= 1e-6 * h[0])
    assert h[-1] < h[0]
    umb = res.column("umb_deficit")
    assert umb[-1] < 1e-3 * umb[0]
    assert res.limit_report.rate > 0
    u = res.column("u_hat_min")
    assert np.all(np.diff(u) >= -1e-6 * u[0])


def test_maximum_principle_and_conserved_integral(perturbed_run):
    _, res = perturbed_run
    pmin, pmax = res.column("P_min"), res.column("P_max")
    delta = 1e-3 * (pmax[0] - pmin[0] + 1)
    assert np.all(pmin >= pmin[0] - delta) and np.all(pmax <= pmax[0] + delta)
    p = res.column("P_integral")
    np.testing.assert_allclose(p, p[0], rtol=1e-3)


def test_gauge_nesting(perturbed_run):
    graph, res = perturbed_run
    gauge0 = graph.rho * dual_eval(MinkowskiNorm.euclidean(), graph.grid.directions)
    r, big_r = gauge0.min(), gauge0.max()
    assert np.all(res.column("gauge_min") >= r - 1e-6)
    assert np.all(res.column("gauge_max") <= big_r + 1e-6)


def test_minkowski_deficit_decreases_along_the_flow(perturbed_run):
    graph, res = perturbed_run
    vol = wulff_volume(MinkowskiNorm.euclidean(), graph.grid)
    t = res.column("t")
    v1 = res.column("area_F") / 3
    v2 = res.column("H_func") * np.exp(t / 2) / 6
    deficit = (v2 ** 2 - v1 * vol) / (v1 * vol)
    assert np.all(np.diff(deficit) <= 1e-4)
    assert deficit[-1] < deficit[0]


def test_limit_report_fields(perturbed_run):
    graph, res = perturbed_run
    rep = res.limit_report
    area0 = res.records[0].area_F
    assert rep.alpha_initial_area == area0
    assert rep.alpha_area == pytest.approx((area0 / (3 * rep.vol_L)) ** 0.5, rel=1e-15)
    assert rep.alpha_mismatch == pytest.approx(abs(rep.alpha - rep.alpha_area))
    assert rep.alpha_mismatch < 1e-3
    assert rep.fit_points >= 60
    text = rep.to_text()
    assert "alpha = " in text and "rate = " in text


def test_eps_stop_ends_run_early():
    grid = build_grid(2, 16)
    graph = harmonic_graph(grid, [(2, 0, 0.1)])
    res = run(graph, MinkowskiNorm.euclidean(), FlowParameters(T_max=6.0, eps_stop=1e-4))
    assert res.final_state.t < 6.0
    assert res.records[-1].umb_deficit < 1e-4 * res.records[0].area_F
    assert res.records[-2].umb_deficit >= 1e-4 * res.records[0].area_F


def test_halving_cfl_leaves_solution_unchanged(grid16, ellipsoid):
    graph = harmonic_graph(grid16, [(2, 1, 0.1), (3, 0, 0.05)])
    finals = []
    for c in (0.3, 0.15):
        params = FlowParameters(c_cfl=c, T_max=1.0, eps_stop=0.0, record_interval=0.5)
        finals.append(run(graph, ellipsoid, params).final_state.graph.rho)
    assert np.max(np.abs(finals[1] / finals[0] - 1)) <= 1e-6


def test_wulff_data_is_homothetic_at_default_resolution(grid32, ellipsoid):
    lam = 1.3
    params = FlowParameters(T_max=1.0, eps_stop=0.0, record_interval=0.1)
    res = run(wulff_graph(grid32, ellipsoid, lam), ellipsoid, params)
    assert homothetic_error(res, ellipsoid, lam) <= 5e-4
    assert res.limit_report.alpha == pytest.approx(lam, rel=1e-3)
    assert res.limit_report.alpha_area == pytest.approx(lam, rel=1e-3)


def test_snapshots_and_callbacks(grid16):
    seen, snaps = [], []
    params = FlowParameters(T_max=0.3, eps_stop=0.0, record_interval=0.1,
                            snapshot_times=(0.0, 0.15, 0.3))
    res = run(sphere(grid16), MinkowskiNorm.euclidean(), params,
              on_record=seen.append, on_snapshot=lambda t, g: snaps.append((t, g)))
    assert [s[0] for s in snaps] == [0.0, 0.15, 0.3]
    assert sorted(res.snapshots) == [0.0, 0.15, 0.3]
    assert seen == res.records
    assert [r.t for r in seen] == pytest.approx([0.0, 0.1, 0.2, 0.3])
    np.testing.assert_allclose(snaps[1][1].rho, math.exp(0.075), rtol=1e-4)


def test_record_every_step(grid16, ellipsoid):
    graph = harmonic_graph(grid16, [(2, 0, 0.1)])
    params = FlowParameters(T_max=0.1, eps_stop=0.0, record_interval=0.05)
    coarse = run(graph, ellipsoid, params)
    fine = run(graph, ellipsoid, params, record_every_step=True)
    assert len(fine.records) == fine.steps + 1 > len(coarse.records)
    assert [r.dt for r in fine.records[1:]] == pytest.approx(np.diff([r.t for r in fine.records]))
    # the extra records do not change the integration
    np.testing.assert_array_equal(fine.final_state.graph.gamma, coarse.final_state.graph.gamma)
    assert {r.t for r in coarse.records} <= {r.t for r in fine.records}


def test_runs_are_deterministic(grid16, ellipsoid):
    graph = harmonic_graph(grid16, [(1, 0, 0.1), (2, -2, 0.05)])
    params = FlowParameters(T_max=0.2, eps_stop=0.0, record_interval=0.05)
    a = run(graph, ellipsoid, params)
    b = run(graph, ellipsoid, params)
    assert [r.row() for r in a.records] == [r.row() for r in b.records]
    np.testing.assert_array_equal(a.final_state.graph.gamma, b.final_state.graph.gamma)


# ------------------------------------------------------------------- curves


def test_curve_flow_homothetic_and_area_law():
    grid = build_grid(1, 128)
    norm = MinkowskiNorm.ellipsoid(np.diag([1.0, 1.5]))
    params = FlowParameters(T_max=0.5, record_interval=0.1)
    res = run(wulff_graph(grid, norm), norm, params)
    assert res.final_state.t == pytest.approx(0.5)
    assert homothetic_error(res, norm) < 1e-5
    area = res.column("area_F")
    np.testing.assert_allclose(area / area[0], np.exp(res.column("t")), rtol=1e-5)
    assert np.all(res.column("umb_deficit") == 0)


def test_curve_flow_rounds_out():
    grid = build_grid(1, 128)
    norm = MinkowskiNorm.euclidean(dim=2)
    graph = RadialGraph.from_rho(grid, 1 + 0.1 * np.cos(3 * grid.theta))
    res = run(graph, norm, FlowParameters(T_max=1.0, record_interval=0.05))
    assert res.limit_report.rate > 0
    p = res.column("P_integral")
    np.testing.assert_allclose(p, p[0], rtol=1e-3)


def test_limit_report_without_enough_records(grid16):
    f = compute_fields(sphere(grid16), MinkowskiNorm.euclidean())
    from wulffflow.flow import _Recorder
    rec = _Recorder(MinkowskiNorm.euclidean(), grid16)
    rec.record(0.0, f, 0.0)
    rep = limit_report(rec.records, f, MinkowskiNorm.euclidean(), 0.0)
    assert math.isnan(rep.rate) and rep.fit_points <= 1
