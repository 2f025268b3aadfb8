"""Inverse anisotropic mean curvature flow of star-shaped radial graphs.

The surface ``X = rho x`` moves with normal speed ``1 / H_F``.  In terms of
``gamma = log rho`` this is the scalar parabolic equation::

    d gamma / dt = sqrt(1 + |grad gamma|^2) F(nu) / (rho H_F)

integrated here with the classical explicit 4-stage Runge-Kutta method.  The
right-hand side is invariant under ``gamma -> gamma + c``, so rescaled
quantities (``X e^{-t/n}``) are formed only when recording diagnostics.

Time step
---------
``dt = c_cfl * delta^2 * min(rho^2 H_F^2 / F(nu)) / Lambda_A``, capped by
``dt_max``, where ``Lambda_A`` is the largest eigenvalue of ``A_F`` over a
direction sample and ``1/delta^2 = 1/h_theta^2 + 1/h_phi^2`` with the
equatorial longitude step (the polar filter removes the faster modes near the
poles).  The linearized equation has diffusion coefficient
``F(nu) D^2F(nu) / (rho H_F)^2``, so this is the usual explicit limit; the
4th-order stencils with RK4 are stable up to ``c_cfl`` of about 0.5.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateNodeError, FlowBreakdownError, NumericError
from .functionals import anisotropic_area, wulff_volume
from .geometry import RadialGraph, compute_fields
from .norm import dual_eval, max_anisotropy_eigenvalue

log = logging.getLogger(__name__)

RECORD_FIELDS = ("t", "area_F", "H_func", "P_min", "P_max", "P_integral", "u_hat_min",
                 "gauge_min", "gauge_max", "umb_deficit", "dt")


@dataclass
class FlowParameters:
    """Integrator settings.

    ``eps_stop`` is relative: the run stops once ``umb_deficit`` falls below
    ``eps_stop * area_F(0)`` (surfaces only; on curves the deficit is
    identically zero and the run always goes to ``T_max``).  ``record_interval`` also sets the step
    alignment: every record time is hit exactly.
    """

    c_cfl: float = 0.3
    dt_max: float = 0.01
    T_max: float = 6.0
    eps_stop: float = 1e-8
    record_interval: float = 0.01
    snapshot_times: tuple = ()
    max_steps: int = 10_000_000

    def validate(self):
        from .errors import ConfigError

        checks = (("c_cfl", 0 < self.c_cfl <= 1), ("dt_max", self.dt_max > 0),
                  ("T_max", self.T_max > 0), ("eps_stop", self.eps_stop >= 0),
                  ("record_interval", self.record_interval > 0),
                  ("max_steps", self.max_steps > 0))
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"value out of range: {getattr(self, key)!r}", key=key)
        for s in self.snapshot_times:
            if not 0 <= s <= self.T_max:
                raise ConfigError(f"snapshot time {s} outside [0, T_max]", key="snapshot_times")
        return self


@dataclass
class FlowState:
    t: float
    graph: RadialGraph
    dt_last: float = 0.0
    step_index: int = 0


@dataclass(frozen=True)
class FlowRecord:
    t: float
    area_F: float
    H_func: float
    P_min: float
    P_max: float
    P_integral: float
    u_hat_min: float
    gauge_min: float
    gauge_max: float
    umb_deficit: float
    dt: float
    u_hat_max: float = float("nan")

    def row(self):
        return [getattr(self, k) for k in RECORD_FIELDS]


@dataclass
class LimitReport:
    """Convergence of the rescaled anisotropic support function.

    ``alpha`` is the ``dmu_F``-weighted mean of ``u_hat e^{-t/n}`` at the final
    time; ``deviation`` is ``sup |u_hat e^{-t/n} - alpha|`` there.
    ``rate`` and ``rate_residual`` come from a least-squares line through
    ``log sup|...|`` over the final third of the records (``rate > 0`` means
    exponential decay).  ``alpha_area`` is the rescale factor predicted by
    conservation of the rescaled anisotropic area,
    ``(area_F(0) / ((n+1) Vol(L)))^(1/n)``, and ``alpha_mismatch`` is
    ``|alpha - alpha_area|``.  ``alpha_initial_area`` is ``area_F(0)`` itself,
    kept for comparison: it has the scaling of an area, not of a length, so it
    cannot be the limit factor in general.
    """

    alpha: float
    deviation: float
    rate: float
    rate_residual: float
    fit_points: int
    alpha_area: float
    alpha_initial_area: float
    alpha_mismatch: float
    vol_L: float

    def to_text(self):
        out = []
        for k, v in self.__dict__.items():
            out.append(f"{k} = {format(v, '.17g') if isinstance(v, float) else v}\n")
        return "".join(out)


@dataclass
class RunResult:
    records: list
    final_state: FlowState
    limit_report: LimitReport
    snapshots: dict = field(default_factory=dict)
    steps: int = 0
    retries: int = 0

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


# ----------------------------------------------------------------- pieces


def _breakdown(msg, node, t):
    return FlowBreakdownError(f"{msg} at grid node {node}, t = {t:.6g}; "
                              "try a finer grid or a smaller c_cfl", node=node, t=t)


def rhs_from_fields(fields, t=float("nan")):
    """``W F(nu) / (rho H_F)`` from precomputed fields, with breakdown checks."""
    bad = ~(fields.H_F > 0)
    if np.any(bad):
        raise _breakdown("H_F <= 0", int(np.flatnonzero(bad)[0]), t)
    bad = ~(fields.u > 0)
    if np.any(bad):
        raise _breakdown("u <= 0 (lost star-shapedness)", int(np.flatnonzero(bad)[0]), t)
    return fields.W * fields.F_nu / (fields.rho * fields.H_F)


def rhs(graph, norm, t=float("nan")):
    """Right-hand side of the evolution equation for ``gamma``."""
    try:
        fields = compute_fields(graph, norm)
    except DegenerateNodeError as exc:
        raise _breakdown(str(exc), exc.node, t) from exc
    return rhs_from_fields(fields, t)


def choose_dt(state, norm, params=None, fields=None, lambda_A=None):
    """Explicit time step for ``state`` (see the module docstring)."""
    params = params or FlowParameters()
    grid = state.graph.grid
    if fields is None:
        fields = compute_fields(state.graph, norm)
    if lambda_A is None:
        lambda_A = max_anisotropy_eigenvalue(norm)
    delta2 = grid.cfl_spacing(filtered=True) ** 2
    q = np.min((fields.rho * fields.H_F) ** 2 / fields.F_nu)
    dt = params.c_cfl * delta2 * q / lambda_A
    if not dt > 0:
        raise _breakdown("non-positive time step", int(np.argmin(fields.H_F)), state.t)
    return float(min(dt, params.dt_max))


def _stage(grid, gamma, norm, t):
    try:
        k = rhs(RadialGraph(grid, gamma), norm, t)
    except NumericError:
        raise
    except Exception as exc:  # DomainError from non-finite gamma
        raise _breakdown(f"invalid stage state ({exc})", 0, t) from exc
    return grid.polar_filter(k)


def step(state, norm, dt, k1=None):
    """One classical RK4 step of size ``dt``; returns the new state.

    Each stage derivative is passed through the grid's polar filter.  ``k1``
    may be supplied when the first-stage derivative is already known.
    """
    grid = state.graph.grid
    g0 = state.graph.gamma
    t = state.t
    if k1 is None:
        k1 = _stage(grid, g0, norm, t)
    k2 = _stage(grid, g0 + 0.5 * dt * k1, norm, t + 0.5 * dt)
    k3 = _stage(grid, g0 + 0.5 * dt * k2, norm, t + 0.5 * dt)
    k4 = _stage(grid, g0 + dt * k3, norm, t + dt)
    g1 = g0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(g1)):
        raise _breakdown("non-finite gamma", int(np.flatnonzero(~np.isfinite(g1))[0]), t + dt)
    return FlowState(t + dt, RadialGraph(grid, g1), dt, state.step_index + 1)


# ------------------------------------------------------------- diagnostics


class _Recorder:
    def __init__(self, norm, grid):
        self.n = grid.n
        self.gauge_dir = dual_eval(norm, grid.directions)
        self.records = []

    def record(self, t, fields, dt):
        n = self.n
        s = math.exp(-t / n)
        P = fields.H_F * fields.u_hat
        spread = fields.kappa_F - (fields.H_F / n)[:, None]
        umb = fields.integrate(np.sum(spread * spread, axis=1))
        gauge = fields.rho * self.gauge_dir * s
        rec = FlowRecord(
            t=t,
            area_F=anisotropic_area(fields),
            H_func=math.exp((1 - n) * t / n) * fields.integrate(fields.H_F),
            P_min=float(P.min()), P_max=float(P.max()),
            P_integral=math.exp(-t) * fields.integrate(P),
            u_hat_min=float(fields.u_hat.min()) * s,
            gauge_min=float(gauge.min()), gauge_max=float(gauge.max()),
            umb_deficit=math.exp(2 * t / n - t) * umb,
            dt=dt,
            u_hat_max=float(fields.u_hat.max()) * s,
        )
        self.records.append(rec)
        return rec


def limit_report(records, final_fields, norm, t_final, vol_L=None):
    """Fit the rescale factor and the exponential convergence rate."""
    grid = final_fields.grid
    n = grid.n
    if vol_L is None:
        vol_L = wulff_volume(norm, grid)
    s = math.exp(-t_final / n)
    v = final_fields.u_hat * s
    alpha = final_fields.integrate(v) / final_fields.integrate(np.ones_like(v))
    deviation = float(np.max(np.abs(v - alpha)))

    ts = np.array([r.t for r in records])
    dev = np.array([max(r.u_hat_max - alpha, alpha - r.u_hat_min) for r in records])
    start = ts[0] + 2.0 * (ts[-1] - ts[0]) / 3.0
    sel = (ts >= start) & (dev > 0)
    if sel.sum() >= 2:
        coef, res, *_ = np.polyfit(ts[sel], np.log(dev[sel]), 1, full=True)
        rate = float(-coef[0])
        resid = float(np.sqrt(res[0] / sel.sum())) if res.size else 0.0
    else:
        rate, resid = float("nan"), float("nan")
    area0 = records[0].area_F
    alpha_area = (area0 / ((n + 1) * vol_L)) ** (1.0 / n)
    return LimitReport(alpha=float(alpha), deviation=deviation, rate=rate, rate_residual=resid,
                       fit_points=int(sel.sum()), alpha_area=float(alpha_area),
                       alpha_initial_area=float(area0),
                       alpha_mismatch=float(abs(alpha - alpha_area)), vol_L=float(vol_L))


# ------------------------------------------------------------------- driver


def run(graph, norm, params=None, on_record=None, on_snapshot=None, record_every_step=False):
    """Integrate from ``graph`` until ``T_max`` or the umbilicity stop criterion.

    Parameters
    ----------
    graph : RadialGraph
        Initial surface (must be star-shaped and strictly F-mean convex).
    norm : MinkowskiNorm
    params : FlowParameters, optional
    on_record : callable(FlowRecord), optional
        Called for every emitted record (after it is appended).
    on_snapshot : callable(t, RadialGraph), optional
        Called at each configured snapshot time.
    record_every_step : bool, optional
        Also emit a record after every accepted step, not only at multiples
        of ``record_interval`` (for step-by-step monitoring).
    """
    params = (params or FlowParameters()).validate()
    grid = graph.grid
    lam = max_anisotropy_eigenvalue(norm)
    recorder = _Recorder(norm, grid)
    state = FlowState(0.0, graph)

    try:
        fields = compute_fields(graph, norm)
    except DegenerateNodeError as exc:
        raise _breakdown(str(exc), exc.node, 0.0) from exc
    k1 = grid.polar_filter(rhs_from_fields(fields, 0.0))
    first = recorder.record(0.0, fields, 0.0)
    if on_record:
        on_record(first)
    # on curves the umbilicity deficit vanishes identically, so no early stop
    stop_level = params.eps_stop * first.area_F if grid.n >= 2 else -math.inf

    interval = params.record_interval
    n_records = int(math.floor(params.T_max / interval + 1e-9))
    targets = [k * interval for k in range(1, n_records + 1)]
    if not targets or targets[-1] < params.T_max - 1e-12:
        targets.append(params.T_max)
    snapshots = {}
    snap_pending = sorted(set(float(s) for s in params.snapshot_times))
    if snap_pending and snap_pending[0] == 0.0:
        snapshots[0.0] = graph
        if on_snapshot:
            on_snapshot(0.0, graph)
        snap_pending.pop(0)
    stops = sorted(set(targets) | set(snap_pending))

    retries = 0
    steps = 0
    stopped = False
    for target in stops:
        while state.t < target - 1e-12 * max(1.0, target):
            dt = choose_dt(state, norm, params, fields=fields, lambda_A=lam)
            remaining = target - state.t
            if dt >= remaining:
                dt = remaining
            elif dt > 0.5 * remaining:
                dt = 0.5 * remaining            # two equal steps instead of a sliver
            try:
                new = step(state, norm, dt, k1=k1)
                new_fields = compute_fields(new.graph, norm)
                new_k1 = grid.polar_filter(rhs_from_fields(new_fields, new.t))
            except (FlowBreakdownError, DegenerateNodeError) as exc:
                log.warning("step at t=%g failed (%s); retrying with dt/2", state.t, exc)
                retries += 1
                dt = 0.5 * dt
                try:
                    new = step(state, norm, dt, k1=k1)
                    new_fields = compute_fields(new.graph, norm)
                    new_k1 = grid.polar_filter(rhs_from_fields(new_fields, new.t))
                except DegenerateNodeError as exc2:
                    raise _breakdown(str(exc2), exc2.node, state.t + dt) from exc2
            if abs(new.t - target) <= 1e-12 * max(1.0, target):
                new = replace(new, t=target)
            state, fields, k1 = new, new_fields, new_k1
            steps += 1
            if steps > params.max_steps:
                raise NumericError(f"step limit {params.max_steps} reached at t = {state.t:.6g}")
            if record_every_step and state.t != target:
                rec = recorder.record(state.t, fields, state.dt_last)
                if on_record:
                    on_record(rec)
        if snap_pending and abs(target - snap_pending[0]) < 1e-12:
            snapshots[target] = state.graph
            if on_snapshot:
                on_snapshot(target, state.graph)
            snap_pending.pop(0)
        if target in targets:
            rec = recorder.record(state.t, fields, state.dt_last)
            if on_record:
                on_record(rec)
            if rec.umb_deficit < stop_level:
                stopped = True
                break
    if stopped:
        log.info("umbilicity deficit below %g at t=%g; stopping", stop_level, state.t)
    report = limit_report(recorder.records, fields, norm, state.t)
    return RunResult(recorder.records, state, report, snapshots, steps, retries)
