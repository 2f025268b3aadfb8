"""The ``wulffflow`` command line tool.

Usage::

    wulffflow <simulate|inequality|norm-check|variation-check> --config PATH
              [--override section.key=value ...]

Exit status: 0 success, 2 configuration error, 3 numerical failure or flow
breakdown, 4 I/O error.  Files written by a failing command are removed.
"""

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import io
from .config import load_config
from .errors import ConfigError, NumericError, WulffFlowError
from .flow import run
from .functionals import epsilon_ladder, minkowski_check
from .geometry import RadialGraph, check_admissible, compute_fields
from .harmonics import harmonic_series
from .norm import dual_eval, duality_check, validate_norm
from .sphere_grid import build_grid

log = logging.getLogger("wulffflow")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("simulate", "inequality", "norm-check", "variation-check")


def resolve_threads(cfg, environ=None):
    """Thread count: ``WULFFFLOW_THREADS`` overrides the config; 0 means all cores.

    All kernels run serially in a fixed order, so results are bitwise
    independent of this value; it is validated and logged only.
    """
    environ = os.environ if environ is None else environ
    raw = environ.get("WULFFFLOW_THREADS")
    if raw is not None and raw.strip():
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"WULFFFLOW_THREADS={raw!r} is not an integer") from None
        if threads < 0:
            raise ConfigError("WULFFFLOW_THREADS must be >= 0")
    else:
        threads = cfg.flow.threads
    return threads or (os.cpu_count() or 1)


def initial_graph(cfg, grid, norm):
    """Initial radial graph from the ``[initial]`` section."""
    ini = cfg.initial
    x = grid.directions
    if ini.shape == "sphere":
        rho = np.full(grid.size, ini.radius)
    elif ini.shape == "wulff":
        rho = ini.scale / dual_eval(norm, x)
    elif ini.shape == "harmonic_perturbation":
        rho = ini.radius + harmonic_series(ini.terms, x)
    else:
        path = ini.table
        if not os.path.isabs(path) and cfg.source_dir:
            path = os.path.join(cfg.source_dir, path)
        rho = io.read_rho_table(path, grid)
    if not np.all(rho > 0):
        raise ConfigError("initial radius is not positive everywhere", key="terms")
    return RadialGraph.from_rho(grid, rho)


def _setup(cfg):
    grid = build_grid(cfg.n, cfg.grid.effective_resolution())
    norm = cfg.build_norm()
    return grid, norm


def cmd_simulate(cfg, out):
    grid, norm = _setup(cfg)
    graph = initial_graph(cfg, grid, norm)
    adm = check_admissible(compute_fields(graph, norm))
    if not adm.admissible:
        raise NumericError(
            f"initial surface is not admissible (min u = {adm.min_u:.6g}, "
            f"min H_F = {adm.min_H_F:.6g})")

    def snapshot(t, g):
        io.write_obj(out.path(f"snapshot_{t:.6g}.obj"), g)

    result = run(graph, norm, cfg.flow_parameters(), on_snapshot=snapshot)
    io.write_timeseries(out.path(cfg.output.timeseries), result.records)
    with open(out.path(cfg.output.limit_report), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.limit_report.to_text())
        fh.write(f"steps = {result.steps}\nretries = {result.retries}\n")
        fh.write(f"t_final = {format(result.final_state.t, '.17g')}\n")
    log.info("simulate: %d steps to t=%.6g", result.steps, result.final_state.t)


def cmd_inequality(cfg, out):
    grid, norm = _setup(cfg)
    graph = initial_graph(cfg, grid, norm)
    fields = compute_fields(graph, norm)
    report = minkowski_check(fields, norm, tol_ineq=cfg.tolerances.tol_ineq,
                             tol_eq=cfg.tolerances.tol_eq)
    d = report.as_dict()
    io.write_key_values(out.path(cfg.output.inequality_report), d)
    io.write_csv(out.path(cfg.output.inequality_csv), list(d), [list(d.values())])


def cmd_norm_check(cfg, out):
    norm = cfg.build_norm()
    tol = cfg.tolerances
    validity = validate_norm(norm, sample_count=tol.validity_samples,
                             residual_tol=tol.residual_tol)
    d = {"norm": norm.describe()}
    d.update({k: v for k, v in validity.as_dict().items() if k != "reasons"})
    d["reasons"] = "; ".join(validity.reasons) or "none"
    if validity.valid:
        dual = duality_check(norm, sample_count=tol.duality_samples)
        d.update({f"duality_{k}": v for k, v in dual.as_dict().items()})
        d["duality_ok"] = dual.max_residual() <= tol.duality_tol
    io.write_key_values(out.path(cfg.output.norm_report), d)
    if not validity.valid or not d["duality_ok"]:
        raise NumericError("norm check failed: " + d["reasons"])


def cmd_variation_check(cfg, out):
    grid, norm = _setup(cfg)
    graph = initial_graph(cfg, grid, norm)
    var = cfg.variation
    psi = var.psi_constant + harmonic_series(var.psi_terms, grid.directions)
    reports, orders = epsilon_ladder(graph, norm, psi, var.eps, levels=var.levels)
    header = ["eps", "d_area_fd", "d_area_pred", "residual_area", "d_HF_fd", "d_HF_pred",
              "residual_HF", "order_area", "order_HF", "admissible"]
    rows = []
    for i, r in enumerate(reports):
        oa = orders["d_area_fd"][i] if i < len(orders["d_area_fd"]) else math.nan
        oh = orders["d_HF_fd"][i] if i < len(orders["d_HF_fd"]) else math.nan
        rows.append([r.eps, r.d_area_fd, r.d_area_pred, r.residual_area, r.d_HF_fd,
                     r.d_HF_pred, r.residual_HF, float(oa), float(oh), r.admissible])
    io.write_csv(out.path(cfg.output.variation_table), header, rows)


HANDLERS = {"simulate": cmd_simulate, "inequality": cmd_inequality,
            "norm-check": cmd_norm_check, "variation-check": cmd_variation_check}


def build_parser():
    p = argparse.ArgumentParser(prog="wulffflow",
                                description="Inverse anisotropic mean curvature flow tools.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="path of the run configuration file")
    p.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one configuration value (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    out = None
    try:
        cfg = load_config(args.config, overrides=args.override)
        cfg.source_dir = os.path.dirname(os.path.abspath(args.config))
        log.info("threads: %d", resolve_threads(cfg))
        os.makedirs(cfg.output.directory, exist_ok=True)
        out = io.OutputSet(cfg.output.directory)
        HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        return _fail(out, EXIT_CONFIG, f"configuration error: {exc}")
    except NumericError as exc:
        return _fail(out, EXIT_NUMERIC, f"numerical error: {exc}")
    except OSError as exc:
        return _fail(out, EXIT_IO, f"I/O error: {exc}")
    except WulffFlowError as exc:
        return _fail(out, EXIT_CONFIG, f"error: {exc}")
    return EXIT_OK


def _fail(out, code, message):
    if out is not None:
        out.discard()
    print(f"wulffflow: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
