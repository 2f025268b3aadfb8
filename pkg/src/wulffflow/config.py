"""Run configuration: INI-style text with ``[section]`` headers and ``key = value``.

Sections and keys (defaults in brackets)::

    [norm]
    family = euclidean | ellipsoid | perturbed_sphere | blended_lp
    matrix = comma list: n+1 diagonal entries or all (n+1)^2 entries row-major
    terms = degree:order:amplitude, ...           (perturbed_sphere)
    p = real > 1, blend = real in [0, 1)          (blended_lp)
    derivative_mode = analytic | finite_difference   [analytic]
    fd_step = relative finite-difference step        [1e-5]

    [initial]
    shape = sphere | wulff | harmonic_perturbation | table   [sphere]
    radius = base radius r                                   [1]
    scale = lambda for shape = wulff                         [1]
    terms = degree:order:amplitude, ...   (rho = r + sum amplitude * Y)
    table = path of a CSV with columns node,rho (one row per grid node)

    [grid]
    dimension = 1 | 2            [2]
    resolution = N (n=1) or N_theta (n=2)   [256 for n=1, 32 for n=2]

    [flow]
    c_cfl [0.3], dt_max [0.01], T_max [6], eps_stop [1e-8],
    record_interval [0.01], snapshot_times [none], threads [0]

    [output]
    directory [.], timeseries [timeseries.csv], limit_report [limit_report.txt],
    inequality_report [inequality_report.txt], inequality_csv [inequality.csv],
    norm_report [norm_report.txt], variation_table [variation.csv]

    [tolerances]
    tol_ineq [1e-8], tol_eq [5e-3], validity_samples [1000],
    residual_tol [1e-6], duality_samples [1000], duality_tol [1e-8]

    [variation]
    psi_constant [0], psi_terms [2:0:1], eps [1e-4], levels [4]

Unknown sections or keys are errors.  ``#`` and ``;`` start comments.
"""

import configparser
import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, WulffFlowError
from .flow import FlowParameters
from .norm import FAMILIES, MinkowskiNorm, validate_norm
from .sphere_grid import MIN_RESOLUTION

SECTIONS = ("norm", "initial", "grid", "flow", "output", "tolerances", "variation")
SHAPES = ("sphere", "wulff", "harmonic_perturbation", "table")


@dataclass
class NormSpec:
    family: str = "euclidean"
    matrix: tuple = ()
    terms: tuple = ()
    p: float = 2.0
    blend: float = 0.0
    derivative_mode: str = "analytic"
    fd_step: float = 1e-5


@dataclass
class InitialSpec:
    shape: str = "sphere"
    radius: float = 1.0
    scale: float = 1.0
    terms: tuple = ()
    table: str = ""


@dataclass
class GridSpec:
    dimension: int = 2
    resolution: int = 0     # 0: default for the dimension

    def effective_resolution(self):
        if self.resolution:
            return self.resolution
        return 256 if self.dimension == 1 else 32


@dataclass
class FlowSpec:
    c_cfl: float = 0.3
    dt_max: float = 0.01
    T_max: float = 6.0
    eps_stop: float = 1e-8
    record_interval: float = 0.01
    snapshot_times: tuple = ()
    threads: int = 0


@dataclass
class OutputSpec:
    directory: str = "."
    timeseries: str = "timeseries.csv"
    limit_report: str = "limit_report.txt"
    inequality_report: str = "inequality_report.txt"
    inequality_csv: str = "inequality.csv"
    norm_report: str = "norm_report.txt"
    variation_table: str = "variation.csv"

    def path(self, key):
        return os.path.join(self.directory, getattr(self, key))


@dataclass
class ToleranceSpec:
    tol_ineq: float = 1e-8
    tol_eq: float = 5e-3
    validity_samples: int = 1000
    residual_tol: float = 1e-6
    duality_samples: int = 1000
    duality_tol: float = 1e-8


@dataclass
class VariationSpec:
    psi_constant: float = 0.0
    psi_terms: tuple = ((2, 0, 1.0),)
    eps: float = 1e-4
    levels: int = 4


@dataclass
class RunConfig:
    norm: NormSpec = field(default_factory=NormSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    flow: FlowSpec = field(default_factory=FlowSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    tolerances: ToleranceSpec = field(default_factory=ToleranceSpec)
    variation: VariationSpec = field(default_factory=VariationSpec)
    source_dir: str = field(default="", compare=False)   # resolves relative table paths

    @property
    def n(self):
        return self.grid.dimension

    def flow_parameters(self):
        f = self.flow
        return FlowParameters(c_cfl=f.c_cfl, dt_max=f.dt_max, T_max=f.T_max,
                              eps_stop=f.eps_stop, record_interval=f.record_interval,
                              snapshot_times=tuple(f.snapshot_times))

    def build_norm(self):
        """The :class:`MinkowskiNorm` described by the ``[norm]`` section."""
        return build_norm(self.norm, self.n + 1)

    def to_text(self):
        """Serialize to configuration text that parses back to an equal config."""
        out = []
        for name in SECTIONS:
            out.append(f"[{name}]")
            for fld in dataclasses.fields(getattr(self, name)):
                value = getattr(getattr(self, name), fld.name)
                out.append(f"{fld.name} = {_format_value(fld.name, value)}")
            out.append("")
        return "\n".join(out)


# ------------------------------------------------------------------ values


def _format_value(key, value):
    if key in ("terms", "psi_terms"):
        return ", ".join(f"{l}:{m}:{a!r}" for l, m, a in value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float(text):
    return float(text)


def _parse_int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _parse_floats(text):
    text = text.strip()
    if not text or text.lower() == "none":
        return ()
    return tuple(float(t) for t in text.split(","))


def _parse_terms(text):
    text = text.strip()
    if not text or text.lower() == "none":
        return ()
    terms = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 3:
            raise ValueError(f"term {item.strip()!r} is not degree:order:amplitude")
        terms.append((_parse_int(parts[0]), _parse_int(parts[1]), float(parts[2])))
    return tuple(terms)


def _parse_str(text):
    return text.strip()


PARSERS = {
    "norm": {"family": _parse_str, "matrix": _parse_floats, "terms": _parse_terms,
             "p": _parse_float, "blend": _parse_float, "derivative_mode": _parse_str,
             "fd_step": _parse_float},
    "initial": {"shape": _parse_str, "radius": _parse_float, "scale": _parse_float,
                "terms": _parse_terms, "table": _parse_str},
    "grid": {"dimension": _parse_int, "resolution": _parse_int},
    "flow": {"c_cfl": _parse_float, "dt_max": _parse_float, "T_max": _parse_float,
             "eps_stop": _parse_float, "record_interval": _parse_float,
             "snapshot_times": _parse_floats, "threads": _parse_int},
    "output": {k: _parse_str for k in ("directory", "timeseries", "limit_report",
                                         "inequality_report", "inequality_csv",
                                         "norm_report", "variation_table")},
    "tolerances": {"tol_ineq": _parse_float, "tol_eq": _parse_float,
                   "validity_samples": _parse_int, "residual_tol": _parse_float,
                   "duality_samples": _parse_int, "duality_tol": _parse_float},
    "variation": {"psi_constant": _parse_float, "psi_terms": _parse_terms,
                  "eps": _parse_float, "levels": _parse_int},
}


def _key_lines(text):
    """Map ``(section, key)`` to the 1-based line where the key is defined."""
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            lines[(section, None)] = i
            continue
        for sep in ("=", ":"):
            if sep in line:
                lines[(section, line.split(sep, 1)[0].strip())] = i
                break
    return lines


# ----------------------------------------------------------------- parsing


def parse_config(text, overrides=(), validate=True):
    """Parse and validate configuration text.

    Parameters
    ----------
    text : str
    overrides : iterable of str
        ``section.key=value`` strings applied after parsing.
    validate : bool
        Also build the norm and check it with :func:`validate_norm`.

    Raises
    ------
    ConfigError
        With the line number for syntax problems and the key name for
        unknown keys or invalid values.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       default_section="__defaults__", strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", line=exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key in [{exc.section}]", line=exc.lineno,
                          key=exc.option) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0]
        line = text.splitlines()[lineno - 1].strip()
        raise ConfigError(f"cannot parse {line!r}", line=lineno) from None

    lines = _key_lines(text)
    raw = {}
    for section in parser.sections():
        if section not in PARSERS:
            raise ConfigError(f"unknown section [{section}]", line=lines.get((section, None)))
        for key, value in parser.items(section):
            if key not in PARSERS[section]:
                raise ConfigError(f"unknown key in [{section}]", line=lines.get((section, key)),
                                  key=key)
            raw[(section, key)] = (value, lines.get((section, key)))

    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not section.key=value")
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        if section not in PARSERS or key not in PARSERS[section]:
            raise ConfigError("unknown override", key=lhs.strip())
        raw[(section, key)] = (value, None)

    cfg = RunConfig()
    for (section, key), (value, line) in raw.items():
        try:
            parsed = PARSERS[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"invalid value {value.strip()!r} in [{section}] ({exc})",
                              line=line, key=key) from None
        setattr(getattr(cfg, section), key, parsed)

    _check_semantics(cfg, lines)
    if validate:
        _check_norm(cfg, lines)
    return cfg


def load_config(path, overrides=(), validate=True):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, overrides, validate)


def _fail(msg, section, key, lines):
    raise ConfigError(msg, line=lines.get((section, key)), key=key)


def _check_semantics(cfg, lines):
    n = cfg.grid.dimension
    if n not in (1, 2):
        _fail("dimension must be 1 or 2", "grid", "dimension", lines)
    res = cfg.grid.effective_resolution()
    if res < MIN_RESOLUTION[n]:
        _fail(f"resolution {res} below the minimum {MIN_RESOLUTION[n]}", "grid", "resolution",
              lines)
    nm = cfg.norm
    if nm.family not in FAMILIES:
        _fail(f"unknown norm family {nm.family!r}", "norm", "family", lines)
    if nm.derivative_mode not in ("analytic", "finite_difference"):
        _fail(f"unknown derivative mode {nm.derivative_mode!r}", "norm", "derivative_mode", lines)
    if not 0 < nm.fd_step < 1e-1:
        _fail("fd_step must lie in (0, 0.1)", "norm", "fd_step", lines)
    if nm.family == "ellipsoid" and len(nm.matrix) not in (n + 1, (n + 1) ** 2):
        _fail(f"matrix needs {n + 1} or {(n + 1) ** 2} entries", "norm", "matrix", lines)
    if nm.family == "blended_lp":
        if not nm.p > 1:
            _fail("p must be > 1", "norm", "p", lines)
        if not 0 <= nm.blend < 1:
            _fail("blend must lie in [0, 1)", "norm", "blend", lines)
    ini = cfg.initial
    if ini.shape not in SHAPES:
        _fail(f"unknown initial shape {ini.shape!r}", "initial", "shape", lines)
    if not ini.radius > 0:
        _fail("radius must be positive", "initial", "radius", lines)
    if not ini.scale > 0:
        _fail("scale must be positive", "initial", "scale", lines)
    if ini.shape == "table" and not ini.table:
        _fail("shape = table needs a table path", "initial", "table", lines)
    for key, val in (("terms", nm.terms), ):
        for l, m, _ in val:
            if l < 0 or (n == 2 and abs(m) > l):
                _fail(f"invalid harmonic term ({l}, {m})", "norm", key, lines)
    for l, m, _ in ini.terms:
        if l < 0 or (n == 2 and abs(m) > l):
            _fail(f"invalid harmonic term ({l}, {m})", "initial", "terms", lines)
    try:
        cfg.flow_parameters().validate()
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], line=lines.get(("flow", exc.key)),
                          key=exc.key) from None
    if cfg.flow.threads < 0:
        _fail("threads must be >= 0", "flow", "threads", lines)
    tol = cfg.tolerances
    for key in ("tol_ineq", "tol_eq", "residual_tol", "duality_tol"):
        if not getattr(tol, key) > 0:
            _fail(f"{key} must be positive", "tolerances", key, lines)
    for key in ("validity_samples", "duality_samples"):
        if getattr(tol, key) < 50:
            _fail(f"{key} must be at least 50", "tolerances", key, lines)
    var = cfg.variation
    if not var.eps > 0:
        _fail("eps must be positive", "variation", "eps", lines)
    if var.levels < 3:
        _fail("levels must be at least 3", "variation", "levels", lines)


def build_norm(norm_spec, dim):
    kw = dict(derivative_mode=norm_spec.derivative_mode, fd_step=norm_spec.fd_step)
    if norm_spec.family == "euclidean":
        return MinkowskiNorm.euclidean(dim=dim, **kw)
    if norm_spec.family == "ellipsoid":
        m = np.array(norm_spec.matrix, dtype=float)
        m = np.diag(m) if m.size == dim else m.reshape(dim, dim)
        return MinkowskiNorm.ellipsoid(m, **kw)
    if norm_spec.family == "perturbed_sphere":
        return MinkowskiNorm.perturbed_sphere(norm_spec.terms, dim=dim, **kw)
    return MinkowskiNorm.blended_lp(norm_spec.p, norm_spec.blend, dim=dim, **kw)


def _check_norm(cfg, lines):
    key = {"ellipsoid": "matrix", "perturbed_sphere": "terms",
           "blended_lp": "blend"}.get(cfg.norm.family, "family")
    try:
        norm = cfg.build_norm()
    except WulffFlowError as exc:
        _fail(str(exc), "norm", key, lines)
    report = validate_norm(norm, sample_count=cfg.tolerances.validity_samples,
                           residual_tol=cfg.tolerances.residual_tol)
    if not report.valid:
        _fail("norm is not a valid anisotropy: " + "; ".join(report.reasons), "norm", key, lines)
