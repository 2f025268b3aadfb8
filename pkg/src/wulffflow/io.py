"""File formats: time-series CSV, key-value reports, OBJ meshes and rho tables."""

import csv
import os

import numpy as np

from .errors import ConfigError
from .flow import RECORD_FIELDS


def fmt_real(value):
    """Locale-independent text with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows):
    """Write a plain RFC-4180 CSV with ``\\r\\n`` line endings."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_real(v) for v in row])


def read_csv(path):
    """Read a CSV written by :func:`write_csv` as ``(header, float array)``."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    return header, data.reshape(-1, len(header))


def write_timeseries(path, records):
    write_csv(path, RECORD_FIELDS, (r.row() for r in records))


def write_key_values(path, mapping):
    """Flat ``key = value`` text block, one entry per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in mapping.items():
            fh.write(f"{k} = {fmt_real(v)}\n")


def read_key_values(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def mesh_faces(grid):
    """0-based triangle (n=2) or segment (n=1) connectivity of a grid.

    For the sphere the node order is north pole, rings north to south (each
    ring in increasing longitude), south pole.  Triangles are oriented so
    that their normals point outward.
    """
    if grid.n == 1:
        idx = np.arange(grid.size)
        return np.stack([idx, np.roll(idx, -1)], axis=1)
    nt, nph = grid.n_theta, grid.n_phi
    north, south = 0, grid.size - 1

    def node(j, k):
        return 1 + j * nph + (k % nph)

    faces = []
    for k in range(nph):
        faces.append((north, node(0, k), node(0, k + 1)))
    for j in range(nt - 1):
        for k in range(nph):
            a, b = node(j, k), node(j + 1, k)
            c, d = node(j + 1, k + 1), node(j, k + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    for k in range(nph):
        faces.append((south, node(nt - 1, k + 1), node(nt - 1, k)))
    return np.array(faces, dtype=np.int64)


def write_obj(path, graph):
    """Export the radial graph as a Wavefront OBJ mesh (vertices ``rho(x) x``)."""
    pts = graph.points
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    faces = mesh_faces(graph.grid) + 1
    tag = "l" if graph.grid.n == 1 else "f"
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# radial graph, {len(pts)} vertices\n")
        for p in pts:
            fh.write("v " + " ".join(format(float(c), ".17g") for c in p) + "\n")
        for f in faces:
            fh.write(tag + " " + " ".join(str(int(i)) for i in f) + "\n")


def read_obj(path):
    """Minimal OBJ reader returning ``(vertices, elements)`` (0-based)."""
    verts, elems = [], []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(v) for v in parts[1:4]])
            elif parts[0] in ("f", "l"):
                elems.append([int(v.split("/")[0]) - 1 for v in parts[1:]])
    return np.array(verts), np.array(elems, dtype=np.int64)


def read_rho_table(path, grid):
    """Read ``node,rho`` rows covering every grid node exactly once.

    Raises
    ------
    ConfigError
        On a malformed row (with its line number), a missing or repeated
        node, or a non-positive radius.
    """
    rho = np.full(grid.size, np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["node", "rho"]:
            raise ConfigError(f"table {path!r} must start with header 'node,rho'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                node, value = int(row[0]), float(row[1])
            except (ValueError, IndexError):
                raise ConfigError(f"table {path!r}: malformed row {row!r}", line=lineno) from None
            if not 0 <= node < grid.size or not np.isnan(rho[node]):
                raise ConfigError(f"table {path!r}: invalid or repeated node {node}", line=lineno)
            if not value > 0:
                raise ConfigError(f"table {path!r}: radius must be positive", line=lineno)
            rho[node] = value
    if np.isnan(rho).any():
        raise ConfigError(f"table {path!r} is missing {int(np.isnan(rho).sum())} nodes")
    return rho


def write_rho_table(path, grid, rho):
    write_csv(path, ("node", "rho"), ((i, float(r)) for i, r in enumerate(rho)))


class OutputSet:
    """Track files written by a command so they can be removed on failure."""

    def __init__(self, directory):
        self.directory = directory
        self.paths = []

    def path(self, name):
        p = os.path.join(self.directory, name)
        self.paths.append(p)
        return p

    def discard(self):
        for p in self.paths:
            try:
                os.remove(p)
            except FileNotFoundError:
                pass
        self.paths = []
