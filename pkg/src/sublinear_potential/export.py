"""Machine-readable artifacts: CSV tables, JSON reports and hash manifests.

Floats are written with 17 significant digits (``%.17g``), which round-trips
every double exactly.  JSON is emitted with sorted keys and no timestamps so
that identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .green import DENSE_CAP, BoundaryData, GreenOperator, green_potential, harmonic_extension
from .grid_domain import GridDomain
from .measure import GridMeasure

COORD_NAMES = ("x", "y", "z")


class ManifestError(ValueError):
    pass


def fmt(value) -> str:
    """Locale-free text form of a table cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.17g" % value
    if value is None:
        return ""
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    """Header and rows (as strings) of a CSV file."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        # JSON has no NaN/inf; undefined quantities become null
        return obj if math.isfinite(obj) else None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def _coord_header(domain):
    return list(COORD_NAMES[: domain.dimension])


def write_measure_csv(path, omega: GridMeasure) -> Path:
    """Columns ``index, x, y[, z], mass`` (atoms folded into node masses)."""
    dom = omega.domain
    m = omega.node_masses
    rows = ([i, *p, m[i]] for i, p in enumerate(dom.interior))
    return write_csv(path, ["index", *_coord_header(dom), "mass"], rows)


def _check_coords(domain, idx, coords, points, what):
    if np.any((idx < 0) | (idx >= len(points))):
        raise ValueError(f"{what}: node index out of range")
    err = np.abs(points[idx] - coords).max(initial=0.0)
    if err > 1e-9 * max(1.0, domain.diameter):
        raise ValueError(f"{what}: coordinates do not match the grid (off by {err:.3e})")


def _read_indexed(path, domain, points, value_name):
    header, rows = read_csv(path)
    expected = ["index", *_coord_header(domain), value_name]
    if header != expected:
        raise ValueError(f"{path}: expected columns {expected}, got {header}")
    data = np.array([[float(c) for c in r] for r in rows], dtype=float).reshape(-1, len(expected))
    idx = data[:, 0].astype(np.int64)
    _check_coords(domain, idx, data[:, 1:-1], points, str(path))
    out = np.zeros(len(points))
    np.add.at(out, idx, data[:, -1])
    return out


def read_measure_csv(path, domain: GridDomain) -> GridMeasure:
    """Inverse of :func:`write_measure_csv`; unlisted nodes get zero mass."""
    return GridMeasure(domain, _read_indexed(path, domain, domain.interior, "mass"))


def write_boundary_csv(path, f: BoundaryData) -> Path:
    dom = f.domain
    rows = ([i, *p, f.values[i]] for i, p in enumerate(dom.boundary))
    return write_csv(path, ["index", *_coord_header(dom), "value"], rows)


def read_boundary_csv(path, domain: GridDomain) -> BoundaryData:
    return BoundaryData(domain, _read_indexed(path, domain, domain.boundary, "value"))


def write_green_rows_csv(path, G: GreenOperator, rows, cap: int = DENSE_CAP) -> Path:
    """Long-format dump ``row, col, g`` of selected Green rows.

    Refused above ``cap`` interior nodes, where a row no longer fits a
    human-inspectable file.
    """
    if G.n > cap:
        raise ValueError(f"{G.n} interior nodes exceed the export cap {cap}")
    rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    g = G.rows(rows)
    it = ([int(i), j, g[k, j]] for k, i in enumerate(rows) for j in range(G.n))
    return write_csv(path, ["row", "col", "g"], it)


def write_kato_csv(path, report) -> Path:
    """Columns ``r, modulus, centered_modulus, slope`` (slope repeated)."""
    cm = report.centered_modulus
    rows = (
        [r, report.modulus[k], None if cm is None else cm[k], report.slope]
        for k, r in enumerate(report.radii)
    )
    return write_csv(path, ["r", "modulus", "centered_modulus", "slope"], rows)


def write_kato_sweep_csv(path, rows) -> Path:
    cols = ["shape", "alpha", "h", "slope", "classification", "beta", "beta_fitted", "predicted_kato", "consistent", "lower_bound"]
    return write_csv(path, cols, ([r[c] for c in cols] for r in rows))


def write_threshold_csv(path, table) -> Path:
    """One line per (alpha, level): ``alpha, level, h, J, ratio,
    classification, predicted``; the ratio is ``J(h)/J(2h)`` (empty on the
    coarsest level)."""
    out = []
    for row in table.rows:
        for k, h in enumerate(table.hs):
            ratio = row["ratios"][k - 1] if k else None
            out.append([row["alpha"], k, h, row["J"][k], ratio, row["classification"], row["predicted"]])
    return write_csv(path, ["alpha", "level", "h", "J", "ratio", "classification", "predicted"], out)


def write_field_csv(path, G: GreenOperator, u, mu: GridMeasure, nu: GridMeasure, f: BoundaryData) -> Path:
    """Per-node dump of ``u, G[mu], G[nu], H_f`` on interior and boundary
    nodes, for plotting."""
    dom = G.domain
    gmu = green_potential(G, mu)
    gnu = green_potential(G, nu)
    hf = harmonic_extension(G, f)
    out = []
    for cls, pts, pick in (("interior", dom.interior, "interior"), ("boundary", dom.boundary, "boundary")):
        vals = [getattr(v, pick) for v in (u, gmu, gnu, hf)]
        for i, p in enumerate(pts):
            out.append([cls, i, *p, *(v[i] for v in vals)])
    return write_csv(path, ["class", "index", *_coord_header(dom), "u", "G_mu", "G_nu", "H_f"], out)


def write_series_csv(path, name, x, y) -> Path:
    """Two-column plot series."""
    return write_csv(path, [name[0], name[1]], zip(x, y))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files, name: str = "manifest.json") -> Path:
    """Hash manifest listing every file (relative to ``out_dir``)."""
    out_dir = Path(out_dir).resolve()
    entries = {}
    for f in files:
        f = Path(f).resolve()
        entries[f.relative_to(out_dir).as_posix()] = {"sha256": sha256(f), "bytes": f.stat().st_size}
    return write_json(out_dir / name, {"files": entries})


def verify_manifest(path) -> list[str]:
    """Re-hash the files listed in a manifest; returns the mismatching names
    (missing files included)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        files = data["files"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ManifestError(f"unreadable manifest {path}: {exc}") from exc
    bad = []
    for rel, entry in sorted(files.items()):
        target = path.parent / rel
        if not target.is_file() or sha256(target) != entry.get("sha256"):
            bad.append(rel)
    return bad
