"""File formats: curve JSON, measure CSV, report CSV, graph and verify JSON, SVG.

Every writer puts a header block holding the run configuration and the
package version first, and formats floats with ``repr`` so equal inputs give
byte-identical files.  Text files are UTF-8 with LF line endings.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .curve_model import InvalidDomain, PlanarDomain
from .graph_builder import WeightedPointSet


class InputError(ValueError):
    """Malformed input file; the message names the line or field."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple = ()
    r_min: float | None = None
    r_max: float | None = None
    per_octave: int = 8
    theta: float = 0.004
    alpha: float = 0.1
    flat_param: float = 0.002
    c0: float = 0.5
    seed: int = 0
    threads: int = 1
    out: str = "."
    render: bool = False
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["inputs"] = list(self.inputs)
        d["extra"] = {k: self.extra[k] for k in sorted(self.extra)}
        return d

    def header_lines(self) -> list:
        lines = [f"geosquare {__version__}"]
        for k, v in self.as_dict().items():
            lines.append(f"{k}={json.dumps(v, sort_keys=True)}")
        return lines


def fmt(v) -> str:
    """Shortest round-trip decimal for a float, 'nan' / 'inf' for specials."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _clean(obj):
    """Convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    return obj


def _write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(payload: dict) -> str:
    return json.dumps(_clean(payload), indent=1, sort_keys=False, allow_nan=False) + "\n"


def _json_header(config: RunConfig) -> dict:
    return {"version": __version__, "config": config.as_dict()}


def _comment_header(config: RunConfig) -> str:
    return "".join(f"# {ln}\n" for ln in config.header_lines())


# curves ------------------------------------------------------------------------


def parse_curve(obj) -> PlanarDomain:
    if not isinstance(obj, dict):
        raise InputError("top level: expected a JSON object")
    kind = obj.get("kind")
    try:
        if kind == "jordan":
            v = _coords(obj, "vertices")
            return PlanarDomain.jordan(v)
        if kind == "graph":
            if "vertices" in obj:
                v = _coords(obj, "vertices")
                return PlanarDomain.graph(v[:, 0], v[:, 1])
            for key in ("x0", "dx", "f"):
                if key not in obj:
                    raise InputError(f"field '{key}': missing for a uniform graph")
            x0 = _number(obj["x0"], "x0")
            dx = _number(obj["dx"], "dx")
            if not isinstance(obj["f"], list):
                raise InputError("field 'f': expected a list of numbers")
            f = np.array([_number(t, f"f[{i}]") for i, t in enumerate(obj["f"])])
            return PlanarDomain.graph_uniform(x0, dx, f)
    except InvalidDomain as e:
        raise InputError(f"invalid domain: {e}") from e
    raise InputError(f"field 'kind': expected 'jordan' or 'graph', got {kind!r}")


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"field '{where}': expected a number, got {v!r}")
    if not math.isfinite(v):
        raise InputError(f"field '{where}': non-finite value")
    return float(v)


def _coords(obj, key: str) -> np.ndarray:
    v = obj.get(key)
    if not isinstance(v, list) or not v:
        raise InputError(f"field '{key}': expected a non-empty list of [x, y] pairs")
    out = []
    for i, p in enumerate(v):
        if not isinstance(p, list) or len(p) != 2:
            raise InputError(f"field '{key}[{i}]': expected [x, y]")
        out.append([_number(p[0], f"{key}[{i}][0]"), _number(p[1], f"{key}[{i}][1]")])
    return np.array(out)


def read_curve(path) -> PlanarDomain:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"line {e.lineno}, column {e.colno}: {e.msg}") from e
    return parse_curve(obj)


def curve_payload(domain: PlanarDomain) -> dict:
    if domain.kind == "jordan":
        return {"kind": "jordan", "vertices": domain.vertices}
    return {"kind": "graph", "vertices": domain.vertices}


def write_curve(path, domain: PlanarDomain, config: RunConfig, spec: dict | None = None):
    payload = {"header": _json_header(config)}
    if spec is not None:
        payload["header"]["corpus_spec"] = spec
    payload.update(curve_payload(domain))
    _write_text(path, _dump_json(payload))


# measures -----------------------------------------------------------------------


def write_measure(path, mu: WeightedPointSet, config: RunConfig, spec: dict | None = None):
    buf = _io.StringIO()
    buf.write(_comment_header(config))
    if spec is not None:
        buf.write(f"# corpus_spec={json.dumps(_clean(spec), sort_keys=True)}\n")
    if mu.root_center is not None:
        buf.write(f"# root_center={fmt(mu.root_center[0])},{fmt(mu.root_center[1])}\n")
    if mu.root_radius is not None:
        buf.write(f"# root_radius={fmt(mu.root_radius)}\n")
    buf.write("x,y,w\n")
    for (x, y), w in zip(mu.points, mu.weights):
        buf.write(f"{fmt(x)},{fmt(y)},{fmt(w)}\n")
    _write_text(path, buf.getvalue())


def read_measure(path) -> WeightedPointSet:
    """Read ``x,y,w`` rows; '#' lines are comments, root ball keys are honoured."""
    center = None
    radius = None
    rows = []
    header_seen = False
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                try:
                    if body.startswith("root_center="):
                        center = [float(t) for t in body.split("=", 1)[1].split(",")]
                    elif body.startswith("root_radius="):
                        radius = float(body.split("=", 1)[1])
                except ValueError as e:
                    raise InputError(f"line {lineno}: bad root ball comment") from e
                continue
            if not header_seen:
                if [t.strip() for t in s.split(",")] != ["x", "y", "w"]:
                    raise InputError(f"line {lineno}: expected header 'x,y,w'")
                header_seen = True
                continue
            fields = next(csv.reader([s]))
            if len(fields) != 3:
                raise InputError(f"line {lineno}: expected 3 fields, got {len(fields)}")
            vals = []
            for name, t in zip("xyw", fields):
                try:
                    v = float(t)
                except ValueError:
                    raise InputError(f"line {lineno}, field '{name}': not a number: {t!r}") from None
                if not math.isfinite(v):
                    raise InputError(f"line {lineno}, field '{name}': non-finite value")
                vals.append(v)
            if vals[2] <= 0:
                raise InputError(f"line {lineno}, field 'w': weights must be positive")
            rows.append(vals)
    if not header_seen:
        raise InputError("line 1: expected header 'x,y,w'")
    if not rows:
        raise InputError("no data rows")
    a = np.array(rows)
    if center is not None and len(center) != 2:
        raise InputError("root_center must have two coordinates")
    return WeightedPointSet(a[:, :2], a[:, 2], root_center=center, root_radius=radius)


# reports ------------------------------------------------------------------------


def write_table(path, columns: list, rows, config: RunConfig):
    buf = _io.StringIO()
    buf.write(_comment_header(config))
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    _write_text(path, buf.getvalue())


def report_columns(beta_scales) -> list:
    return ["x", "y", "eps_energy", "alpha_energy", "apsi_energy"] + [f"beta_r{fmt(s)}" for s in beta_scales]


def write_report(path, reports, beta_scales, config: RunConfig):
    """One row per CoefficientReport."""
    rows = []
    for rep in reports:
        rows.append([rep.point[0], rep.point[1], rep.eps_energy, rep.alpha_energy, rep.a_psi_energy] + [b for _, b in rep.beta_profile])
    write_table(path, report_columns(beta_scales), rows, config)


def write_verify(path, records: list, config: RunConfig, summary: dict | None = None):
    payload = {"header": _json_header(config)}
    if summary:
        payload["summary"] = summary
    payload["records"] = records
    _write_text(path, _dump_json(payload))


def graph_payload(construction) -> dict:
    g = construction.graph
    part = construction.partition
    stop = construction.stopping
    d = construction.diagnostics
    return {
        "grid": g.grid,
        "values": g.values,
        "pieces": [{"interval": list(p.interval), "slope": p.slope, "intercept": p.intercept} for p in g.pieces],
        "z_mass_fraction": part.z_mass_fraction,
        "ld_mass_fraction": part.ld_mass_fraction,
        "ba_mass_fraction": part.ba_mass_fraction,
        "frame": {"origin": stop.motion.origin, "angle": stop.motion.angle, "R": stop.R},
        "slope": g.slope_on_grid(),
        "diagnostics": asdict(d),
    }


def write_graph(path, construction, config: RunConfig):
    payload = {"header": _json_header(config)}
    payload.update(graph_payload(construction))
    _write_text(path, _dump_json(payload))


# SVG ----------------------------------------------------------------------------


def _bbox(arrays) -> tuple:
    pts = np.vstack([np.asarray(a, dtype=float).reshape(-1, 2) for a in arrays if len(a)])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12 * max(1.0, float(np.max(np.abs(pts)))))
    pad = 0.05 * span
    return lo - pad, hi + pad


def render_svg(path, config: RunConfig, polylines=(), points=None, point_colors=None, closed=()):
    """Polylines and points in world coordinates (y up), viewBox = bbox padded 5%."""
    polylines = [np.asarray(p, dtype=float) for p in polylines]
    arrays = list(polylines)
    if points is not None and len(points):
        arrays.append(np.asarray(points, dtype=float))
    lo, hi = _bbox(arrays)
    w, h = hi - lo
    stroke = fmt(float(max(w, h)) / 400.0)
    out = ["<!--"]
    out += [f"  {ln}" for ln in config.header_lines()]
    out.append("-->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{fmt(lo[0])} {fmt(-hi[1])} {fmt(w)} {fmt(h)}">')
    for k, poly in enumerate(polylines):
        coords = " ".join(f"{fmt(x)},{fmt(-y)}" for x, y in poly)
        tag = "polygon" if k < len(closed) and closed[k] else "polyline"
        out.append(f'<{tag} points="{coords}" fill="none" stroke="black" stroke-width="{stroke}"/>')
    if points is not None:
        rad = fmt(float(max(w, h)) / 300.0)
        colors = point_colors if point_colors is not None else ["#1f77b4"] * len(points)
        for (x, y), c in zip(np.asarray(points, dtype=float), colors):
            out.append(f'<circle cx="{fmt(x)}" cy="{fmt(-y)}" r="{rad}" fill="{c}"/>')
    out.append("</svg>")
    _write_text(path, "\n".join(out) + "\n")


def read_table(path) -> tuple:
    """(columns, rows) of a table written by :func:`write_table`; cells stay strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def table_column(path, name: str) -> np.ndarray:
    cols, rows = read_table(path)
    j = cols.index(name)
    return np.array([float(r[j]) for r in rows])
