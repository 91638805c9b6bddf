"""Deterministic test curves, graphs and measures.

Random choices use numpy's Philox4x64 counter-based generator keyed directly by
the 64-bit seed (``Philox(key=seed)``, counter 0).  With seed 0 the first three
``random()`` draws are pinned in the test suite so other implementations can
reproduce the corpus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve_model import PlanarDomain
from .graph_builder import WeightedPointSet
from .kernel import bridge
from .spectral_oracle import GraphFunction1D


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & (2 ** 64 - 1)))


@dataclass(frozen=True)
class CorpusSpec:
    name: str
    generator: str
    params: dict = field(default_factory=dict)
    seed: int = 0


# curves ----------------------------------------------------------------------


def gen_circle(n: int = 4096) -> PlanarDomain:
    """Regular n-gon inscribed in the unit circle, vertex 0 at (1, 0)."""
    if n < 64:
        raise ValueError("n must be at least 64")
    th = 2.0 * math.pi * np.arange(n) / n
    return PlanarDomain.jordan(np.column_stack([np.cos(th), np.sin(th)]), validate=False)


def circle_epsilon(r):
    """eps(x, r) for x on the unit circle: |I+| = 2 r arccos(r / 2)."""
    r = np.asarray(r, dtype=float)
    return 2.0 * np.arcsin(r / 2.0)


def gen_square(side: float = 1.0) -> PlanarDomain:
    s = float(side)
    return PlanarDomain.jordan([[0, 0], [s, 0], [s, s], [0, s]])


def gen_wedge(omega: float, arc_per_radian: int = 64) -> PlanarDomain:
    """Sector of opening omega with its apex at the origin, sides of length 2
    symmetric about the positive y axis, closed by an arc of radius 2."""
    if not (0.1 < omega < 2 * math.pi - 0.1):
        raise ValueError("omega must lie in (0.1, 2 pi - 0.1)")
    a0 = 0.5 * math.pi - 0.5 * omega
    n_arc = max(8, math.ceil(omega * arc_per_radian))
    th = a0 + omega * np.arange(n_arc + 1) / n_arc
    arc = 2.0 * np.column_stack([np.cos(th), np.sin(th)])
    return PlanarDomain.jordan(np.vstack([[0.0, 0.0], arc]))


def wedge_epsilon(omega: float) -> float:
    """eps at the apex for r <= 0.1: arcs omega r and (2 pi - omega) r."""
    return abs(math.pi - omega)


def koch_vertices(depth: int) -> np.ndarray:
    if not 0 <= depth <= 8:
        raise ValueError("depth must lie in 0..8")
    ang = math.pi / 2 + 2 * math.pi * np.arange(3) / 3
    v = np.column_stack([np.cos(ang), np.sin(ang)]) / math.sqrt(3.0)
    rot = np.array([[0.5, math.sqrt(3) / 2], [-math.sqrt(3) / 2, 0.5]])  # -60 degrees
    for _ in range(depth):
        p = v
        q = np.roll(v, -1, axis=0)
        d = (q - p) / 3.0
        a = p + d
        b = p + 2.0 * d
        peak = a + d @ rot.T
        v = np.stack([p, a, peak, b], axis=1).reshape(-1, 2)
    return v


def gen_koch(depth: int) -> PlanarDomain:
    """Koch snowflake of unit initial side, centred at the origin, bumps outward."""
    return PlanarDomain.jordan(koch_vertices(depth), validate=False)


def gen_line(half_length: float = 1.0, n: int = 2) -> PlanarDomain:
    xs = np.linspace(-half_length, half_length, max(n, 2))
    return PlanarDomain.graph(xs, np.zeros_like(xs))


def smooth_window(t, flat: float = 0.6):
    """1 on |t| <= flat, 0 at |t| >= 1, C-infinity in between."""
    t = np.abs(np.asarray(t, dtype=float))
    return bridge((1.0 - t) / (1.0 - flat))


def gen_lipschitz_graph(seed: int, degree: int = 6, slope_cap: float = 0.05, support=(-1.0, 1.0), n_cells: int = 256):
    """Random trig polynomial times a smooth window, scaled to slope exactly slope_cap.

    Returns ``(GraphFunction1D, PlanarDomain)``.
    """
    if slope_cap > 0.1:
        raise ValueError("slope_cap must not exceed 0.1")
    if slope_cap < 0:
        raise ValueError("slope_cap must be non-negative")
    a, b = map(float, support)
    if not b > a:
        raise ValueError("empty support")
    g = rng(seed)
    k = np.arange(1, degree + 1)
    ca = g.standard_normal(degree) / k
    cb = g.standard_normal(degree) / k
    xs = np.linspace(a, b, n_cells + 1)
    t = (2.0 * xs - (a + b)) / (b - a)
    base = np.cos(np.pi * np.outer(t, k)) @ ca + np.sin(np.pi * np.outer(t, k)) @ cb
    raw = smooth_window(t) * base
    raw[0] = raw[-1] = 0.0
    dx = (b - a) / n_cells
    peak = np.max(np.abs(np.diff(raw))) / dx
    vals = np.zeros_like(raw) if slope_cap == 0 or peak == 0 else raw * (slope_cap / peak)
    f = GraphFunction1D(a, dx, vals)
    return f, f.domain()


# measures ----------------------------------------------------------------------


def _polyline(domain: PlanarDomain) -> np.ndarray:
    if domain.kind == "jordan":
        return np.vstack([domain.vertices, domain.vertices[:1]])
    return domain.vertices


def arclength_points(domain: PlanarDomain, n: int) -> tuple:
    """Midpoints of n equal-arclength cells of Gamma and the total length.

    For graph domains only the finite polyline (the support) is used.
    """
    if n < 1:
        raise ValueError("n must be positive")
    poly = _polyline(domain)
    seg = np.diff(poly, axis=0)
    ln = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(ln)])
    total = float(cum[-1])
    s = (np.arange(n) + 0.5) * (total / n)
    j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[j]) / ln[j]
    return poly[j] + frac[:, None] * seg[j], total


def sample_measure(domain: PlanarDomain, n: int, mode: str = "arclength", p: float = 0.0, seed: int = 0, n_clusters: int = 3) -> WeightedPointSet:
    """Equal weights at the midpoints of n equal-arclength cells of Gamma.

    For graphs only the graph over the support counts.  ``mode="noise"``
    moves round(p n) of the points into seeded clusters off the curve.
    """
    if n < 100:
        raise ValueError("n must be at least 100")
    poly = _polyline(domain)
    seg = np.diff(poly, axis=0)
    ln = np.hypot(seg[:, 0], seg[:, 1])
    pts, total = arclength_points(domain, n)
    w = np.full(n, total / n)
    off = np.zeros(n, dtype=bool)
    if mode == "noise":
        if not 0 <= p < 1:
            raise ValueError("p must lie in [0, 1)")
        g = rng(seed)
        m = int(round(p * n))
        if m:
            idx = np.sort(g.choice(n, size=m, replace=False))
            diam = domain.diam
            centers = []
            while len(centers) < n_clusters:
                c = np.array([g.uniform(-0.4, 0.4), g.uniform(0.1, 0.3)]) * diam
                c = c + 0.5 * (pts.min(axis=0) + pts.max(axis=0)) * np.array([1.0, 0.0])
                if domain.distance(c[None, :])[0] > 0.05 * diam:
                    centers.append(c)
            which = g.integers(0, n_clusters, size=m)
            jitter = g.normal(scale=0.002 * diam, size=(m, 2))
            pts[idx] = np.array(centers)[which] + jitter
            off[idx] = True
    elif mode != "arclength":
        raise ValueError(f"unknown mode {mode!r}")
    # root centre: the point of Gamma nearest the bounding-box centre
    mid = 0.5 * (poly.min(axis=0) + poly.max(axis=0))
    ab = seg
    t = np.clip(np.einsum("ij,ij->i", mid - poly[:-1], ab) / np.maximum(ln ** 2, 1e-300), 0.0, 1.0)
    foot = poly[:-1] + t[:, None] * ab
    center = foot[np.argmin(np.hypot(*(foot - mid).T))]
    return WeightedPointSet(pts, w, root_center=center, root_radius=total, off_curve=off)


# named specs ----------------------------------------------------------------------


def generate(spec: CorpusSpec) -> PlanarDomain:
    """Curve of a CorpusSpec; generator ids: circle, square, wedge, koch, line, lipschitz."""
    p = dict(spec.params)
    g = spec.generator
    if g == "circle":
        return gen_circle(int(p.get("n", 4096)))
    if g == "square":
        return gen_square(float(p.get("side", 1.0)))
    if g == "wedge":
        return gen_wedge(float(p["omega"]))
    if g == "koch":
        return gen_koch(int(p["depth"]))
    if g == "line":
        return gen_line(float(p.get("half_length", 1.0)))
    if g == "lipschitz":
        return gen_lipschitz_graph(spec.seed, int(p.get("degree", 6)), float(p.get("slope_cap", 0.05)))[1]
    raise ValueError(f"unknown generator {g!r}")


# brute-force validation of the closed-form oracles ---------------------------------


def _longest_runs(mask: np.ndarray) -> tuple:
    """Longest circular runs of True and of False, in samples."""
    n = len(mask)
    if mask.all():
        return n, 0
    if not mask.any():
        return 0, n
    start = int(np.flatnonzero(mask != np.roll(mask, 1))[0])
    m = np.roll(mask, -start)
    edges = np.flatnonzero(np.diff(m.astype(np.int8))) + 1
    bounds = np.concatenate([[0], edges, [n]])
    lengths = np.diff(bounds)
    vals = m[bounds[:-1]]
    return int(lengths[vals].max(initial=0)), int(lengths[~vals].max(initial=0))


def scan_epsilon(inside, x, r: float, n_samples: int = 10 ** 6) -> float:
    """eps(x, r) by classifying n_samples equally spaced points of the circle."""
    th = 2.0 * math.pi * (np.arange(n_samples) + 0.5) / n_samples
    p = np.column_stack([x[0] + r * np.cos(th), x[1] + r * np.sin(th)])
    lp, lm = _longest_runs(inside(p))
    step = 2.0 * math.pi * r / n_samples
    half = math.pi * r
    return max(abs(half - lp * step), abs(half - lm * step)) / r


def validate_oracles(n_samples: int = 10 ** 6, tol: float = 1e-4) -> list:
    """Check circle_epsilon and wedge_epsilon against angular scans of the exact sets.

    Returns ``(name, scanned, oracle, ok)`` tuples.
    """
    out = []
    disc = lambda p: np.hypot(p[:, 0], p[:, 1]) < 1.0  # noqa: E731
    for th, r in [(0.0, 0.01), (0.7, 0.3), (2.0, 1.0), (4.0, 1.5), (5.5, 1.9)]:
        x = (math.cos(th), math.sin(th))
        got = scan_epsilon(disc, x, r, n_samples)
        want = float(circle_epsilon(r))
        out.append((f"circle r={r}", got, want, abs(got - want) <= tol))
    for omega in (math.pi / 3, math.pi / 2, math.pi, 3 * math.pi / 2):
        a0 = 0.5 * math.pi - 0.5 * omega

        def sector(p, a0=a0, omega=omega):
            ang = np.mod(np.arctan2(p[:, 1], p[:, 0]) - a0, 2.0 * math.pi)
            return (ang < omega) & (np.hypot(p[:, 0], p[:, 1]) < 2.0)

        for r in (0.01, 0.1):
            got = scan_epsilon(sector, (0.0, 0.0), r, n_samples)
            want = wedge_epsilon(omega)
            out.append((f"wedge omega={omega:.4f} r={r}", got, want, abs(got - want) <= tol))
    return out
