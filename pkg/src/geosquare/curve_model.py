"""Planar domains bounded by polylines, point classification and circle profiles.

A domain carries its boundary as a list of oriented straight pieces (segments,
plus two horizontal rays for graph domains).  Every piece keeps the region
Omega+ on its left, which lets a circle-boundary crossing be labelled by which
root of the circle/line quadratic it is.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class DegenerateTangency(ArithmeticError):
    """The circle is tangent to a boundary piece within tolerance."""

    def __init__(self, radius: float, message: str = ""):
        super().__init__(message or f"tangential circle/boundary contact at r={radius!r}")
        self.radius = radius


class InvalidDomain(ValueError):
    pass


class RegionLabel(enum.IntEnum):
    IN_MINUS = -1
    ON_GAMMA = 0
    IN_PLUS = 1


class Point(NamedTuple):
    x: float
    y: float


def as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite point {p!r}")
    return arr


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class CircleProfile:
    center: Point
    radius: float
    arcs: list  # (theta_start, theta_end, RegionLabel); theta_end may exceed 2*pi
    len_plus_total: float
    len_I_plus: float
    len_I_minus: float

    @property
    def total_length(self) -> float:
        return sum((b - a) * self.radius for a, b, _ in self.arcs)


class PlanarDomain:
    """Closed Jordan polyline or the region above a compactly supported graph.

    Use :meth:`jordan` or :meth:`graph` to build one; instances are immutable
    after construction.
    """

    def __init__(self, kind, anchors, dirs, tmin, tmax, vertices, box, graph_xy=None):
        self.kind = kind
        self.A = anchors
        self.D = dirs
        self.tmin = tmin
        self.tmax = tmax
        self.vertices = vertices
        self.box = box  # (xmin, xmax, ymin, ymax)
        self.graph_xy = graph_xy
        self.diam = float(math.hypot(box[1] - box[0], box[3] - box[2]))
        self.snap = 1e-9 * self.diam
        for arr in (self.A, self.D, self.tmin, self.tmax, self.vertices):
            arr.setflags(write=False)

    # construction ---------------------------------------------------------

    @classmethod
    def jordan(cls, vertices, validate: bool = True) -> "PlanarDomain":
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidDomain("vertices must be an (n, 2) array")
        if len(v) > 1 and np.allclose(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise InvalidDomain("a Jordan polyline needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidDomain("non-finite vertex")
        area = _signed_area(v)
        if area == 0.0:
            raise InvalidDomain("zero signed area")
        if area < 0:
            v = v[::-1].copy()
        if validate:
            from shapely.geometry import LinearRing

            if not LinearRing(v).is_simple:
                raise InvalidDomain("polyline self-intersects")
        nxt = np.roll(v, -1, axis=0)
        seg = nxt - v
        length = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(length == 0):
            raise InvalidDomain("repeated consecutive vertex")
        box = (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())
        return cls(
            "jordan",
            v.copy(),
            seg / length[:, None],
            np.zeros(len(v)),
            length,
            v.copy(),
            box,
        )

    @classmethod
    def graph(cls, xs, fs, box=None) -> "PlanarDomain":
        """Omega+ = {y > f(x)}, f piecewise linear through (xs, fs), zero outside."""
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if xs.ndim != 1 or xs.shape != fs.shape or len(xs) < 2:
            raise InvalidDomain("graph needs matching 1-D x and f arrays")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(fs))):
            raise InvalidDomain("non-finite graph sample")
        if np.any(np.diff(xs) <= 0):
            raise InvalidDomain("graph abscissae must be strictly increasing")
        if fs[0] != 0.0 or fs[-1] != 0.0:
            raise InvalidDomain("graph must vanish at both ends of its support")
        pts = np.column_stack([xs, fs])
        seg = np.diff(pts, axis=0)
        length = np.hypot(seg[:, 0], seg[:, 1])
        anchors = np.vstack([[xs[0], 0.0], pts[:-1], [xs[-1], 0.0]])
        dirs = np.vstack([[1.0, 0.0], seg / length[:, None], [1.0, 0.0]])
        tmin = np.concatenate([[-np.inf], np.zeros(len(seg)), [0.0]])
        tmax = np.concatenate([[0.0], length, [np.inf]])
        if box is None:
            half_w = 0.5 * (xs[-1] - xs[0])
            mid = 0.5 * (xs[-1] + xs[0])
            yext = max(float(np.max(np.abs(fs))), half_w)
            box = (mid - 2 * half_w, mid + 2 * half_w, -yext, yext)
        return cls("graph", anchors, dirs, tmin, tmax, pts.copy(), tuple(map(float, box)), (xs.copy(), fs.copy()))

    @classmethod
    def graph_uniform(cls, x0: float, dx: float, f, box=None) -> "PlanarDomain":
        f = np.asarray(f, dtype=float)
        xs = x0 + dx * np.arange(len(f))
        return cls.graph(xs, f, box=box)

    # basic geometry -------------------------------------------------------

    @property
    def n_pieces(self) -> int:
        return len(self.A)

    def scaled(self, lam: float, shift=(0.0, 0.0)) -> "PlanarDomain":
        shift = np.asarray(shift, dtype=float)
        if self.kind == "jordan":
            return PlanarDomain.jordan(self.vertices * lam + shift, validate=False)
        xs, fs = self.graph_xy
        box = (
            self.box[0] * lam + shift[0],
            self.box[1] * lam + shift[0],
            self.box[2] * lam + shift[1],
            self.box[3] * lam + shift[1],
        )
        if shift[1] != 0:
            raise ValueError("graph domains only translate horizontally")
        return PlanarDomain.graph(xs * lam + shift[0], fs * lam, box=box)

    def signed_area(self) -> float:
        if self.kind != "jordan":
            raise TypeError("area is defined for Jordan domains only")
        return _signed_area(self.vertices)

    def perimeter(self) -> float:
        finite = np.isfinite(self.tmax) & np.isfinite(self.tmin)
        return float(np.sum(self.tmax[finite] - self.tmin[finite]))

    def f(self, x):
        """Graph height (graph domains only)."""
        xs, fs = self.graph_xy
        return np.interp(x, xs, fs, left=0.0, right=0.0)

    def distance(self, pts) -> np.ndarray:
        """Euclidean distance from each point to Gamma."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty(len(pts))
        chunk = max(1, 2_000_000 // max(1, self.n_pieces))
        for lo in range(0, len(pts), chunk):
            p = pts[lo : lo + chunk]
            rel = p[:, None, :] - self.A[None, :, :]
            t = np.einsum("mnk,nk->mn", rel, self.D)
            t = np.clip(t, self.tmin, self.tmax)
            d = rel - t[..., None] * self.D[None, :, :]
            out[lo : lo + chunk] = np.sqrt(np.min(np.einsum("mnk,mnk->mn", d, d), axis=1))
        return out

    def _inside_open(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "graph":
            return pts[:, 1] > self.f(pts[:, 0])
        v0 = self.vertices
        v1 = np.roll(v0, -1, axis=0)
        inside = np.zeros(len(pts), dtype=bool)
        chunk = max(1, 2_000_000 // len(v0))
        for lo in range(0, len(pts), chunk):
            p = pts[lo : lo + chunk]
            px, py = p[:, 0:1], p[:, 1:2]
            y0, y1 = v0[:, 1], v1[:, 1]
            straddle = (y0 > py) != (y1 > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = v0[:, 0] + (py - y0) * (v1[:, 0] - v0[:, 0]) / (y1 - y0)
            cross = straddle & (px < xint)
            inside[lo : lo + chunk] = (np.count_nonzero(cross, axis=1) % 2) == 1
        return inside

    def classify(self, pts) -> np.ndarray:
        """Vectorized labels (values of RegionLabel) for an (m, 2) array."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lab = np.where(self._inside_open(pts), 1, -1)
        on = self.distance(pts) <= self.snap
        lab[on] = 0
        return lab

    # circle/boundary intersection -----------------------------------------

    def _circle_hits(self, c: np.ndarray, radii: np.ndarray):
        """All crossings of the circles |y - c| = radii[k] with Gamma.

        Returns (k, angle, sigma, vertex_flag, tangent_flag) arrays; sigma = +1
        when the boundary leaves the disc there, i.e. the counter-clockwise arc
        starting at that crossing lies in Omega+.
        """
        rel = self.A - c
        b = rel[:, 0] * self.D[:, 0] + rel[:, 1] * self.D[:, 1]
        p = self.D[:, 0] * rel[:, 1] - self.D[:, 1] * rel[:, 0]
        tfoot = np.clip(-b, self.tmin, self.tmax)
        near = rel + tfoot[:, None] * self.D
        dmin = np.hypot(near[:, 0], near[:, 1])
        with np.errstate(invalid="ignore"):
            e0 = rel + np.where(np.isfinite(self.tmin), self.tmin, 0.0)[:, None] * self.D
            e1 = rel + np.where(np.isfinite(self.tmax), self.tmax, 0.0)[:, None] * self.D
        dmax = np.maximum(np.hypot(e0[:, 0], e0[:, 1]), np.hypot(e1[:, 0], e1[:, 1]))
        dmax = np.where(np.isfinite(self.tmin) & np.isfinite(self.tmax), dmax, np.inf)

        order = np.argsort(radii, kind="stable")
        rs = radii[order]
        slack = 1e-9 * rs[-1] + 1e-12 * self.diam
        lo = np.searchsorted(rs, dmin - slack, side="left")
        hi = np.searchsorted(rs, dmax + slack, side="right")
        cnt = np.maximum(hi - lo, 0)
        total = int(cnt.sum())
        if total == 0:
            empty = np.zeros(0)
            return empty.astype(int), empty, empty, empty.astype(bool), empty.astype(bool)
        edge = np.repeat(np.arange(len(self.A)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        kk = order[np.repeat(lo, cnt) + offs]
        s = radii[kk]
        pe = np.abs(p[edge])
        disc = (s - pe) * (s + pe)
        sq = np.sqrt(np.maximum(disc, 0.0))
        be = b[edge]
        t_lo_e, t_hi_e = self.tmin[edge], self.tmax[edge]
        tol = 1e-9 * s + 1e-12 * self.diam
        foot = -be
        tangent_pair = (sq <= 1e-9 * s) & (foot > t_lo_e + tol) & (foot < t_hi_e - tol)

        ks, angs, sig, vfl, tfl = [], [], [], [], []
        for sgn in (1.0, -1.0):
            t = foot + sgn * sq
            ok = (t >= t_lo_e - tol) & (t <= t_hi_e + tol) & (disc >= -(tol * s))
            if not np.any(ok):
                continue
            e = edge[ok]
            tt = t[ok]
            q = rel[e] + tt[:, None] * self.D[e]
            ang = np.mod(np.arctan2(q[:, 1], q[:, 0]), TWO_PI)
            vf = (np.abs(tt - t_lo_e[ok]) <= tol[ok]) | (np.abs(tt - t_hi_e[ok]) <= tol[ok])
            ks.append(kk[ok])
            angs.append(ang)
            sig.append(np.full(len(e), sgn))
            vfl.append(vf)
            tfl.append(tangent_pair[ok])
        if not ks:
            empty = np.zeros(0)
            return empty.astype(int), empty, empty, empty.astype(bool), empty.astype(bool)
        return (
            np.concatenate(ks),
            np.concatenate(angs),
            np.concatenate(sig),
            np.concatenate(vfl),
            np.concatenate(tfl),
        )

    def _slow_arcs(self, c, s, angles):
        """Label gaps between sorted angles by classifying their midpoints."""
        a = np.sort(angles)
        keep = np.concatenate([[True], np.diff(a) > 1e-12])
        a = a[keep]
        if len(a) > 1 and (a[0] + TWO_PI - a[-1]) <= 1e-12:
            a = a[1:]
        nxt = np.concatenate([a[1:], [a[0] + TWO_PI]])
        mid = 0.5 * (a + nxt)
        pts = c + s * np.column_stack([np.cos(mid), np.sin(mid)])
        lab = self.classify(pts)
        return a, nxt, lab

    def arc_lengths(self, x, radii, raise_on_tangency: bool = False):
        """Batched circle profiles around one center.

        Returns ``(plus_total, I_plus, I_minus, degenerate)``; ``degenerate``
        marks radii with a tangential contact (lengths there are still filled
        in, but the caller should jitter).
        """
        c = as_point(x)
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        if np.any(radii <= 0):
            raise ValueError("radii must be positive")
        S = len(radii)
        plus = np.zeros(S)
        ip = np.zeros(S)
        im = np.zeros(S)
        degenerate = np.zeros(S, dtype=bool)

        k, ang, sig, vf, tf = self._circle_hits(c, radii)
        counts = np.bincount(k, minlength=S)

        none = counts == 0
        if np.any(none):
            probe = c + np.column_stack([radii[none], np.zeros(int(none.sum()))])
            lab = self.classify(probe)
            full = TWO_PI * radii[none]
            plus[none] = np.where(lab == 1, full, 0.0)
            ip[none] = np.where(lab == 1, full, 0.0)
            im[none] = np.where(lab == -1, full, 0.0)
        if len(k) == 0:
            return plus, ip, im, degenerate

        order = np.lexsort((ang, k))
        k, ang, sig, vf, tf = k[order], ang[order], sig[order], vf[order], tf[order]
        starts = np.concatenate([[0], np.cumsum(counts)])[:-1]
        ends = starts + counts
        n = len(k)
        idx = np.arange(n)
        last = idx == (ends[k] - 1)
        nxt = np.where(last, starts[k], idx + 1)
        gap = ang[nxt] - ang
        gap = np.where(last, gap + TWO_PI, gap)
        alternates = sig[nxt] != sig
        bad = np.bincount(k, weights=(~alternates | vf).astype(float), minlength=S) > 0
        degenerate |= np.bincount(k, weights=tf.astype(float), minlength=S) > 0
        length = gap * radii[k]
        is_plus = sig > 0
        plus_sum = np.bincount(k, weights=np.where(is_plus, length, 0.0), minlength=S)
        good = (~bad) & (counts > 0)
        plus[good] = plus_sum[good]
        for store, mask in ((ip, is_plus), (im, ~is_plus)):
            vals = np.where(mask, length, 0.0)
            mx = np.zeros(S)
            np.maximum.at(mx, k, vals)
            store[good] = mx[good]

        for kk in np.flatnonzero(bad & (counts > 0)):
            a, nx, lab = self._slow_arcs(c, radii[kk], ang[starts[kk] : ends[kk]])
            ln = (nx - a) * radii[kk]
            plus[kk] = float(np.sum(ln[lab == 1]))
            ip[kk] = float(np.max(ln[lab == 1], initial=0.0))
            im[kk] = float(np.max(ln[lab == -1], initial=0.0))
        if raise_on_tangency and np.any(degenerate):
            raise DegenerateTangency(float(radii[np.flatnonzero(degenerate)[0]]))
        return plus, ip, im, degenerate

    def arc_lengths_jittered(self, x, radii, retries: int = 3):
        """Like :meth:`arc_lengths`, retrying tangential radii at r * (1 + 1e-7)."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        plus, ip, im, deg = self.arc_lengths(x, radii)
        used = radii.copy()
        for _ in range(retries):
            if not np.any(deg):
                break
            sel = np.flatnonzero(deg)
            used[sel] = used[sel] * (1.0 + 1e-7)
            p2, i2, m2, d2 = self.arc_lengths(x, used[sel])
            plus[sel], ip[sel], im[sel] = p2, i2, m2
            deg[sel] = d2
        if np.any(deg):
            raise DegenerateTangency(float(radii[np.flatnonzero(deg)[0]]), "tangency persists after jitter")
        return plus, ip, im

    def critical_radii(self, x) -> np.ndarray:
        """Radii where the circle/boundary combinatorics can change: vertex
        distances and tangency distances with the foot inside a piece."""
        c = as_point(x)
        rel = self.A - c
        b = rel[:, 0] * self.D[:, 0] + rel[:, 1] * self.D[:, 1]
        p = np.abs(self.D[:, 0] * rel[:, 1] - self.D[:, 1] * rel[:, 0])
        inside = (-b > self.tmin) & (-b < self.tmax)
        verts = self.vertices - c
        vd = np.hypot(verts[:, 0], verts[:, 1])
        if self.kind == "graph":
            out = np.concatenate([vd, p[inside]])
        else:
            out = np.concatenate([vd, p[inside]])
        out = out[out > 1e-12 * self.diam]
        return np.unique(out)


def classify_point(domain: PlanarDomain, p) -> RegionLabel:
    return RegionLabel(int(domain.classify(as_point(p)[None, :])[0]))


def circle_profile(domain: PlanarDomain, x, r: float) -> CircleProfile:
    """Arc decomposition of the circle of radius r around x."""
    if not r > 0:
        raise ValueError("radius must be positive")
    c = as_point(x)
    k, ang, sig, vf, tf = domain._circle_hits(c, np.array([float(r)]))
    if np.any(tf):
        raise DegenerateTangency(float(r))
    center = Point(float(c[0]), float(c[1]))
    if len(ang) == 0:
        lab = RegionLabel(int(domain.classify(c + np.array([r, 0.0]))[0]))
        full = TWO_PI * r
        return CircleProfile(
            center,
            float(r),
            [(0.0, TWO_PI, lab)],
            full if lab == RegionLabel.IN_PLUS else 0.0,
            full if lab == RegionLabel.IN_PLUS else 0.0,
            full if lab == RegionLabel.IN_MINUS else 0.0,
        )
    order = np.argsort(ang, kind="stable")
    ang, sig, vf = ang[order], sig[order], vf[order]
    nxt_sig = np.roll(sig, -1)
    if np.any(vf) or np.any(nxt_sig == sig):
        a, nx, lab = domain._slow_arcs(c, r, ang)
    else:
        a = ang
        nx = np.concatenate([ang[1:], [ang[0] + TWO_PI]])
        lab = np.where(sig > 0, 1, -1)
    lengths = (nx - a) * r
    arcs = [(float(s0), float(s1), RegionLabel(int(l))) for s0, s1, l in zip(a, nx, lab)]
    plus = lengths[lab == 1]
    minus = lengths[lab == -1]
    return CircleProfile(
        center,
        float(r),
        arcs,
        float(np.sum(plus)),
        float(np.max(plus, initial=0.0)),
        float(np.max(minus, initial=0.0)),
    )


def boundary_arclength_in_plus(domain: PlanarDomain, x, s: float) -> float:
    """H^1 of the part of the circle of radius s around x lying in Omega+."""
    return circle_profile(domain, x, s).len_plus_total


def corkscrew_search(domain: PlanarDomain, x, r: float, grid_n: int = 64):
    """Grid search for the largest balls inside B(x, r) on each side of Gamma.

    Returns ``((center_plus, radius_plus), (center_minus, radius_minus))``; a
    radius of 0 means no grid point on that side.
    """
    c = as_point(x)
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    if not r > 0:
        raise ValueError("radius must be positive")
    if domain.distance(c[None, :])[0] > r:
        raise ValueError("x must lie within distance r of the boundary")
    ticks = (np.arange(grid_n) + 0.5) / grid_n * 2.0 - 1.0
    gx, gy = np.meshgrid(c[0] + r * ticks, c[1] + r * ticks, indexing="xy")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    to_rim = r - np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])
    keep = to_rim > 0
    pts, to_rim = pts[keep], to_rim[keep]
    lab = domain.classify(pts)
    score = np.minimum(domain.distance(pts), to_rim)
    out = []
    for side in (1, -1):
        sel = np.flatnonzero(lab == side)
        if len(sel) == 0:
            out.append((Point(float(c[0]), float(c[1])), 0.0))
            continue
        best = sel[np.argmax(score[sel])]
        out.append((Point(float(pts[best, 0]), float(pts[best, 1])), float(score[best])))
    return tuple(out)
