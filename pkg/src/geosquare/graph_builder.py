"""Stopping-time construction of a Lipschitz graph from a weighted point set.

Pipeline: normalise (rigid motion taking the root ball's best line to the
horizontal axis) -> stopping radii h on a radius ladder -> d, D -> Whitney
intervals on the axis -> affine pieces from very good balls -> partition of
unity blend A -> Z / LD / BA labels -> closeness diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import bridge
from .multiscale import StripFit, _canon_angle, strip_fit


class EmptyBall(ValueError):
    pass


class NoVeryGoodBall(RuntimeError):
    pass


class NoCandidateBall(RuntimeError):
    def __init__(self, interval):
        super().__init__(f"no very good ball for Whitney interval {interval}")
        self.interval = interval


class ResolutionFloorHit(RuntimeError):
    pass


class ConstructionError(AssertionError):
    pass


# inputs ------------------------------------------------------------------------


@dataclass
class WeightedPointSet:
    points: np.ndarray
    weights: np.ndarray
    root_center: np.ndarray | None = None
    root_radius: float | None = None
    off_curve: np.ndarray | None = None  # generator bookkeeping, never used by the construction

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.points.shape[1] != 2 or len(self.points) != len(self.weights):
            raise ValueError("points must be (n, 2) with one weight each")
        if not np.all(np.isfinite(self.points)) or not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite point or weight")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if self.root_center is not None:
            self.root_center = np.asarray(self.root_center, dtype=float).reshape(2)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self) -> int:
        return len(self.weights)

    def mass_in(self, center, r: float) -> float:
        c = np.asarray(center, dtype=float)
        d = np.hypot(*(self.points - c).T)
        return float(np.sum(self.weights[d < r]))

    def growth_constant(self, radii_per_point: int = 16) -> float:
        """sup of mu(B(x, r)) / r over balls centred at support points, sampled."""
        pts = self.points
        best = 0.0
        for i in range(len(pts)):
            d = np.hypot(*(pts - pts[i]).T)
            order = np.argsort(d, kind="stable")
            ds = d[order]
            cum = np.cumsum(self.weights[order])
            # mu(B(x, r)) / r is maximised just above a sample distance
            pos = ds > 0
            if np.any(pos):
                best = max(best, float(np.max(cum[pos] / (ds[pos] * (1 + 1e-12)))))
        return best


@dataclass(frozen=True)
class ConstructionParams:
    theta: float = 0.004
    alpha: float = 0.1
    flat_param: float = 0.002
    c0: float = 0.5
    radii_per_octave: int = 8
    octaves: int = 24
    grid_points: int = 4097
    strict_floor: bool = False

    def __post_init__(self):
        if not (0 < self.theta < self.c0 <= 1):
            raise ValueError("need 0 < theta < c0 <= 1")
        if not (0 < self.alpha <= 0.1):
            raise ValueError("need 0 < alpha <= 0.1")
        if not (0 < self.flat_param < self.theta):
            raise ValueError("need 0 < flat_param < theta")
        if self.radii_per_octave < 1 or self.octaves < 1:
            raise ValueError("ladder must have at least one step")


@dataclass(frozen=True)
class RigidMotion:
    """p -> rot @ (p - origin); maps the root line to the horizontal axis."""

    origin: np.ndarray
    angle: float

    @property
    def rot(self) -> np.ndarray:
        c, s = math.cos(-self.angle), math.sin(-self.angle)
        return np.array([[c, -s], [s, c]])

    def apply(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=float) - self.origin) @ self.rot.T

    def invert(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float) @ self.rot + self.origin


def _gamma_samples(domain, center, r: float) -> np.ndarray:
    from .multiscale import boundary_samples

    return boundary_samples(domain, center, r)


def normalize(mu: WeightedPointSet, center=None, R=None, domain=None, root_scale: float = 2.0):
    """Rigid motion putting the best line of the root ball on the x axis.

    The best line is that of Gamma in B0 when ``domain`` is given and that
    of the support points otherwise.  Returns ``(points, R', motion)``: the
    root centre moves to its projection on the best line and the radius
    grows by that displacement so the new root ball still contains the old
    one.
    """
    if not 1.0 <= root_scale <= 2.0:
        raise ValueError("root_scale must lie in [1, 2]")
    c = np.asarray(center if center is not None else mu.root_center, dtype=float)
    R = float(R if R is not None else mu.root_radius)
    d = np.hypot(*(mu.points - c).T)
    inside = mu.points[d <= R]
    if len(inside) == 0:
        raise EmptyBall("root ball holds no mass")
    # the root ball may be replaced by one of at most double radius; the
    # doubled ball's best line follows Gamma further out
    R2 = root_scale * R
    if domain is not None:
        inside = _gamma_samples(domain, c, R2)
    fit = strip_fit(inside, c, R2)
    n = fit.normal
    x0 = c - float((c - fit.anchor) @ n) * n
    motion = RigidMotion(x0, fit.angle)
    return motion.apply(mu.points), max(R2, R + float(np.hypot(*(c - x0)))), motion


# radius ladder and stopping radii ------------------------------------------------


@dataclass(frozen=True)
class Ladder:
    radii: np.ndarray  # decreasing, radii[0] = 50 R

    @classmethod
    def build(cls, R: float, params: ConstructionParams) -> "Ladder":
        k = np.arange(params.radii_per_octave * params.octaves + 1)
        r = 50.0 * R * 2.0 ** (-k / params.radii_per_octave)
        r.setflags(write=False)
        return cls(r)

    @property
    def floor(self) -> float:
        return float(self.radii[-1])


def _angle_to_axis(direction: np.ndarray) -> float:
    return abs(math.atan2(direction[1], direction[0]))


def _segment_fit(ends: np.ndarray, r: float) -> StripFit:
    d = ends[1] - ends[0]
    th = float(_canon_angle(math.atan2(d[1], d[0])))
    return StripFit(0.0, 0.5 * (ends[0] + ends[1]), np.array([math.cos(th), math.sin(th)]), 0.0)


class LineSource:
    """Best lines L_B in normalised coordinates.

    With a domain, L_B is the minimax line of Gamma in B, as in the
    definition of beta; otherwise the support points in B stand in for
    Gamma.  ``fit`` returns None when Gamma misses the ball.
    """

    def __init__(self, pts: np.ndarray, motion: RigidMotion, domain=None):
        self.pts = pts
        self.motion = motion
        self.domain = domain
        self._all_fit = None

    @property
    def content_only(self) -> bool:
        """True when L_B depends on the support points in B alone."""
        return self.domain is None

    def fit(self, center, idx: np.ndarray, r: float):
        c = np.asarray(center, dtype=float)
        if self.domain is not None:
            samples = _gamma_samples(self.domain, self.motion.invert(c), r)
            if len(samples) == 0:
                return None
            return strip_fit(self.motion.apply(samples), c, r)
        if len(idx) == len(self.pts):
            if self._all_fit is None:
                self._all_fit = strip_fit(self.pts, np.zeros(2), 1.0)
            return self._all_fit
        return strip_fit(self.pts[idx], c, r)


    def ladder(self, center, radii: np.ndarray):
        """``k -> fit`` for the balls B(center, radii[k]), Gamma-based only.

        The circle crossings for every radius come from one batched call.
        """
        dom = self.domain
        c0 = np.asarray(center, dtype=float)
        c = self.motion.invert(c0)
        v = dom.vertices
        dv = np.hypot(v[:, 0] - c[0], v[:, 1] - c[1])
        vorder = np.argsort(dv, kind="stable")
        vs = v[vorder]
        dvs = dv[vorder]
        kk, ang, _, _, _ = dom._circle_hits(c, np.asarray(radii, dtype=float))
        horder = np.argsort(kk, kind="stable")
        kk, ang = kk[horder], ang[horder]
        bounds = np.searchsorted(kk, np.arange(len(radii) + 1), side="left")
        rot = self.motion

        def fit(k: int):
            r = float(radii[k])
            a = ang[bounds[k] : bounds[k + 1]]
            m = int(np.searchsorted(dvs, r, side="left"))
            hits = c + r * np.column_stack([np.cos(a), np.sin(a)])
            if m == 0 and len(hits) == 0:
                return None
            if m == 0 and len(hits) == 2:
                # Gamma cap B is a single segment
                return _segment_fit(rot.apply(hits), r)
            samples = np.vstack([vs[:m], hits]) if m else hits
            return strip_fit(rot.apply(samples), c0, r)

        return fit


class BallOracle:
    """Goodness of balls centred at support points (normalised coordinates)."""

    def __init__(self, pts: np.ndarray, w: np.ndarray, params: ConstructionParams, lines: LineSource):
        self.pts = pts
        self.w = w
        self.params = params
        self.lines = lines

    def angle_ok(self, fit) -> bool:
        return fit is not None and _angle_to_axis(fit.direction) <= self.params.alpha

    def good(self, center, idx, mass: float, r: float):
        """(good, density_ok) for a ball holding points ``idx`` with ``mass``."""
        dens_ok = mass / r >= self.params.theta
        if not dens_ok:
            return False, False
        return self.angle_ok(self.lines.fit(center, idx, r)), True


@dataclass
class PointLadder:
    """Scan result for one support point."""

    h: float
    k_stop: int  # index of h in the ladder
    stop_density_failed: bool | None  # density verdict of the first failing ball (None for Z)


def scan_point(oracle: BallOracle, i: int, ladder: Ladder) -> PointLadder:
    c = oracle.pts[i]
    d = np.hypot(*(oracle.pts - c).T)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    cum = np.concatenate([[0.0], np.cumsum(oracle.w[order])])
    counts = np.searchsorted(ds, ladder.radii, side="left")
    reuse = oracle.lines.content_only
    gamma_fit = None if reuse else oracle.lines.ladder(c, ladder.radii)
    last_m, last_ok = -1, False
    for k, (r, m) in enumerate(zip(ladder.radii, counts)):
        if m == 0:
            raise EmptyBall("ball holds no mass")
        dens = float(cum[m]) / float(r) >= oracle.params.theta
        ok = dens
        if dens:
            if gamma_fit is not None:
                ok = oracle.angle_ok(gamma_fit(k))
            else:
                # point-based lines depend only on the ball's content
                if m != last_m:
                    last_ok = oracle.angle_ok(oracle.lines.fit(c, order[:m], float(r)))
                    last_m = m
                ok = last_ok
        if not ok:
            if k == 0:
                raise NoVeryGoodBall(f"B(x, 50R) is not good at support point {i}")
            return PointLadder(float(ladder.radii[k - 1]), k - 1, not dens)
    return PointLadder(ladder.floor, len(ladder.radii) - 1, None)


# stopping data -------------------------------------------------------------------


@dataclass
class StoppingData:
    points: np.ndarray  # normalised support points
    weights: np.ndarray
    R: float
    ladder: Ladder
    h: np.ndarray
    k_stop: np.ndarray
    density_failed: np.ndarray  # bool; meaningful off Z
    motion: RigidMotion
    lines: LineSource

    @property
    def z0_tol(self) -> float:
        return self.ladder.floor

    @property
    def z_mask(self) -> np.ndarray:
        return self.k_stop == len(self.ladder.radii) - 1

    def d(self, x) -> np.ndarray:
        """d(x) = min_z |x - z| + h(z)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(len(x))
        chunk = max(1, 4_000_000 // len(self.h))
        for lo in range(0, len(x), chunk):
            q = x[lo : lo + chunk]
            dist = np.hypot(q[:, None, 0] - self.points[None, :, 0], q[:, None, 1] - self.points[None, :, 1])
            out[lo : lo + chunk] = np.min(dist + self.h[None, :], axis=1)
        return out

    def D(self, p) -> np.ndarray:
        """D(p) = min_z |p - z_1| + h(z)."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.empty(len(p))
        chunk = max(1, 4_000_000 // len(self.h))
        z1 = self.points[:, 0]
        for lo in range(0, len(p), chunk):
            q = p[lo : lo + chunk]
            out[lo : lo + chunk] = np.min(np.abs(q[:, None] - z1[None, :]) + self.h[None, :], axis=1)
        return out

    def inf_on(self, a: float, b: float) -> float:
        """D(I) for I = [a, b]."""
        z1 = self.points[:, 0]
        gap = np.maximum(0.0, np.maximum(a - z1, z1 - b))
        return float(np.min(gap + self.h))


def stopping_functions(mu: WeightedPointSet, params: ConstructionParams = ConstructionParams(), center=None, R=None, domain=None) -> StoppingData:
    pts, Rn, motion = normalize(mu, center, R, domain)
    ladder = Ladder.build(Rn, params)
    lines = LineSource(pts, motion, domain)
    oracle = BallOracle(pts, mu.weights, params, lines)
    res = [scan_point(oracle, i, ladder) for i in range(len(pts))]
    h = np.array([r.h for r in res])
    k = np.array([r.k_stop for r in res])
    dens = np.array([bool(r.stop_density_failed) for r in res])
    data = StoppingData(pts, mu.weights.copy(), Rn, ladder, h, k, dens, motion, lines)
    # every support point lies in the closed root ball, so B(x, 2R) covers it
    limit = 2.0 * Rn * 2.0 ** (1.0 / params.radii_per_octave) * (1 + 1e-12)
    inside = np.hypot(*pts.T) <= Rn
    if np.any(h[inside] > limit):
        raise ConstructionError("stopping radius above 2R at a point of the root ball")
    return data


def stopping_radius(mu: WeightedPointSet, i: int, params: ConstructionParams = ConstructionParams(), center=None, R=None, domain=None) -> float:
    pts, Rn, motion = normalize(mu, center, R, domain)
    oracle = BallOracle(pts, mu.weights, params, LineSource(pts, motion, domain))
    return scan_point(oracle, i, Ladder.build(Rn, params)).h


def classify_ball(mu: WeightedPointSet, center, r: float, params: ConstructionParams = ConstructionParams(), R: float | None = None, domain=None):
    """{'good': bool, 'very_good': bool} for B(center, r).

    Coordinates are taken as already normalised (L0 is the x axis); a
    ``domain`` given here must live in the same coordinates.
    """
    pts, w = mu.points, mu.weights
    c = np.asarray(center, dtype=float)
    R = float(R if R is not None else mu.root_radius)
    oracle = BallOracle(pts, w, params, LineSource(pts, RigidMotion(np.zeros(2), 0.0), domain))
    d = np.hypot(*(pts - c).T)

    def test(rr):
        idx = np.flatnonzero(d < rr)
        if len(idx) == 0:
            raise EmptyBall("ball holds no mass")
        return oracle.good(c, idx, float(np.sum(w[idx])), rr)[0]

    good = test(r)
    ladder = Ladder.build(R, params).radii
    vg = good and all(test(float(s)) for s in ladder[ladder >= r])
    return {"good": bool(good), "very_good": bool(vg)}


# Whitney cover ---------------------------------------------------------------------


@dataclass
class WhitneyCover:
    intervals: np.ndarray  # (m, 2) emitted, sorted by left end
    clipped: np.ndarray  # (k, 2) floor intervals abutting the stopped set
    root: tuple
    floor: float
    neighbors: list = field(default_factory=list)
    overlap: int = 0
    max_neighbor_ratio: float = 1.0

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    def all_pieces(self) -> np.ndarray:
        both = np.vstack([self.intervals, self.clipped]) if len(self.clipped) else self.intervals
        return both[np.argsort(both[:, 0], kind="stable")] if len(both) else both


def _inf_function(D):
    if hasattr(D, "inf_on"):
        return D.inf_on, getattr(D, "D", None)

    def inf_on(a, b):
        p = np.concatenate([np.linspace(a, b, 65), [min(max(0.0, a), b)]])
        return float(np.min(D(p)))

    return inf_on, D


def whitney_cover(D, root=(0.0, 1.0), floor: float | None = None, strict: bool = False, check: bool = True, n_check: int = 9) -> WhitneyCover:
    """Maximal dyadic intervals I with l(I) < D(I) / 20 inside a dyadic root.

    ``root`` is a dyadic interval [a, a + 2^k).  Descent stops at ``floor``;
    floor intervals that still fail are returned as clipped (they touch the
    stopped set at this resolution) unless ``strict`` raises.
    """
    inf_on, point_D = _inf_function(D)
    a0, b0 = map(float, root)
    L = b0 - a0
    if L <= 0 or abs(math.log2(L) - round(math.log2(L))) > 1e-12:
        raise ValueError("root length must be a power of two")
    floor = floor if floor is not None else L * 2.0 ** -30
    emitted, clipped = [], []
    stack = [(a0, b0)]
    while stack:
        a, b = stack.pop()
        ell = b - a
        if 20.0 * ell < inf_on(a, b):
            emitted.append((a, b))
            continue
        if ell <= floor * (1 + 1e-12):
            if strict:
                raise ResolutionFloorHit(f"descent reached the floor at [{a}, {b})")
            clipped.append((a, b))
            continue
        m = 0.5 * (a + b)
        stack.append((m, b))
        stack.append((a, m))
    iv = np.array(sorted(emitted)) if emitted else np.zeros((0, 2))
    cl = np.array(sorted(clipped)) if clipped else np.zeros((0, 2))
    cover = WhitneyCover(iv, cl, (a0, b0), float(floor))
    if check:
        check_whitney(cover, point_D if point_D is not None else (lambda p: np.array([inf_on(x, x) for x in np.atleast_1d(p)])), n_check)
    return cover


def check_whitney(cover: WhitneyCover, D, n_check: int = 9):
    """Assert properties (a)-(d); records neighbour lists, ratio and overlap."""
    iv = cover.intervals
    m = len(iv)
    # (d) emitted + clipped tile the root
    pieces = cover.all_pieces()
    a0, b0 = cover.root
    if len(pieces):
        if abs(pieces[0, 0] - a0) > 1e-12 * (b0 - a0) or abs(pieces[-1, 1] - b0) > 1e-12 * (b0 - a0):
            raise ConstructionError("Whitney pieces do not reach the root ends")
        if np.any(np.abs(pieces[1:, 0] - pieces[:-1, 1]) > 1e-12 * (b0 - a0)):
            raise ConstructionError("Whitney pieces overlap or leave gaps")
    if m == 0:
        cover.neighbors = []
        return cover
    ell = iv[:, 1] - iv[:, 0]
    c = 0.5 * (iv[:, 0] + iv[:, 1])
    # (a) on samples of 15 R_i
    off = np.linspace(-7.5, 7.5, n_check)
    samples = c[:, None] + ell[:, None] * off[None, :]
    Dv = np.asarray(D(samples.ravel())).reshape(samples.shape)
    lo_ok = Dv >= 5.0 * ell[:, None] * (1 - 1e-12)
    hi_ok = Dv <= 50.0 * ell[:, None] * (1 + 1e-12)
    if not np.all(lo_ok & hi_ok):
        bad = int(np.flatnonzero(~np.all(lo_ok & hi_ok, axis=1))[0])
        raise ConstructionError(f"Whitney property (a) fails on interval {iv[bad].tolist()}")
    # (b), (c): 15 R_i intersections
    lo15 = c - 7.5 * ell
    hi15 = c + 7.5 * ell
    order = np.argsort(lo15, kind="stable")
    neighbors = [[] for _ in range(m)]
    for pos, i in enumerate(order):
        for j in order[pos + 1 :]:
            if lo15[j] >= hi15[i]:
                break
            neighbors[i].append(int(j))
            neighbors[int(j)].append(int(i))
    ratio = 1.0
    for i, nb in enumerate(neighbors):
        if nb:
            ratio = max(ratio, float(np.max(np.maximum(ell[nb] / ell[i], ell[i] / ell[nb]))))
    if ratio > 10.0 * (1 + 1e-12):
        raise ConstructionError(f"Whitney property (b) fails: neighbour ratio {ratio}")
    cover.neighbors = [sorted(nb) for nb in neighbors]
    cover.overlap = max(len(nb) for nb in neighbors)
    cover.max_neighbor_ratio = ratio
    return cover


def dyadic_root(R: float) -> tuple:
    """Smallest dyadic interval [-2^k, 2^k) with 2^k >= 16 R."""
    k = math.ceil(math.log2(16.0 * R))
    L = 2.0 ** k
    return (-L, L)


def _whitney_floor(stop: StoppingData, params: ConstructionParams) -> float:
    z1 = np.sort(stop.points[:, 0])
    gaps = np.diff(z1)
    gaps = gaps[gaps > 0]
    spacing = float(np.median(gaps)) if len(gaps) else stop.ladder.floor
    target = max(stop.ladder.floor, 4.0 * spacing)
    return 2.0 ** math.floor(math.log2(target))


def build_cover(stop: StoppingData, params: ConstructionParams) -> WhitneyCover:
    a, b = dyadic_root(stop.R)
    # the root [-L, L) is two dyadic intervals; descend each
    left = whitney_cover(stop, (a, 0.0), _whitney_floor(stop, params), params.strict_floor, check=False)
    right = whitney_cover(stop, (0.0, b), _whitney_floor(stop, params), params.strict_floor, check=False)
    iv = np.vstack([left.intervals, right.intervals]) if len(left.intervals) + len(right.intervals) else np.zeros((0, 2))
    cl = np.vstack([left.clipped, right.clipped]) if len(left.clipped) + len(right.clipped) else np.zeros((0, 2))
    iv = iv[np.argsort(iv[:, 0], kind="stable")] if len(iv) else iv
    cl = cl[np.argsort(cl[:, 0], kind="stable")] if len(cl) else cl
    cover = WhitneyCover(iv, cl, (a, b), left.floor)
    return check_whitney(cover, stop.D)


# the graph ---------------------------------------------------------------------------


@dataclass
class Piece:
    interval: tuple
    slope: float
    intercept: float  # A_i(p) = slope * p + intercept
    ball_center: tuple | None
    ball_radius: float | None
    in_I0: bool
    clipped: bool


@dataclass
class GraphFunction:
    pieces: list
    grid: np.ndarray
    values: np.ndarray
    z_abscissae: np.ndarray
    z_values: np.ndarray
    R: float

    def __call__(self, p) -> np.ndarray:
        return blend(self.pieces, p)

    def slope_on_grid(self) -> float:
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.grid))))

    def support(self) -> tuple:
        nz = np.flatnonzero(np.abs(self.values) > 1e-12 * self.R)
        if len(nz) == 0:
            return (0.0, 0.0)
        return (float(self.grid[nz[0]]), float(self.grid[nz[-1]]))

    def polyline(self) -> np.ndarray:
        return np.column_stack([self.grid, self.values])


def _bumps(pieces, p):
    p = np.asarray(p, dtype=float)
    chi = np.zeros((len(pieces), len(p)))
    for i, pc in enumerate(pieces):
        a, b = pc.interval
        c = 0.5 * (a + b)
        ell = b - a
        # 1 on R_i, 0 outside 3R_i
        chi[i] = bridge((1.5 * ell - np.abs(p - c)) / ell)
    return chi


def partition_of_unity(pieces, p) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    chi = _bumps(pieces, p)
    s = chi.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, chi / s, 0.0)


def blend(pieces, p) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.zeros(len(p))
    if not pieces:
        return out
    # only pieces whose 3R_i can reach p matter; process in chunks of p
    starts = np.array([pc.interval[0] for pc in pieces])
    ends = np.array([pc.interval[1] for pc in pieces])
    ell = ends - starts
    lo3 = starts - ell
    hi3 = ends + ell
    order = np.argsort(p, kind="stable")
    ps = p[order]
    res = np.zeros(len(p))
    maxlen = float(np.max(hi3 - lo3))
    slope = np.array([pc.slope for pc in pieces])
    icpt = np.array([pc.intercept for pc in pieces])
    by_lo = np.argsort(lo3, kind="stable")
    lo_sorted = lo3[by_lo]
    step = 2048
    for s in range(0, len(ps), step):
        q = ps[s : s + step]
        i0 = np.searchsorted(lo_sorted, q[0] - maxlen, side="left")
        i1 = np.searchsorted(lo_sorted, q[-1], side="right")
        cand = by_lo[i0:i1]
        cand = cand[(hi3[cand] > q[0]) & (lo3[cand] < q[-1])]
        if len(cand) == 0:
            continue
        c = 0.5 * (starts[cand] + ends[cand])
        chi = bridge((1.5 * ell[cand][:, None] - np.abs(q[None, :] - c[:, None])) / ell[cand][:, None])
        tot = chi.sum(axis=0)
        val = (chi * (slope[cand][:, None] * q[None, :] + icpt[cand][:, None])).sum(axis=0)
        res[s : s + step] = np.where(tot > 0, val / np.where(tot > 0, tot, 1.0), 0.0)
    out[order] = res
    return out


def _choose_ball(stop: StoppingData, a: float, b: float):
    """Smallest very good ball whose projection reaches R_i = [a, b].

    Every B(z, r) with h(z) <= r <= 50R is very good, so each support point z
    offers r = max(h(z), dist(z_1, R_i), l(R_i)).  The radius is not rounded
    to the ladder: neighbouring intervals then get balls whose contents
    differ by a thin shell, which keeps their lines close.  Ties go to the
    smallest abscissa.  Returns ``(index, radius)`` or None.
    """
    ell = b - a
    z1 = stop.points[:, 0]
    gap = np.maximum(0.0, np.maximum(a - z1, z1 - b))
    r = np.maximum(np.maximum(stop.h, gap), ell)
    r = np.where(r <= stop.ladder.radii[0], r, np.inf)
    m = float(np.min(r))
    if not np.isfinite(m):
        return None
    tie = np.flatnonzero(r <= m)
    j = int(tie[np.argmin(z1[tie])])
    return j, m


def build_graph(stop: StoppingData, cover: WhitneyCover, params: ConstructionParams = ConstructionParams()) -> GraphFunction:
    R = stop.R
    pieces = []
    fits = {}
    for arr, clipped in ((cover.intervals, False), (cover.clipped, True)):
        for a, b in arr:
            a, b = float(a), float(b)
            in_I0 = (b > -10.0 * R) and (a < 10.0 * R)
            if not in_I0:
                pieces.append(Piece((a, b), 0.0, 0.0, None, None, False, clipped))
                continue
            pick = _choose_ball(stop, a, b)
            if pick is None:
                raise NoCandidateBall((a, b))
            j, r = pick
            key = (j, r)
            if key not in fits:
                c = stop.points[j]
                idx = np.flatnonzero(np.hypot(*(stop.points - c).T) <= r)
                fits[key] = stop.lines.fit(c, idx, r)
            fit = fits[key]
            if fit is None:
                raise NoCandidateBall((a, b))
            d = fit.direction
            slope = d[1] / d[0]
            intercept = fit.anchor[1] - slope * fit.anchor[0]
            pieces.append(Piece((a, b), float(slope), float(intercept), tuple(map(float, stop.points[j])), r, True, clipped))
    pieces.sort(key=lambda pc: pc.interval[0])
    a0, b0 = cover.root
    grid = np.linspace(a0, b0, params.grid_points)
    values = blend(pieces, grid)
    zm = stop.z_mask
    zx = stop.points[zm, 0]
    zy = stop.points[zm, 1]
    order = np.argsort(zx, kind="stable")
    return GraphFunction(pieces, grid, values, zx[order], zy[order], R)


# partition -----------------------------------------------------------------------------


@dataclass(frozen=True)
class PointPartition:
    labels: np.ndarray  # "Z" | "LD" | "BA"
    z_mass_fraction: float
    ld_mass_fraction: float
    ba_mass_fraction: float


def partition_points(stop: StoppingData) -> PointPartition:
    """Z: stopped at the ladder floor; LD: the first failing ball fails density; BA otherwise."""
    z = stop.z_mask
    lab = np.where(z, "Z", np.where(stop.density_failed, "LD", "BA"))
    w = stop.weights
    tot = float(np.sum(w))
    return PointPartition(
        lab,
        float(np.sum(w[lab == "Z"])) / tot,
        float(np.sum(w[lab == "LD"])) / tot,
        float(np.sum(w[lab == "BA"])) / tot,
    )


# diagnostics -----------------------------------------------------------------------------


def _dist_to_polyline(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    a = poly[:-1]
    b = poly[1:]
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    out = np.empty(len(pts))
    chunk = max(1, 2_000_000 // len(a))
    for lo in range(0, len(pts), chunk):
        p = pts[lo : lo + chunk]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mnk,nk->mn", ap, ab) / L2, 0.0, 1.0)
        d = ap - t[..., None] * ab
        out[lo : lo + chunk] = np.sqrt(np.min(np.einsum("mnk,mnk->mn", d, d), axis=1))
    return out


@dataclass
class Diagnostics:
    dist_B0_constant: float
    distG_A_constant: float
    distQ_L_constant: float
    GdistL0_constant: float
    piperp_pairs: int
    piperp_violations: int
    piperp_min_slack: float
    lipschitz_slope: float
    support: tuple
    partition_sum_error: float
    z_on_graph_max: float

    @property
    def piperp_ok(self) -> bool:
        return self.piperp_violations == 0


def _ratio_max(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    pos = den > 0
    vals = np.where(pos, num / np.where(pos, den, 1.0), np.where(num > 1e-12, np.inf, 0.0))
    return float(np.max(vals)) if len(vals) else 0.0


def diagnostics(stop: StoppingData, graph: GraphFunction, params: ConstructionParams = ConstructionParams(), n_pairs: int = 20000, seed: int = 0) -> Diagnostics:
    pts = stop.points
    R = stop.R
    eps = params.flat_param
    poly = graph.polyline()
    dG = _dist_to_polyline(pts, poly)
    z = stop.z_mask
    # Z points lie on G_A up to the sampling of the output grid
    z_err = float(np.max(dG[z])) if np.any(z) else 0.0
    # on G_A itself through the exact values on Pi(Z_0)
    dG = np.where(z, 0.0, dG)
    dpts = stop.d(pts)
    in10 = np.hypot(*pts.T) < 10 * R
    c_B0 = _ratio_max(dG[in10], dpts[in10])
    c_GA = _ratio_max(dG, eps * dpts)
    # G_A within 3B of the stopping balls B(z, h(z)) versus their lines
    c_QL = 0.0
    step = max(1, len(pts) // 200)
    for i in range(0, len(pts), step):
        r = stop.h[i]
        c = pts[i]
        idx = np.flatnonzero(np.hypot(*(pts - c).T) < r)
        fit = stop.lines.fit(c, idx, r)
        if fit is None:
            continue
        near = np.hypot(poly[:, 0] - c[0], poly[:, 1] - c[1]) < 3 * r
        if not np.any(near):
            continue
        dl = np.abs((poly[near] - fit.anchor) @ fit.normal)
        c_QL = max(c_QL, float(np.max(dl)) / (eps * r))
    c_L0 = float(np.max(np.abs(graph.values))) / (eps * R)
    # explicit Lipschitz-type inequality on sampled pairs
    from .corpus import rng

    g = rng(seed)
    n = len(pts)
    i = g.integers(0, n, size=n_pairs)
    j = g.integers(0, n, size=n_pairs)
    lhs = np.abs(pts[i, 1] - pts[j, 1])
    rhs = 6 * params.alpha * np.abs(pts[i, 0] - pts[j, 0]) + 4 * dpts[i] + 4 * dpts[j]
    slack = rhs - lhs
    viol = int(np.count_nonzero(slack < -1e-12 * R))
    pou = partition_of_unity(graph.pieces, graph.grid)
    covered = pou.sum(axis=0) > 0
    pou_err = float(np.max(np.abs(pou.sum(axis=0)[covered] - 1.0))) if np.any(covered) else 0.0
    return Diagnostics(
        c_B0,
        c_GA,
        c_QL,
        c_L0,
        int(n_pairs),
        viol,
        float(np.min(slack)),
        graph.slope_on_grid(),
        graph.support(),
        pou_err,
        z_err,
    )


# driver --------------------------------------------------------------------------------


@dataclass
class Construction:
    stopping: StoppingData
    cover: WhitneyCover
    graph: GraphFunction
    partition: PointPartition
    diagnostics: Diagnostics
    params: ConstructionParams


def construct(mu: WeightedPointSet, params: ConstructionParams = ConstructionParams(), center=None, R=None, domain=None) -> Construction:
    stop = stopping_functions(mu, params, center, R, domain)
    cover = build_cover(stop, params)
    graph = build_graph(stop, cover, params)
    part = partition_points(stop)
    diag = diagnostics(stop, graph, params)
    lo, hi = diag.support
    if lo < -12 * stop.R - 1e-9 or hi > 12 * stop.R + 1e-9:
        raise ConstructionError(f"graph support {diag.support} leaves [-12R, 12R]")
    return Construction(stop, cover, graph, part, diag, params)
