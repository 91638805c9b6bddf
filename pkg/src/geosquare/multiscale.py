"""Scale-indexed coefficients and their dr/r energies.

Coefficients at a point x and radius r:

* ``epsilon_coeff``  longest-arc defect (1/r) max(|pi r - |I+||, |pi r - |I-||)
* ``beta_inf``       half-width of the thinnest strip containing Gamma in B(x, r), over r
* ``alpha_plus``     Gaussian-weighted half-plane defect
* ``a_psi``          the same with the plateau kernel psi

The smoothed coefficients are evaluated in polar coordinates from
g(s) = pi s - H^1(dB(x, s) cap Omega+).  ``a_psi_area`` evaluates the same
quantity as a plain area integral and serves as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve_model import PlanarDomain, as_point
from .kernel import DEFAULT_KERNEL, Kernel, gauss_legendre


class EmptyIntersection(ValueError):
    pass


class Inconclusive(RuntimeError):
    pass


# radial grid ---------------------------------------------------------------


@dataclass(frozen=True)
class RadialGrid:
    """Log-spaced radii r_max * 2^(-k/per_octave) with dr/r weights.

    Cell k spans [e_{k+1}, e_k]; its node is the geometric midpoint and its
    weight ln(e_k / e_{k+1}).  The last cell is clipped at r_min.
    """

    r_min: float
    r_max: float
    per_octave: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, r_min: float, r_max: float, per_octave: int = 64) -> "RadialGrid":
        if not (0 < r_min < r_max):
            raise ValueError("need 0 < r_min < r_max")
        if per_octave < 4:
            raise ValueError("per_octave must be at least 4")
        octaves = math.log2(r_max / r_min)
        n = max(1, math.ceil(per_octave * octaves - 1e-9))
        edges = r_max * 2.0 ** (-np.arange(n + 1) / per_octave)
        edges[-1] = r_min
        nodes = np.sqrt(edges[:-1] * edges[1:])
        weights = np.log(edges[:-1] / edges[1:])
        nodes.setflags(write=False)
        weights.setflags(write=False)
        return cls(float(r_min), float(r_max), int(per_octave), nodes, weights)

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.sum(np.asarray(values) * self.weights))


def default_grid(domain: PlanarDomain, per_octave: int = 64) -> RadialGrid:
    return RadialGrid.build(1e-3 * domain.diam, domain.diam, per_octave)


# epsilon -------------------------------------------------------------------


def epsilon_profile(domain: PlanarDomain, x, radii) -> np.ndarray:
    """eps(x, r) for an array of radii (tangential radii are jittered)."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    _, ip, im = domain.arc_lengths_jittered(x, radii)
    half = math.pi * radii
    return np.maximum(np.abs(half - ip), np.abs(half - im)) / radii


def epsilon_coeff(domain: PlanarDomain, x, r: float) -> float:
    if not r > 0:
        raise ValueError("radius must be positive")
    return float(epsilon_profile(domain, x, [r])[0])


def carleson_energy(domain: PlanarDomain, x, grid: RadialGrid) -> float:
    """Truncated E(x)^2 = sum_k eps(x, r_k)^2 w_k."""
    return grid.integrate(epsilon_profile(domain, x, grid.nodes) ** 2)


# beta ----------------------------------------------------------------------


@dataclass(frozen=True)
class StripFit:
    beta: float
    anchor: np.ndarray  # point on the mid-line
    direction: np.ndarray  # unit vector, angle in (-pi/2, pi/2]
    half_width: float

    @property
    def angle(self) -> float:
        return math.atan2(self.direction[1], self.direction[0])

    @property
    def normal(self) -> np.ndarray:
        return np.array([-self.direction[1], self.direction[0]])

    @property
    def line(self):
        return self.anchor, self.direction


def _hull(points: np.ndarray) -> np.ndarray:
    if len(points) < 3:
        return points
    from scipy.spatial import ConvexHull, QhullError

    try:
        return points[ConvexHull(points).vertices]
    except QhullError:
        # collinear input: the two extreme points span the hull
        c = points - points.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        proj = c @ vt[0]
        return points[[int(np.argmin(proj)), int(np.argmax(proj))]]


def _widths(hull: np.ndarray, theta: np.ndarray) -> np.ndarray:
    nrm = np.column_stack([-np.sin(theta), np.cos(theta)])
    proj = nrm @ hull.T
    return proj.max(axis=1) - proj.min(axis=1)


def _canon_angle(theta):
    """Line angle folded into (-pi/2, pi/2]."""
    t = np.mod(np.asarray(theta, dtype=float) + 0.5 * math.pi, math.pi) - 0.5 * math.pi
    return np.where(t <= -0.5 * math.pi + 1e-15, 0.5 * math.pi, t)


def strip_fit(points, center, r: float, n_dir: int = 64, refine_tol: float = 1e-10) -> StripFit:
    """Thinnest strip containing ``points``; beta = half width / r.

    The width of a convex polygon in direction theta is minimised with one
    side of the strip flush against a hull edge, so the hull-edge directions
    together with a coarse sweep of ``n_dir`` directions contain the exact
    minimiser (``refine_tol`` is therefore always met).  Among directions of
    equal width the one closest to the horizontal wins.  A single point gets
    the horizontal line through it.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise EmptyIntersection("no samples in the ball")
    if n_dir < 8:
        raise ValueError("n_dir too small")
    if not refine_tol > 0:
        raise ValueError("refine_tol must be positive")
    c = as_point(center)
    if not np.any(np.ptp(pts, axis=0) > 0):
        return StripFit(0.0, pts[0].copy(), np.array([1.0, 0.0]), 0.0)
    hull = _hull(pts)
    cand = [np.arange(n_dir) * (math.pi / n_dir)]
    e = hull[np.r_[1 : len(hull), 0]] - hull
    keep = np.hypot(e[:, 0], e[:, 1]) > 0
    cand.append(np.arctan2(e[keep, 1], e[keep, 0]))
    cand = np.concatenate(cand)
    cand = _canon_angle(np.array(cand))
    cw = _widths(hull, cand)
    best = cw.min()
    tie = cw <= best + 1e-12 * max(best, np.ptp(hull, axis=0).max())
    choice = np.flatnonzero(tie)
    # closest to horizontal, then the positive angle for exact symmetry ties
    key = np.lexsort((-cand[choice], np.abs(cand[choice])))
    th = float(cand[choice[key[0]]])
    d = np.array([math.cos(th), math.sin(th)])
    n = np.array([-d[1], d[0]])
    proj = hull @ n
    width = float(proj.max() - proj.min())
    mid = 0.5 * (proj.max() + proj.min())
    anchor = c + (mid - c @ n) * n
    return StripFit(0.5 * width / r, anchor, d, 0.5 * width)


def boundary_samples(domain: PlanarDomain, center, r: float) -> np.ndarray:
    """Points whose convex hull equals that of Gamma cap closed B(center, r)."""
    c = as_point(center)
    v = domain.vertices
    inside = np.hypot(v[:, 0] - c[0], v[:, 1] - c[1]) < r
    k, ang, _, _, _ = domain._circle_hits(c, np.array([float(r)]))
    circ = c + r * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([v[inside], circ])


def beta_inf(domain: PlanarDomain, center, r: float, n_dir: int = 64, refine_tol: float = 1e-10):
    """(beta, (anchor, direction)) for Gamma in B(center, r)."""
    if n_dir < 32:
        raise ValueError("n_dir must be at least 32")
    fit = strip_fit(boundary_samples(domain, center, r), center, r, n_dir, refine_tol)
    return fit.beta, fit.line


def beta_fit(domain: PlanarDomain, center, r: float, n_dir: int = 64) -> StripFit:
    return strip_fit(boundary_samples(domain, center, r), center, r, n_dir)


# polar profile -------------------------------------------------------------


def _thin_log(values: np.ndarray, per_octave: int) -> np.ndarray:
    if len(values) == 0:
        return values
    bins = np.floor(np.log2(values) * per_octave)
    _, first = np.unique(bins, return_index=True)
    return values[first]


@dataclass
class RadialProfile:
    """Samples of g(s) = pi s - H^1(dB(x,s) cap Omega+) on a composite rule.

    On [0, s0] (s0 the first critical radius) g is exactly kappa * s; beyond,
    composite Gauss-Legendre in log s with a cosine map on every interval
    between breakpoints absorbs the square-root behaviour at tangencies.
    ``weights`` are for ds.
    """

    center: np.ndarray
    s0: float
    kappa: float
    s: np.ndarray
    weights: np.ndarray
    g: np.ndarray
    eps: np.ndarray
    s_max: float
    far_fraction: float  # fraction of the circle of radius s_max lying in Omega+

    @classmethod
    def build(
        cls,
        domain: PlanarDomain,
        x,
        s_max: float,
        breakpoints=(),
        n_gl: int = 8,
        fill_per_octave: int = 64,
        max_critical_per_octave: int | None = 256,
    ) -> "RadialProfile":
        c = as_point(x)
        crit = domain.critical_radii(c)
        crit = crit[crit < s_max]
        extra = np.asarray(breakpoints, dtype=float)
        extra = extra[(extra > 0) & (extra < s_max)]
        s0 = float(crit[0]) if len(crit) else s_max
        s0 = min(s0, s_max)
        if max_critical_per_octave is not None and len(crit) > 1:
            crit = np.concatenate([[crit[0]], _thin_log(crit[1:], max_critical_per_octave)])
        lo_fill = max(s0, 1e-7 * s_max)
        n_fill = max(1, math.ceil(fill_per_octave * math.log2(s_max / lo_fill))) if s_max > lo_fill else 0
        fill = lo_fill * (s_max / lo_fill) ** (np.arange(n_fill + 1) / max(n_fill, 1))
        bp = np.unique(np.concatenate([[s0, s_max], crit, extra[extra > s0], fill]))
        bp = bp[(bp >= s0) & (bp <= s_max)]
        # merge breakpoints closer than round-off
        keep = np.concatenate([[True], np.diff(np.log(bp)) > 1e-12])
        bp = bp[keep]
        bp[-1] = s_max
        u, wu = gauss_legendre(n_gl)
        la, lb = np.log(bp[:-1]), np.log(bp[1:])
        span = (lb - la)[:, None]
        cm = 0.5 * (1.0 - np.cos(math.pi * u))
        jac = 0.5 * math.pi * np.sin(math.pi * u)
        logs = la[:, None] + span * cm
        s = np.exp(logs).ravel()
        w = (np.exp(logs) * span * jac * wu).ravel()
        probe_s = np.concatenate([s, [0.5 * s0, s_max]])
        plus, ip, im = domain.arc_lengths_jittered(c, probe_s)
        half = math.pi * probe_s
        g_all = half - plus
        eps_all = np.maximum(np.abs(half - ip), np.abs(half - im)) / probe_s
        kappa = float(g_all[-2] / (0.5 * s0))
        far = float(plus[-1] / (2.0 * math.pi * s_max))
        return cls(c, s0, kappa, s, w, g_all[:-2], eps_all[:-2], float(s_max), far)

    # kernel-weighted integrals

    def _head_first_moment(self, r, kernel: Kernel):
        return self.kappa * r * r * kernel.first_moment(np.minimum(self.s0 / r, kernel.support_end))

    def apsi_signed(self, radii, kernel: Kernel = DEFAULT_KERNEL) -> np.ndarray:
        """(1/r^2) int_0^{1.1 r} phi(s/r) g(s) ds, before the absolute value."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        if np.any(kernel.support_end * radii > self.s_max * (1 + 1e-12)):
            raise ValueError("profile does not reach 1.1 r")
        out = np.empty(len(radii))
        wg = self.weights * self.g
        for i, r in enumerate(radii):
            n = np.searchsorted(self.s, kernel.support_end * r, side="right")
            body = np.sum(kernel.phi(self.s[:n] / r) * wg[:n])
            out[i] = (body + self._head_first_moment(r, kernel)) / (r * r)
        return out

    def apsi(self, radii, kernel: Kernel = DEFAULT_KERNEL) -> np.ndarray:
        return np.abs(self.apsi_signed(radii, kernel))

    def apsi_bound(self, radii, kernel: Kernel = DEFAULT_KERNEL) -> np.ndarray:
        """(1/r^2) int phi(s/r) eps(x,s) s ds, the pointwise majorant of a_psi."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        out = np.empty(len(radii))
        we = self.weights * self.eps * self.s
        head_eps = abs(self.kappa)
        for i, r in enumerate(radii):
            n = np.searchsorted(self.s, kernel.support_end * r, side="right")
            body = np.sum(kernel.phi(self.s[:n] / r) * we[:n])
            head = head_eps * r * r * kernel.first_moment(np.minimum(self.s0 / r, kernel.support_end))
            out[i] = (body + head) / (r * r)
        return out

    def alpha(self, radii) -> np.ndarray:
        """Polar form of alpha+ with the Gaussian tail past s_max in closed form."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        out = np.empty(len(radii))
        wg = self.weights * self.g
        for i, r in enumerate(radii):
            body = np.sum(np.exp(-((self.s / r) ** 2)) * wg)
            head = self.kappa * 0.5 * r * r * (-math.expm1(-((self.s0 / r) ** 2)))
            tail = math.pi * (1.0 - 2.0 * self.far_fraction) * 0.5 * r * r * math.exp(-((self.s_max / r) ** 2))
            out[i] = abs(body + head + tail) / (r * r)
        return out


def _profile_for(domain, x, radii, kernel, reach):
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    bps = np.concatenate([radii * kernel.plateau_end, radii * kernel.support_end])
    return RadialProfile.build(domain, x, reach * radii.max(), breakpoints=bps)


def a_psi(domain: PlanarDomain, x, r: float, kernel: Kernel = DEFAULT_KERNEL) -> float:
    """Polar evaluation of a_psi(x, r)."""
    if not r > 0:
        raise ValueError("radius must be positive")
    prof = _profile_for(domain, x, [r], kernel, kernel.support_end)
    return float(prof.apsi([r], kernel)[0])


def alpha_plus(domain: PlanarDomain, x, r: float) -> float:
    if not r > 0:
        raise ValueError("radius must be positive")
    prof = RadialProfile.build(domain, x, 6.0 * r, breakpoints=[r])
    return float(prof.alpha([r])[0])


def a_psi_energy(domain: PlanarDomain, x, grid: RadialGrid, kernel: Kernel = DEFAULT_KERNEL) -> float:
    prof = _profile_for(domain, x, grid.nodes, kernel, kernel.support_end)
    return grid.integrate(prof.apsi(grid.nodes, kernel) ** 2)


def alpha_energy(domain: PlanarDomain, x, grid: RadialGrid) -> float:
    prof = RadialProfile.build(domain, x, 6.0 * grid.r_max, breakpoints=grid.nodes)
    return grid.integrate(prof.alpha(grid.nodes) ** 2)


# area evaluation of a_psi ------------------------------------------------------


def a_psi_area(
    domain: PlanarDomain,
    x,
    r: float,
    kernel: Kernel = DEFAULT_KERNEL,
    n_line: int = 16,
    n_band: int = 24,
    max_piece: float = 0.1,
) -> float:
    """a_psi(x, r) = |c_psi - r^-2 int_{Omega+} psi((y - x)/r) dy| by slicing.

    Horizontal lines at Gauss nodes (breaks at vertex heights and at |eta| = 1)
    are cut into exact Omega+ intervals; on each, the plateau part is an exact
    length and the transition band uses Gauss-Legendre.
    """
    c = as_point(x)
    R1 = kernel.support_end * r
    P1 = kernel.plateau_end * r
    A, D, tmin, tmax = domain.A, domain.D, domain.tmin, domain.tmax
    finite = np.isfinite(tmin) & np.isfinite(tmax)
    p0 = A[finite] + tmin[finite][:, None] * D[finite]
    p1 = A[finite] + tmax[finite][:, None] * D[finite]
    # only pieces meeting the horizontal slab of the disc can cross a line
    ylo = np.minimum(p0[:, 1], p1[:, 1])
    yhi = np.maximum(p0[:, 1], p1[:, 1])
    sel = (yhi >= c[1] - R1) & (ylo <= c[1] + R1)
    p0, p1 = p0[sel], p1[sel]

    heights = np.concatenate([p0[:, 1], p1[:, 1]]) - c[1]
    brk = [-R1, -P1, 0.0, P1, R1]
    brk.extend(heights[(heights > -R1) & (heights < R1)].tolist())
    # the line mass has kinks where a piece crosses the plateau or support circle
    e = p1 - p0
    q = p0 - c
    ee = np.einsum("ij,ij->i", e, e)
    qe = np.einsum("ij,ij->i", q, e)
    qq = np.einsum("ij,ij->i", q, q)
    for rad in (P1, R1):
        disc = qe * qe - ee * (qq - rad * rad)
        ok = (disc >= 0) & (ee > 0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        for sgn in (-1.0, 1.0):
            t = np.where(ok, (-qe + sgn * sq) / np.where(ee > 0, ee, 1.0), -1.0)
            hit = ok & (t >= 0) & (t <= 1)
            brk.extend((q[hit, 1] + t[hit] * e[hit, 1]).tolist())
    brk = np.unique(np.array(brk))
    pieces = []
    for a, b in zip(brk[:-1], brk[1:]):
        if b - a <= 1e-14 * r:
            continue
        m = max(1, math.ceil((b - a) / (max_piece * r)))
        e = np.linspace(a, b, m + 1)
        pieces.extend(zip(e[:-1], e[1:]))
    pieces = np.array(pieces)
    u, wu = gauss_legendre(n_line)
    cm = 0.5 * (1.0 - np.cos(math.pi * u))
    jac = 0.5 * math.pi * np.sin(math.pi * u)
    span = (pieces[:, 1] - pieces[:, 0])[:, None]
    ys = (pieces[:, 0:1] + span * cm).ravel()
    wy = (span * jac * wu).ravel()

    # Omega+ mass on each line: F(y) = int phi(|(t, y)|/r) 1_{Omega+} dt
    Y = c[1] + ys
    half_w = np.sqrt(np.maximum(R1 * R1 - ys * ys, 0.0))
    tp = np.sqrt(np.maximum(P1 * P1 - ys * ys, 0.0))
    ub, wb = gauss_legendre(n_band)

    def antider(t):
        # P(t) = int_0^t phi(rho(s)) ds for t in [-w, w] per line (rows)
        at = np.abs(t)
        plate = np.minimum(at, tp[:, None])
        hi = np.clip(at, tp[:, None], half_w[:, None])
        seg = hi - tp[:, None]
        nodes = tp[:, None, None] + seg[..., None] * ub
        rho = np.sqrt(nodes * nodes + (ys * ys)[:, None, None]) / r
        band = seg * np.sum(wb * kernel.phi(rho), axis=-1)
        return np.sign(t) * (plate + band)

    # crossings of each line with each selected piece
    y0, y1 = p0[:, 1], p1[:, 1]
    straddle = (y0[None, :] > Y[:, None]) != (y1[None, :] > Y[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = p0[:, 0] + (Y[:, None] - y0) * (p1[:, 0] - p0[:, 0]) / (y1 - y0)
    xint = np.where(straddle, xint - c[0], np.inf)
    # parity of crossings strictly left of the disc decides the state at -w
    left = np.count_nonzero(xint < -half_w[:, None], axis=1)
    if domain.kind == "jordan":
        start_in = (left % 2) == 1
    else:
        start_in = ((Y > 0) & (left % 2 == 0)) | ((Y <= 0) & (left % 2 == 1))
    inner = np.where(np.abs(xint) < half_w[:, None], xint, np.inf)
    inner = np.sort(inner, axis=1)
    n_in = np.count_nonzero(np.isfinite(inner), axis=1)
    kmax = int(n_in.max()) if len(n_in) else 0
    # breakpoints per line: -w, crossings..., w ; state toggles at crossings
    pts = np.full((len(Y), kmax + 2), np.nan)
    pts[:, 0] = -half_w
    if kmax:
        pts[:, 1 : kmax + 1] = np.where(np.isfinite(inner[:, :kmax]), inner[:, :kmax], np.nan)
    idx = np.arange(len(Y))
    pts[idx, n_in + 1] = half_w
    Pv = antider(np.nan_to_num(pts, nan=0.0))
    seg_mass = Pv[:, 1:] - Pv[:, :-1]
    j = np.arange(kmax + 1)[None, :]
    inside = ((j % 2 == 0) == start_in[:, None]) & (j <= n_in[:, None])
    F = np.sum(np.where(inside, seg_mass, 0.0), axis=1)
    total = float(np.sum(F * wy)) / (r * r)
    return abs(kernel.c_psi - total)


# comparison of a_psi and eps energies ------------------------------


@dataclass(frozen=True)
class Lem1Result:
    lhs: float
    rhs_energy: float
    tail: float
    ratio: float


def lem1_tail(M: float, kernel: Kernel = DEFAULT_KERNEL) -> float:
    """2 int_M^inf phi(t) t sqrt(log+(t/M)) dt; zero once M reaches the support end."""
    if M < 1:
        raise ValueError("M must be at least 1")
    if M >= kernel.support_end:
        return 0.0
    u, w = gauss_legendre(64)
    lo = max(M, kernel.plateau_end)
    t = lo + (kernel.support_end - lo) * u
    body = (kernel.support_end - lo) * np.sum(w * kernel.phi(t) * t * np.sqrt(np.log(t / M)))
    if M < kernel.plateau_end:
        t2 = M + (kernel.plateau_end - M) * u
        body += (kernel.plateau_end - M) * np.sum(w * t2 * np.sqrt(np.log(t2 / M)))
    return float(2.0 * body)


def lem1_check(domain: PlanarDomain, x, R: float, M: float, kernel: Kernel = DEFAULT_KERNEL, grid: RadialGrid | None = None) -> Lem1Result:
    """lhs = int_{r_min}^R a_psi^2 dr/r against int_{r_min}^{MR} eps^2 dr/r.

    ``grid`` supplies r_min and per_octave (default r_min = 1e-3 R, 16 per octave).
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    r_min = grid.r_min if grid is not None else 1e-3 * R
    per = grid.per_octave if grid is not None else 16
    g_l = RadialGrid.build(r_min, R, per)
    g_r = RadialGrid.build(r_min, M * R, per)
    lhs = a_psi_energy(domain, x, g_l, kernel)
    rhs = carleson_energy(domain, x, g_r)
    tail = lem1_tail(M, kernel)
    return Lem1Result(lhs, rhs, tail, lhs / (rhs + tail + 1e-300))


# tangents ----------------------------------------------------------------------


def _cone_hits(domain: PlanarDomain, c: np.ndarray, u: np.ndarray, a: float, r: float) -> bool:
    """Does Gamma meet {y in B(c, r): |(y - c).u| > a |y - c|}?"""
    q = domain.A - c
    d = domain.D
    b = np.einsum("ij,ij->i", q, d)
    qq = np.einsum("ij,ij->i", q, q)
    disc = b * b - (qq - r * r)
    ok = disc > 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t0 = np.maximum(domain.tmin, -b - sq)
    t1 = np.minimum(domain.tmax, -b + sq)
    ok &= t1 > t0
    if not np.any(ok):
        return False
    q, d, t0, t1 = q[ok], d[ok], t0[ok], t1[ok]
    # re-anchor each piece at its foot point from c so |q| <= r (no cancellation)
    foot = -b[ok]
    q = q + foot[:, None] * d
    t0, t1 = t0 - foot, t1 - foot
    qu, du = q @ u, d @ u
    qd = np.einsum("ij,ij->i", q, d)
    qq = np.einsum("ij,ij->i", q, q)
    # f(t) = (qu + t du)^2 - a^2 |q + t d|^2
    A2 = du * du - a * a
    B1 = 2.0 * (qu * du - a * a * qd)
    C0 = qu * qu - a * a * qq

    def f(t):
        return A2 * t * t + B1 * t + C0

    tol = 1e-12 * r * r
    best = np.maximum(f(t0), f(t1))
    with np.errstate(divide="ignore", invalid="ignore"):
        ts = np.where(A2 < 0, -B1 / (2.0 * A2), t0)
    inside = (ts > t0) & (ts < t1)
    best = np.where(inside, np.maximum(best, f(np.where(inside, ts, t0))), best)
    return bool(np.any(best > tol))


def cone_separates(domain: PlanarDomain, x, u, a: float, r: float) -> bool:
    """Gamma avoids the double cone X_a(x, u) in B(x, r) and its two halves
    lie on opposite sides of Gamma."""
    c = as_point(x)
    u = np.asarray(u, dtype=float) / np.hypot(*u)
    if _cone_hits(domain, c, u, a, r):
        return False
    labels = domain.classify(np.vstack([c + 0.5 * r * u, c - 0.5 * r * u]))
    return bool(labels[0] * labels[1] == -1)


DEFAULT_APERTURES = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class TangentVerdict:
    verdict: str  # "tangent" | "not_tangent" | "inconclusive"
    direction: np.ndarray  # cone axis u (normal of the fitted line)
    passing_radius: dict  # aperture -> largest grid radius that passes (0 if none)
    finest_passing_scale: float


def tangent_detect(domain: PlanarDomain, x, grid: RadialGrid, apertures=DEFAULT_APERTURES, n_dir: int = 64) -> TangentVerdict:
    """Cone test on the grid radii with the axis orthogonal to the finest-scale
    best line.

    Tangent if every aperture separates at the finest radius.  Not tangent if
    some aperture fails there while the fitted direction is stable between the
    finest radius and twice it (within 0.1 rad); inconclusive otherwise.
    """
    c = as_point(x)
    radii = np.sort(np.asarray(grid.nodes))[::-1]
    finest = float(radii[-1])
    fit = beta_fit(domain, c, finest, n_dir)
    u = fit.normal
    passing = {}
    for a in apertures:
        if not 0 < a < 1:
            raise ValueError("apertures must lie in (0, 1)")
        # passing is monotone in r, so scan from the finest radius outward
        best = 0.0
        for r in radii[::-1]:
            if cone_separates(domain, c, u, a, float(r)):
                best = float(r)
            else:
                break
        passing[float(a)] = best
    if all(v > 0 for v in passing.values()):
        verdict = "tangent"
    else:
        coarse = beta_fit(domain, c, 2.0 * finest, n_dir)
        dang = abs(coarse.angle - fit.angle)
        dang = min(dang, math.pi - dang)
        verdict = "not_tangent" if dang <= 0.1 else "inconclusive"
    fps = min(passing.values()) if passing else 0.0
    return TangentVerdict(verdict, u, passing, fps)


def eps_beta_ratio(domain: PlanarDomain, x, r: float, n_sub: int = 8) -> float:
    """max over r' in (r/2, r) of eps(x, r') / beta_inf(B(x, r))."""
    beta, _ = beta_inf(domain, x, r)
    rs = r * (0.5 + 0.5 * (np.arange(n_sub) + 0.5) / n_sub)
    eps = epsilon_profile(domain, x, rs)
    if beta == 0:
        return 0.0 if np.all(eps <= 1e-9) else math.inf
    return float(eps.max() / beta)


# per-point report ------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientReport:
    point: tuple
    eps_energy: float
    beta_profile: list  # (r, beta)
    alpha_energy: float
    a_psi_energy: float


def coefficient_report(domain: PlanarDomain, x, grid: RadialGrid, beta_scales=(), kernel: Kernel = DEFAULT_KERNEL) -> CoefficientReport:
    c = as_point(x)
    betas = [(float(r), float(beta_inf(domain, c, r)[0])) for r in beta_scales]
    return CoefficientReport(
        (float(c[0]), float(c[1])),
        carleson_energy(domain, c, grid),
        betas,
        alpha_energy(domain, c, grid),
        a_psi_energy(domain, c, grid, kernel),
    )
