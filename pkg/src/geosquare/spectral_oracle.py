"""Fourier-side constants and energies for compactly supported graphs.

Fourier convention: f^(xi) = int f(t) exp(-2 pi i xi t) dt.

A piecewise-linear f with nodes x_j and slope jumps ds_j is the hinge sum
f(x) = sum_j ds_j (x - x_j)_+.  Every space-side energy below is built from
that decomposition: the deviation f * phi_r - c f becomes
r sum_j ds_j K((x - x_j)/r) with a universal profile K supported in
[-1.1, 1.1], so each radius costs one discrete convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.signal import fftconvolve

from .curve_model import PlanarDomain
from .kernel import DEFAULT_KERNEL, Kernel, gauss_legendre
from .multiscale import RadialGrid, RadialProfile


class NonEven(ValueError):
    pass


class SlopeTooLarge(ValueError):
    pass


# profile and constants ---------------------------------------------------------


@dataclass(frozen=True)
class Profile1D:
    """Samples phi(j h) for |j| <= n_half."""

    samples: np.ndarray
    step: float
    support: float

    @classmethod
    def from_kernel(cls, kernel: Kernel = DEFAULT_KERNEL, step: float = 1.0 / 512) -> "Profile1D":
        n_half = math.ceil(1.05 * kernel.support_end / step)
        t = np.arange(-n_half, n_half + 1) * step
        return cls(kernel.phi(t), float(step), float(kernel.support_end))

    @property
    def n_half(self) -> int:
        return (len(self.samples) - 1) // 2

    def check_even(self, tol: float = 1e-12):
        if np.max(np.abs(self.samples - self.samples[::-1])) > tol:
            raise NonEven("profile samples are not symmetric")


@dataclass(frozen=True)
class SpectralConstants:
    c_phi: float
    tilde_c: float


def profile_transform(profile: Profile1D, fft_n: int):
    """(xi, phi^(xi)) for xi = k / (fft_n h), k = 0 .. fft_n/2."""
    n = fft_n
    if n < 2 ** 14 or n & (n - 1):
        raise ValueError("fft_n must be a power of two >= 2**14")
    m = profile.n_half
    if 2 * m + 1 > n:
        raise ValueError("fft_n too small for the profile")
    buf = np.zeros(n)
    buf[: m + 1] = profile.samples[m:]
    buf[n - m :] = profile.samples[:m]
    hat = profile.step * np.fft.rfft(buf).real
    xi = np.arange(len(hat)) / (n * profile.step)
    return xi, hat


def spectral_constants(profile: Profile1D, fft_n: int = 2 ** 15) -> SpectralConstants:
    """c(phi) = phi^(0) and tilde_c = int_0^inf |phi^(t) - phi^(0)|^2 dt / t^3."""
    profile.check_even()
    xi, hat = profile_transform(profile, fft_n)
    c = float(hat[0])
    dxi = float(xi[1])
    diff = hat - c
    # near 0: phi^(t) - phi^(0) = -a t^2 + b t^4; fit on the first two bins
    t1, t2 = dxi, 2 * dxi
    M = np.array([[-(t1 ** 2), t1 ** 4], [-(t2 ** 2), t2 ** 4]])
    a, b = np.linalg.solve(M, diff[1:3])
    head = a * a * t1 ** 2 / 2.0 - a * b * t1 ** 4 / 2.0 + b * b * t1 ** 6 / 6.0
    # Simpson over [dxi, xi_K] with an even number of intervals
    K = len(xi) - 1
    if (K - 1) % 2:
        K -= 1
    integrand = diff[1 : K + 1] ** 2 / xi[1 : K + 1] ** 3
    body = simpson(integrand, dx=dxi)
    tail = c * c / (2.0 * xi[K] ** 2)
    return SpectralConstants(c, float(head + body + tail))


# graph functions -----------------------------------------------------------------


@dataclass(frozen=True)
class GraphFunction1D:
    """Piecewise-linear f through (x0 + j dx, values[j]); zero at both ends and outside."""

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or len(v) < 2:
            raise ValueError("need at least two samples")
        if not (np.all(np.isfinite(v)) and math.isfinite(self.x0) and self.dx > 0):
            raise ValueError("non-finite samples or non-positive step")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("f must vanish at both ends of its support")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.values))

    @property
    def support(self) -> tuple:
        return (self.x0, self.x0 + self.dx * (len(self.values) - 1))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.dx

    @property
    def slope_bound(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    @property
    def slope_jumps(self) -> np.ndarray:
        s = self.slopes
        return np.diff(np.concatenate([[0.0], s, [0.0]]))

    def derivative_l2_sq(self) -> float:
        return float(np.sum(np.diff(self.values) ** 2) / self.dx)

    def l2_sq(self) -> float:
        a, b = self.values[:-1], self.values[1:]
        return float(self.dx * np.sum(a * a + a * b + b * b) / 3.0)

    def mass(self) -> float:
        return float(self.dx * np.sum(self.values[:-1] + self.values[1:]) / 2.0)

    def __call__(self, x):
        return np.interp(x, self.xs, self.values, left=0.0, right=0.0)

    def slope_at(self, x):
        x = np.asarray(x, dtype=float)
        j = np.floor((x - self.x0) / self.dx).astype(int)
        s = self.slopes
        ok = (j >= 0) & (j < len(s))
        return np.where(ok, s[np.clip(j, 0, len(s) - 1)], 0.0)

    def antiderivative(self, x):
        """F(x) = int_{-inf}^x f, exact for the piecewise-linear interpolant."""
        x = np.asarray(x, dtype=float)
        v = self.values
        cum = np.concatenate([[0.0], np.cumsum(0.5 * self.dx * (v[:-1] + v[1:]))])
        n = len(v) - 1
        pos = np.clip((x - self.x0) / self.dx, 0.0, float(n))
        j = np.minimum(np.floor(pos).astype(int), n - 1)
        frac = pos - j
        a = v[j]
        b = v[j + 1]
        part = self.dx * (a * frac + 0.5 * (b - a) * frac * frac)
        return cum[j] + part

    def scaled(self, lam: float) -> "GraphFunction1D":
        """f_lam(x) = lam f(x / lam)."""
        return GraphFunction1D(self.x0 * lam, self.dx * lam, lam * self.values)

    def shifted(self, h: float) -> "GraphFunction1D":
        return GraphFunction1D(self.x0 + h, self.dx, self.values)

    def domain(self) -> PlanarDomain:
        return PlanarDomain.graph(self.xs, self.values)


# space-side building blocks ---------------------------------------------------------


@lru_cache(maxsize=8)
def _tables(kernel: Kernel, n: int = 88001):
    """Phi(u) = int_{-inf}^u phi and K(u) = (hinge * phi)(u) - c u_+ on [-1.1, 1.1]."""
    se = kernel.support_end
    u = np.linspace(-se, se, n)
    c = kernel.c_phi
    Phi = c - kernel.upper_mass(u)
    # int_{-se}^u t phi(t) dt = -(int_{|u|}^{se} t phi)
    M1 = -(kernel.first_moment(se) - kernel.first_moment(np.abs(u)))
    K = u * Phi - M1 - c * np.maximum(u, 0.0)
    for arr in (u, Phi, K):
        arr.setflags(write=False)
    return u, Phi, K


def _phi_cdf(kernel: Kernel, u):
    tu, Phi, _ = _tables(kernel)
    return np.interp(u, tu, Phi, left=0.0, right=kernel.c_phi)


def _k_profile(kernel: Kernel, u):
    tu, _, K = _tables(kernel)
    return np.interp(u, tu, K, left=0.0, right=0.0)


def _t_profile(kernel: Kernel, u, w):
    """T(u, w) = w Phi(u) / c + u_+ - (u + w)_+ ; zero for |u| > 1.1 when |w| <= 1."""
    return w * _phi_cdf(kernel, u) / kernel.c_phi + np.maximum(u, 0.0) - np.maximum(u + w, 0.0)


@lru_cache(maxsize=8)
def _profile_norms(kernel: Kernel):
    se = kernel.support_end
    u = np.linspace(-se, se, 44001)
    k2 = float(simpson(_k_profile(kernel, u) ** 2, x=u))
    wn, ww = gauss_legendre(24)
    t2 = 0.0
    for lo in (-1.0, 0.0):
        for wi, wk in zip(lo + wn, ww):
            uu = np.sort(np.concatenate([u, [-wi]]))
            t2 += wk * float(simpson(_t_profile(kernel, uu, wi) ** 2, x=uu))
    return k2, t2


def _step_for(f: GraphFunction1D, r: float, per_width: int):
    q = max(2, 2 * math.ceil(per_width * f.dx / (2.0 * r)))
    q = min(q, 1024)
    return q, f.dx / q


def _upsampled_jumps(f: GraphFunction1D, q: int) -> np.ndarray:
    ds = f.slope_jumps
    up = np.zeros((len(ds) - 1) * q + 1)
    up[::q] = ds
    return up


def _deviation_at(f: GraphFunction1D, r: float, kernel: Kernel, per_width: int) -> float:
    """int |(f * phi_r - c f)(x) / r|^2 dx."""
    q, step = _step_for(f, r, per_width)
    M = math.ceil(kernel.support_end * r / step)
    M += M % 2
    m = np.arange(-M, M + 1)
    ks = _k_profile(kernel, m * step / r)
    v = fftconvolve(_upsampled_jumps(f, q), ks)  # v / r
    return float(simpson(v * v, dx=step))


def _taylor_at(f: GraphFunction1D, r: float, kernel: Kernel, per_width: int, n_w: int) -> float:
    """int_{-1}^{1} dw int dx (sum_j ds_j T((x - x_j)/r, w))^2."""
    q, step = _step_for(f, r, per_width)
    M = math.ceil(kernel.support_end * r / step)
    M += M % 2
    m = np.arange(-M, M + 1)
    up = _upsampled_jumps(f, q)
    wn, ww = gauss_legendre(n_w)
    total = 0.0
    for lo in (-1.0, 0.0):
        for wi, wk in zip(lo + wn, ww):
            ts = _t_profile(kernel, m * step / r, wi)
            v = fftconvolve(up, ts)
            total += wk * float(simpson(v * v, dx=step))
    return total


@dataclass(frozen=True)
class EnergyParts:
    body: float
    lower_tail: float
    upper_tail: float

    @property
    def total(self) -> float:
        return self.body + self.lower_tail + self.upper_tail


def _radii(f: GraphFunction1D, grid: RadialGrid | None, per_octave: int):
    """Radii spanning [dx / 2.2, 64 * support length] (extending ``grid`` if needed)."""
    a, b = f.support
    r_lo = f.dx / 2.2
    r_hi = 64.0 * (b - a)
    if grid is None:
        return RadialGrid.build(r_lo, r_hi, per_octave)
    lo = min(grid.r_min, r_lo)
    hi = max(grid.r_max, r_hi)
    return RadialGrid.build(lo, hi, grid.per_octave)


def deviation_energy_parts(f: GraphFunction1D, kernel: Kernel = DEFAULT_KERNEL, grid: RadialGrid | None = None, per_octave: int = 16, per_width: int = 64) -> EnergyParts:
    g = _radii(f, grid, per_octave)
    vals = np.array([_deviation_at(f, r, kernel, per_width) for r in g.nodes])
    body = g.integrate(vals / 1.0)
    k2, _ = _profile_norms(kernel)
    ds = f.slope_jumps
    # below r_min the kink neighbourhoods do not interact: energy is linear in r
    lower = float(np.sum(ds * ds)) * k2 * g.r_min
    c = kernel.c_phi
    R = g.r_max
    phi_sq = _phi_sq(kernel)
    m = f.mass()
    upper = c * c * f.l2_sq() / (2 * R * R) + (phi_sq - 2 * c) * m * m / (3 * R ** 3)
    return EnergyParts(body, lower, upper)


def deviation_energy_direct(f: GraphFunction1D, profile: Kernel = DEFAULT_KERNEL, grid: RadialGrid | None = None) -> float:
    """int int |(f * phi_r(x) - c f(x)) / r|^2 dr/r dx by space-side quadrature."""
    return deviation_energy_parts(f, profile, grid).total


def _phi_sq(kernel: Kernel) -> float:
    u, w = gauss_legendre(64)
    t = kernel.plateau_end + kernel.width * u
    return 2.0 * (kernel.plateau_end + kernel.width * float(np.sum(w * kernel.phi(t) ** 2)))


def plancherel_energy(f: GraphFunction1D, constants: SpectralConstants) -> float:
    """tilde_c * int |xi f^(xi)|^2 dxi.

    For the piecewise-linear interpolant f^(xi) = dx sinc^2(xi dx) S(xi) with S
    the sample transform; summing the aliases of xi^2 sinc^4 gives the exact
    weight sin^2(pi xi dx) / pi^2 on one period, which a zero-padded FFT
    integrates exactly.
    """
    v = f.values
    M = 1 << max(10, int(math.ceil(math.log2(4 * len(v)))))
    S = np.fft.fft(v, M)
    k = np.arange(M)
    weight = np.sin(math.pi * k / M) ** 2 / math.pi ** 2
    integral = float(np.sum(np.abs(S) ** 2 * weight)) / (M * f.dx)
    return constants.tilde_c * integral


def taylor_deviation_parts(f: GraphFunction1D, kernel: Kernel = DEFAULT_KERNEL, grid: RadialGrid | None = None, per_octave: int = 16, per_width: int = 64, n_w: int = 12) -> EnergyParts:
    g = _radii(f, grid, per_octave)
    vals = np.array([_taylor_at(f, r, kernel, per_width, n_w) for r in g.nodes])
    body = g.integrate(vals)
    _, t2 = _profile_norms(kernel)
    ds = f.slope_jumps
    lower = float(np.sum(ds * ds)) * t2 * g.r_min
    R = g.r_max
    m = f.mass()
    upper = 2.0 * f.l2_sq() / R ** 2 - 2.0 * m * m / (3 * R ** 3)
    return EnergyParts(body, lower, upper)


def taylor_deviation_energy(f: GraphFunction1D, profile: Kernel = DEFAULT_KERNEL, grid: RadialGrid | None = None) -> float:
    """int int int_{|y-x|<=r} |(c^-1 (phi_r * f')(x)(y - x) + f(x) - f(y)) / r|^2 dy/r dx dr/r."""
    return taylor_deviation_parts(f, profile, grid).total


# pointwise quantities -----------------------------------------------------------------


def _band_nodes(f: GraphFunction1D, x: float, r: float, kernel: Kernel, n: int = 32):
    """Gauss nodes/weights over the bands r <= |t| <= 1.1 r, split where x - t hits a grid node."""
    lo, hi = kernel.plateau_end * r, kernel.support_end * r
    ts, ws = [], []
    u, w = gauss_legendre(n)
    for sgn in (-1.0, 1.0):
        # x - sgn * t = x_k  <=>  t = sgn * (x - x_k)
        kinks = sgn * (x - f.xs)
        e = np.unique(np.concatenate([[lo, hi], kinks[(kinks > lo) & (kinks < hi)]]))
        a, b = e[:-1], e[1:]
        ts.append(sgn * (a[:, None] + (b - a)[:, None] * u).ravel())
        ws.append(((b - a)[:, None] * w).ravel())
    return np.concatenate(ts), np.concatenate(ws)


def _band_integral(f: GraphFunction1D, g, x, r: float, kernel: Kernel):
    """r^-2 int g(x - t) phi'(t / r) dt for each x.

    phi' integrates to zero, so g(x) is subtracted to avoid cancellation.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape)
    for i, xi in np.ndenumerate(x):
        t, w = _band_nodes(f, float(xi), r, kernel)
        out[i] = np.sum((g(xi - t) - g(xi)) * kernel.dphi(t / r) * w) / (r * r)
    return out


def smooth_average(f: GraphFunction1D, x, r: float, kernel: Kernel = DEFAULT_KERNEL):
    """(f * phi_r)(x) = r^-2 int F(x - t) phi'(t / r) dt over the bands."""
    return _band_integral(f, f.antiderivative, x, r, kernel)


def smooth_slope(f: GraphFunction1D, x, r: float, kernel: Kernel = DEFAULT_KERNEL):
    """(phi_r * f')(x) = r^-2 int f(x - t) phi'(t / r) dt."""
    return _band_integral(f, f, x, r, kernel)


def taylor_integrand(f: GraphFunction1D, x, y, r: float, kernel: Kernel = DEFAULT_KERNEL):
    """(c^-1 (phi_r * f')(x) (y - x) + f(x) - f(y)) / r."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    a = smooth_slope(f, x, r, kernel) / kernel.c_phi
    return (a * (y - x) + f(x) - f(y)) / r


def graph_a_rho_signed(f: GraphFunction1D, x1, r: float, kernel: Kernel = DEFAULT_KERNEL):
    if f.slope_bound > 0.1 + 1e-12:
        raise SlopeTooLarge(f"slope {f.slope_bound:.4g} exceeds 1/10")
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    return (smooth_average(f, x1, r, kernel) - kernel.c_phi * f(x1)) / r


def graph_a_rho(f: GraphFunction1D, x1, r: float, kernel: Kernel = DEFAULT_KERNEL):
    """a_rho at the graph point over x1 through the one-dimensional identity."""
    out = np.abs(graph_a_rho_signed(f, x1, r, kernel))
    return float(out[0]) if out.size == 1 else out


def graph_a_rho_area(f: GraphFunction1D, x1: float, r: float, kernel: Kernel = DEFAULT_KERNEL, n: int = 16, signed: bool = False) -> float:
    """a_rho((x1, f(x1)), r) from the area integral of the product kernel.

    c_rho - r^-1 int phi((y1 - x1)/r) U((f(y1) - f(x1))/r) dy1 with
    U(a) = int_a^inf phi and c_rho = c(phi)^2 / 2.
    """
    x2 = float(f(x1))
    lo, hi = x1 - kernel.support_end * r, x1 + kernel.support_end * r
    xs = f.xs
    brk = np.unique(np.concatenate([[lo, hi, x1 - r, x1 + r], xs[(xs > lo) & (xs < hi)]]))
    u, w = gauss_legendre(n)
    a, b = brk[:-1], brk[1:]
    y = (a[:, None] + (b - a)[:, None] * u).ravel()
    wy = ((b - a)[:, None] * w).ravel()
    val = np.sum(wy * kernel.phi((y - x1) / r) * kernel.upper_mass((f(y) - x2) / r)) / r
    c_rho = 0.5 * kernel.c_phi ** 2
    out = c_rho - float(val)
    return out if signed else abs(out)


def graph_a_rho_area_profile(f: GraphFunction1D, x1: float, radii, kernel: Kernel = DEFAULT_KERNEL) -> np.ndarray:
    return np.array([graph_a_rho_area(f, x1, float(r), kernel) for r in np.atleast_1d(radii)])


# integrated comparisons on the graph ---------------------------------------------------


@dataclass(frozen=True)
class LipsResult:
    numerator: float
    denominator: float
    ratio: float


def _graph_nodes(f: GraphFunction1D, pad: float, per_cell: int = 1, outer: int = 16):
    """x1 nodes/weights: Gauss points per f cell, plus coarse Gauss pieces in the pads."""
    a, b = f.support
    u, w = gauss_legendre(per_cell)
    xs = f.xs
    inner = (xs[:-1, None] + f.dx * u).ravel()
    wi = np.tile(f.dx * w, len(xs) - 1)
    uo, wo = gauss_legendre(outer)
    e = np.linspace(0.0, pad, 9)
    off = (e[:-1, None] + np.diff(e)[:, None] * uo).ravel()
    wof = (np.diff(e)[:, None] * wo).ravel()
    x = np.concatenate([a - off[::-1], inner, b + off])
    wt = np.concatenate([wof[::-1], wi, wof])
    return x, wt


def default_graph_grid(f: GraphFunction1D, per_octave: int = 8) -> RadialGrid:
    a, b = f.support
    return RadialGrid.build(0.5 * f.dx, 2.0 * (b - a), per_octave)


def _apsi_on_graph(f: GraphFunction1D, domain: PlanarDomain, x1: float, grid: RadialGrid, kernel: Kernel):
    prof = RadialProfile.build(
        domain,
        (x1, float(f(x1))),
        kernel.support_end * grid.r_max,
        breakpoints=np.concatenate([grid.nodes, kernel.support_end * grid.nodes]),
    )
    return prof.apsi_signed(grid.nodes, kernel)


def lips_ratio(f: GraphFunction1D, kernel: Kernel = DEFAULT_KERNEL, grid: RadialGrid | None = None, pad_fraction: float = 0.5) -> LipsResult:
    """(int_Gamma A_psi^2 dH^1, ||f'||_2^2, ratio) with x1 and r truncated.

    The x1 integral runs over the support padded by ``pad_fraction`` of its
    length on both sides; A_psi^2 uses the grid radii.  0/0 gives ratio 1.
    """
    den = f.derivative_l2_sq()
    if den == 0.0:
        return LipsResult(0.0, 0.0, 1.0)
    grid = grid or default_graph_grid(f)
    a, b = f.support
    dom = f.domain()
    xs, wx = _graph_nodes(f, pad_fraction * (b - a))
    arc = np.sqrt(1.0 + f.slope_at(xs) ** 2)
    A2 = np.array([grid.integrate(_apsi_on_graph(f, dom, x, grid, kernel) ** 2) for x in xs])
    num = float(np.sum(wx * arc * A2))
    return LipsResult(num, den, num / den)


@dataclass(frozen=True)
class DiffResult:
    lhs: float  # int_Gamma |A_rho - A_psi|^2 dH^1
    slope_inf: float
    deriv_l2_sq: float

    @property
    def normalized(self) -> float:
        """lhs / (||f'||_inf^4 ||f'||_2^2)."""
        d = self.slope_inf ** 4 * self.deriv_l2_sq
        return self.lhs / d if d > 0 else 0.0


def rho_psi_difference(f: GraphFunction1D, kernel: Kernel = DEFAULT_KERNEL, grid: RadialGrid | None = None, pad_fraction: float = 0.5) -> DiffResult:
    """int_Gamma |A_rho - A_psi|^2 dH^1 with both coefficients from area/polar quadrature."""
    grid = grid or default_graph_grid(f)
    a, b = f.support
    dom = f.domain()
    xs, wx = _graph_nodes(f, pad_fraction * (b - a))
    arc = np.sqrt(1.0 + f.slope_at(xs) ** 2)
    acc = 0.0
    vals = np.empty(len(xs))
    for i, x in enumerate(xs):
        ap = np.abs(_apsi_on_graph(f, dom, x, grid, kernel))
        ar = graph_a_rho_area_profile(f, x, grid.nodes, kernel)
        vals[i] = (math.sqrt(grid.integrate(ar ** 2)) - math.sqrt(grid.integrate(ap ** 2))) ** 2
    acc = float(np.sum(wx * arc * vals))
    return DiffResult(acc, f.slope_bound, f.derivative_l2_sq())
