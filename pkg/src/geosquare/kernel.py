"""Radial cutoff profile used by the smoothed coefficients.

The profile ``phi`` equals 1 on [0, 1], vanishes beyond 1.1 and is joined by a
C-infinity bridge built from ``exp(-1/u)``.  ``psi(x) = phi(|x|)`` is the radial
kernel and ``rho(x) = phi(x1) * phi(x2)`` the product kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

PLATEAU_END = 1.0
SUPPORT_END = 1.1


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _expm(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _expm_prime(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos]) / u[pos] ** 2
    return out


def bridge(u):
    """Smooth step: 0 at u <= 0, 1 at u >= 1, and b(u) + b(1 - u) = 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    a = _expm(u)
    b = _expm(1.0 - u)
    return a / (a + b)


def bridge_prime(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    out = np.zeros_like(u)
    ui = u[inside]
    a, b = _expm(ui), _expm(1.0 - ui)
    da, db = _expm_prime(ui), _expm_prime(1.0 - ui)
    out[inside] = (da * b + a * db) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class Kernel:
    """Plateau-then-bridge profile with its integral constants."""

    plateau_end: float = PLATEAU_END
    support_end: float = SUPPORT_END
    c_phi: float = field(init=False)
    c_psi: float = field(init=False)

    def __post_init__(self):
        width = self.support_end - self.plateau_end
        # b(u) + b(1-u) = 1 makes the bridge contribute exactly half its width.
        object.__setattr__(self, "c_phi", 2.0 * (self.plateau_end + 0.5 * width))
        object.__setattr__(
            self, "c_psi", np.pi * float(self.first_moment(self.support_end))
        )

    @property
    def width(self) -> float:
        return self.support_end - self.plateau_end

    def phi(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        u = (self.support_end - t) / self.width
        return bridge(u)

    def dphi(self, t):
        """Derivative of the even profile (odd function of t)."""
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        u = (self.support_end - at) / self.width
        return -np.sign(t) * bridge_prime(u) / self.width

    def psi(self, y):
        y = np.asarray(y, dtype=float)
        return self.phi(np.hypot(y[..., 0], y[..., 1]))

    def rho(self, y):
        y = np.asarray(y, dtype=float)
        return self.phi(y[..., 0]) * self.phi(y[..., 1])

    def first_moment(self, tau):
        """int_0^tau phi(t) t dt, exact on the plateau, 64-point Gauss on the bridge."""
        tau = np.minimum(np.asarray(tau, dtype=float), self.support_end)
        out = 0.5 * np.minimum(tau, self.plateau_end) ** 2
        hi = np.maximum(tau, self.plateau_end)
        span = hi - self.plateau_end
        x, w = gauss_legendre(64)
        t = self.plateau_end + np.multiply.outer(span, x)
        out = out + span * np.sum(w * self.phi(t) * t, axis=-1)
        return out

    def upper_mass(self, a):
        """int_a^inf phi(u) du."""
        a = np.asarray(a, dtype=float)
        x, w = gauss_legendre(64)
        pe, se = self.plateau_end, self.support_end

        def bridge_mass(lo):
            # int_lo^se phi for lo in [pe, se]
            span = se - lo
            t = lo[..., None] + span[..., None] * x
            return span * np.sum(w * self.phi(t), axis=-1)

        half = 0.5 * self.c_phi
        b = np.abs(a)
        neg = a < 0
        # symmetry: int_a^inf = c_phi - int_{-a}^inf
        inner = np.zeros_like(b)
        plate = b < pe
        mid = (b >= pe) & (b < se)
        if np.any(plate):
            inner[plate] = (pe - b[plate]) + bridge_mass(np.array([pe]))[0]
        if np.any(mid):
            inner[mid] = bridge_mass(b[mid])
        out = np.where(neg, self.c_phi - inner, inner)
        # exact at zero by evenness
        out = np.where(a == 0, half, out)
        return out

    def second_moment(self):
        """int_R phi(t) t^2 dt."""
        x, w = gauss_legendre(64)
        t = self.plateau_end + self.width * x
        return 2.0 * (self.plateau_end ** 3 / 3.0 + self.width * np.sum(w * self.phi(t) * t * t))


DEFAULT_KERNEL = Kernel()
