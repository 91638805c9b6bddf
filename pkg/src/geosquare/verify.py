"""Verification suites: each checks one identity or inequality on a small corpus.

A suite returns a list of :class:`Record`; ``pass`` is False on any failed
comparison.  Suites are deterministic functions of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import corpus
from . import graph_builder as gb
from . import multiscale as ms
from . import spectral_oracle as so
from .kernel import DEFAULT_KERNEL


@dataclass(frozen=True)
class Record:
    lemma_id: str
    corpus_item: str
    lhs: float
    rhs: float
    ratio: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "corpus_item": self.corpus_item,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


class OracleFailure(RuntimeError):
    """A closed-form oracle disagrees with its brute-force scan."""


def check_oracles(n_samples: int = 10 ** 6) -> list:
    rows = corpus.validate_oracles(n_samples)
    bad = [name for name, _, _, ok in rows if not ok]
    if bad:
        raise OracleFailure("oracle scan mismatch: " + ", ".join(bad))
    return rows


def _ratio(a: float, b: float) -> float:
    return a / b if b != 0 else (1.0 if a == 0 else math.inf)


def boundary_points(domain, k: int, g: np.random.Generator) -> np.ndarray:
    """k points of Gamma: random vertices' edges at random positions."""
    v = domain.vertices
    n_edges = len(v) if domain.kind == "jordan" else len(v) - 1
    i = g.integers(0, n_edges, size=k)
    j = (i + 1) % len(v)
    s = g.uniform(size=k)[:, None]
    return v[i] * (1 - s) + v[j] * s


# a_psi vs eps energies --------------------------------------------------------------------------


def lem1_corpus() -> list:
    """Fifty (name, domain, R) items; R is a quarter of the diameter."""
    items = [("circle-1024", corpus.gen_circle(1024)), ("square", corpus.gen_square())]
    for om in np.linspace(0.3, 2.0 * math.pi - 0.3, 12):
        items.append((f"wedge-{om:.3f}", corpus.gen_wedge(float(om))))
    items += [(f"koch-{k}", corpus.gen_koch(k)) for k in (1, 2, 3, 4)]
    for s in range(32):
        cap = 0.05 if s % 2 == 0 else 0.1
        items.append((f"lipschitz-{s}-{cap}", corpus.gen_lipschitz_graph(s, slope_cap=cap)[1]))
    return [(name, d, 0.25 * d.diam) for name, d in items]


def lem1_measure(per_octave: int, seed: int = 0, points_per_curve: int = 2, M: float = 1.1) -> dict:
    """Per-point ratios, worst pointwise slack and the corpus constant C = max ratio."""
    g = corpus.rng(seed)
    out = {"items": [], "C": 0.0, "worst_pointwise": -math.inf, "tail": ms.lem1_tail(M)}
    for name, d, R in lem1_corpus():
        xs = boundary_points(d, points_per_curve, g)
        if name == "square":
            xs[0] = (0.0, 0.0)
        if name.startswith("wedge"):
            xs[0] = (0.0, 0.0)
        for k, x in enumerate(xs):
            grid = ms.RadialGrid.build(1e-3 * R, R, per_octave)
            res = ms.lem1_check(d, x, R, M, grid=grid)
            prof = ms._profile_for(d, x, grid.nodes, DEFAULT_KERNEL, DEFAULT_KERNEL.support_end)
            slack = float(np.max(prof.apsi(grid.nodes) - prof.apsi_bound(grid.nodes)))
            out["items"].append((f"{name}#{k}", res, slack))
            out["C"] = max(out["C"], res.ratio)
            out["worst_pointwise"] = max(out["worst_pointwise"], slack)
    return out


def suite_lem1(seed: int = 0) -> list:
    recs = []
    m8 = lem1_measure(8, seed)
    m16 = lem1_measure(16, seed)
    for (item, res, slack) in m16["items"]:
        recs.append(Record("lem1", item, res.lhs, m16["C"] * (res.rhs_energy + res.tail), res.ratio, 0.0, res.lhs <= m16["C"] * (res.rhs_energy + res.tail) * (1 + 1e-12)))
        recs.append(Record("lem1:pointwise", item, slack, 0.0, slack, 1e-6, slack <= 1e-6))
    c8, c16 = m8["C"], m16["C"]
    recs.append(Record("lem1:tail", "M=1.1", m16["tail"], 0.0, 0.0, 0.0, m16["tail"] == 0.0))
    recs.append(Record("lem1:constant", "per_octave 8 vs 16", c16, c8, _ratio(c16, c8), 0.1, math.isfinite(c16) and abs(_ratio(c16, c8) - 1.0) <= 0.1))
    return recs


# Fourier identities ---------------------------------------------------------------


def fourier_corpus(n: int = 20) -> list:
    """Slope-0.05 trig bumps, plus a triangle and two separated bumps."""
    fs = [(f"lipschitz-{s}", corpus.gen_lipschitz_graph(s)[0]) for s in range(n - 2)]
    xs = np.linspace(-1.0, 1.0, 257)
    fs.append(("triangle", so.GraphFunction1D(-1.0, xs[1] - xs[0], 0.05 * np.maximum(0.0, 1.0 - np.abs(xs)))))
    f0 = corpus.gen_lipschitz_graph(0)[0]
    pad = np.zeros(3 * len(f0.values))
    pad[: len(f0.values)] = f0.values
    pad[2 * len(f0.values) :] = f0.values
    fs.append(("two-bumps", so.GraphFunction1D(f0.x0, f0.dx, pad)))
    return fs


def suite_fourier(seed: int = 0, n: int = 20) -> list:
    consts = so.spectral_constants(so.Profile1D.from_kernel())
    recs = [Record("fourier:tilde_c", "kernel", consts.tilde_c, 0.0, math.inf, 0.0, 0.0 < consts.tilde_c < math.inf)]
    for name, f in fourier_corpus(n):
        a = so.deviation_energy_direct(f)
        b = so.plancherel_energy(f, consts)
        r = _ratio(a, b)
        recs.append(Record("fourier", name, a, b, r, 0.02, abs(r - 1.0) <= 0.02))
    return recs


# graph identity ---------------------------------------------------------------------


def lem54_pairs(seed: int = 0, n_graphs: int = 20, n_pairs: int = 20):
    """(name, f, x1, r) with x1 over the padded support and r log-uniform."""
    g = corpus.rng(seed + 54)
    for s in range(n_graphs):
        f = corpus.gen_lipschitz_graph(seed + s)[0]
        a, b = f.support
        x1 = g.uniform(a - 0.25, b + 0.25, size=n_pairs)
        r = np.exp(g.uniform(math.log(0.01), math.log(1.0), size=n_pairs))
        yield f"lipschitz-{seed + s}", f, x1, r


def suite_lem54(seed: int = 0, n_graphs: int = 20, n_pairs: int = 20) -> list:
    recs = []
    for name, f, x1, r in lem54_pairs(seed, n_graphs, n_pairs):
        worst = 0.0
        for x, rr in zip(x1, r):
            one = so.graph_a_rho(f, x, rr)
            two = so.graph_a_rho_area(f, x, rr)
            worst = max(worst, abs(one - two))
        recs.append(Record("lem5.4", name, worst, 0.0, worst, 1e-5, worst <= 1e-5))
    return recs


# graph comparabilities ----------------------------------------------------------------


def suite_lips(seed: int = 0, n: int = 20) -> list:
    recs = []
    ratios = []
    for s in range(seed, seed + n):
        f = corpus.gen_lipschitz_graph(s)[0]
        res = so.lips_ratio(f)
        ratios.append(res.ratio)
        recs.append(Record("lemlips", f"lipschitz-{s}", res.numerator, res.denominator, res.ratio, 0.0, math.isfinite(res.ratio) and res.ratio > 0))
    c1, c2 = min(ratios), max(ratios)
    recs.append(Record("lemlips:bracket", f"{n} graphs", c2, c1, _ratio(c2, c1), 50.0, _ratio(c2, c1) <= 50.0))
    return recs


def suite_lemdiff1(seed: int = 0, n: int = 3) -> list:
    """Quartic scaling: int |A_rho - A_psi|^2 / ||f'||_2^2 drops about 16x when the slope halves."""
    recs = []
    consts = []
    for s in range(seed, seed + n):
        f1 = corpus.gen_lipschitz_graph(s, slope_cap=0.05)[0]
        f2 = corpus.gen_lipschitz_graph(s, slope_cap=0.025)[0]
        d1 = so.rho_psi_difference(f1)
        d2 = so.rho_psi_difference(f2)
        q1 = d1.lhs / d1.deriv_l2_sq
        q2 = d2.lhs / d2.deriv_l2_sq
        factor = _ratio(q1, q2)
        consts += [d1.normalized, d2.normalized]
        recs.append(Record("lemdiff1:scaling", f"lipschitz-{s}", q1, q2, factor, 2.0, 16.0 / 2.0 <= factor <= 16.0 * 2.0))
    C = max(consts)
    recs.append(Record("lemdiff1:constant", f"{n} graphs x 2 caps", C, 0.0, C, 0.0, math.isfinite(C)))
    return recs


# Whitney ------------------------------------------------------------------------------


def suite_whitney(seed: int = 0) -> list:
    recs = []
    cov = gb.whitney_cover(lambda p: np.ones_like(np.asarray(p, dtype=float)), (0.0, 1.0))
    recs.append(Record("whitney:D=1", "unit root", float(len(cov.intervals)), 32.0, len(cov.intervals) / 32.0, 0.0, len(cov.intervals) == 32 and np.all(cov.lengths == 1 / 32)))
    cov = gb.whitney_cover(lambda p: np.abs(np.asarray(p, dtype=float)), (-1.0, 1.0), floor=2.0 ** -16)
    c = 0.5 * (cov.intervals[:, 0] + cov.intervals[:, 1])
    far = np.maximum(np.abs(cov.intervals[:, 0]), np.abs(cov.intervals[:, 1])) - cov.lengths
    q = cov.lengths / (np.abs(c) / 21.0)
    ok = bool(np.all((q >= 0.5) & (q <= 2.0)) and np.all(far >= 0))
    recs.append(Record("whitney:D=|p|", "root [-1, 1)", float(q.max()), float(q.min()), float(q.max() / q.min()), 2.0, ok))
    cov = gb.whitney_cover(lambda p: np.zeros_like(np.asarray(p, dtype=float)), (0.0, 1.0), floor=2.0 ** -8)
    recs.append(Record("whitney:D=0", "unit root", float(len(cov.intervals)), 0.0, 0.0, 0.0, len(cov.intervals) == 0))
    f, dom = corpus.gen_lipschitz_graph(seed)
    mu = corpus.sample_measure(dom, 200)
    con = gb.construct(mu, domain=dom)
    cv = con.cover
    recs.append(Record("whitney:(a)-(d)", f"lipschitz-{seed}", float(cv.max_neighbor_ratio), 10.0, float(cv.max_neighbor_ratio) / 10.0, 0.0, cv.max_neighbor_ratio <= 10.0))
    recs.append(Record("whitney:overlap", f"lipschitz-{seed}", float(cv.overlap), 0.0, float(cv.overlap), 0.0, True))
    return recs


# construction diagnostics ------------------------------------------------------------------


def construction_case(seed: int, noise: float = 0.0, n: int = 300, use_domain: bool = True):
    f, dom = corpus.gen_lipschitz_graph(seed)
    mode = "noise" if noise else "arclength"
    mu = corpus.sample_measure(dom, n, mode=mode, p=noise, seed=seed + 1)
    return gb.construct(mu, domain=dom if use_domain else None)


def suite_diagnostics(seed: int = 0, noise_levels=(0.0, 0.1)) -> list:
    recs = []
    for p in noise_levels:
        con = construction_case(seed, p)
        item = f"lipschitz-{seed} noise={p}"
        d = con.diagnostics
        slope = con.graph.slope_on_grid()
        z = con.partition.z_mass_fraction
        recs.append(Record("main2:slope", item, slope, 0.1, slope / 0.1, 0.0, slope <= 0.1))
        recs.append(Record("main2:coverage", item, z, 0.5, z / 0.5, 0.0, z >= 0.5))
        recs.append(Record("PiperpLip", item, float(d.piperp_violations), float(d.piperp_pairs), d.piperp_min_slack, 0.0, d.piperp_ok))
        recs.append(Record("dist-B0", item, d.dist_B0_constant, 0.0, d.dist_B0_constant, 0.0, math.isfinite(d.dist_B0_constant)))
        recs.append(Record("distG-A", item, d.distG_A_constant, 0.0, d.distG_A_constant, 0.0, math.isfinite(d.distG_A_constant)))
        recs.append(Record("GdistL0", item, d.GdistL0_constant, 0.0, d.GdistL0_constant, 0.0, math.isfinite(d.GdistL0_constant)))
        recs.append(Record("partition-of-unity", item, d.partition_sum_error, 0.0, d.partition_sum_error, 1e-9, d.partition_sum_error <= 1e-9))
    return recs


SUITES = {
    "lem1": suite_lem1,
    "fourier": suite_fourier,
    "lem54": suite_lem54,
    "lemdiff1": suite_lemdiff1,
    "lips": suite_lips,
    "whitney": suite_whitney,
    "diagnostics": suite_diagnostics,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](seed)
