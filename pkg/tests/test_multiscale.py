import math

import numpy as np
import pytest

from geosquare import corpus
from geosquare import multiscale as ms
from geosquare.curve_model import boundary_arclength_in_plus
from geosquare.kernel import DEFAULT_KERNEL


@pytest.fixture(scope="module")
def circle():
    return corpus.gen_circle(4096)


@pytest.fixture(scope="module")
def flat():
    return corpus.gen_line()


def on_circle(theta):
    return (math.cos(theta), math.sin(theta))


# grid ----------------------------------------------------------------------


def test_grid_invariants():
    g = ms.RadialGrid.build(1e-3, 1.0, 8)
    assert np.all(np.diff(g.nodes) < 0)
    assert abs(g.weights.sum() - math.log(1e3)) <= 1e-12
    assert g.nodes[0] < 1.0 and g.nodes[-1] > 1e-3
    with pytest.raises(ValueError):
        ms.RadialGrid.build(1e-3, 1.0, 3)
    with pytest.raises(ValueError):
        ms.RadialGrid.build(1.0, 1e-3, 8)


# zero fixtures --------------------------------------------------------------


def test_line_fixture_is_zero(flat):
    for x in [(0.0, 0.0), (0.37, 0.0), (-0.5, 0.0)]:
        for r in (1e-3, 0.05, 0.4):
            assert ms.epsilon_coeff(flat, x, r) <= 1e-6
            assert ms.beta_inf(flat, x, r)[0] <= 1e-6
            assert ms.alpha_plus(flat, x, r) <= 1e-6
            assert ms.a_psi(flat, x, r) <= 1e-6
    g = ms.RadialGrid.build(1e-3, 0.5, 8)
    assert ms.carleson_energy(flat, (0.1, 0.0), g) == 0.0
    res = ms.lem1_check(flat, (0.1, 0.0), 0.4, 1.1)
    assert res.lhs <= 1e-12 and res.rhs_energy == 0.0 and res.tail == 0.0


def test_alpha_far_from_boundary(flat):
    # dist(x, Gamma) = 8 r: Gaussian mass is pi, so alpha+ = pi/2
    assert ms.alpha_plus(flat, (0.0, 0.08), 0.01) == pytest.approx(math.pi / 2, abs=1e-6)


# epsilon and E^2 -------------------------------------------------------------


def test_circle_epsilon_oracle(circle):
    g = corpus.rng(11)
    radii = np.geomspace(1e-3, 1.9, 24)
    for t in g.uniform(0, 2 * math.pi, 10):
        eps = ms.epsilon_profile(circle, on_circle(t), radii)
        assert np.max(np.abs(eps - corpus.circle_epsilon(radii))) <= 1e-3


def test_square_corner_epsilon():
    sq = corpus.gen_square()
    for r in (1e-3, 0.01, 0.1):
        assert ms.epsilon_coeff(sq, (0.0, 0.0), r) == pytest.approx(math.pi / 2, abs=1e-9)


def test_carleson_circle_matches_analytic_integrand(circle):
    g = ms.RadialGrid.build(1e-3, 1.0, 8)
    x = on_circle(0.3)
    want = g.integrate(corpus.circle_epsilon(g.nodes) ** 2)
    assert ms.carleson_energy(circle, x, g) == pytest.approx(want, rel=1e-3)


def test_carleson_square_corner():
    sq = corpus.gen_square()
    g = ms.RadialGrid.build(1e-4, 0.1, 8)
    want = (math.pi / 2) ** 2 * math.log(0.1 / 1e-4)
    assert ms.carleson_energy(sq, (0.0, 0.0), g) == pytest.approx(want, rel=0.02)


def test_carleson_monotone_in_rmin():
    sq = corpus.gen_square()
    x = (0.3, 0.0)
    vals = [ms.carleson_energy(sq, x, ms.RadialGrid.build(r, 1.0, 8)) for r in (0.5, 0.1, 0.01)]
    assert vals[0] <= vals[1] <= vals[2]


# beta ------------------------------------------------------------------------


def test_beta_circle_brute_force(circle):
    x, r = on_circle(1.1), 0.2
    beta, _ = ms.beta_inf(circle, x, r)
    pts = ms.boundary_samples(circle, x, r)
    th = np.linspace(0, math.pi, 10 ** 5, endpoint=False)
    nrm = np.column_stack([-np.sin(th), np.cos(th)])
    proj = nrm @ pts.T
    brute = 0.5 * np.min(proj.max(axis=1) - proj.min(axis=1)) / r
    assert abs(beta - brute) <= 1e-4
    # sagitta of the chord cut by B(x, r), over r
    half_angle = 2 * math.asin(r / 2)
    assert beta == pytest.approx(0.5 * (1 - math.cos(half_angle)) / r, rel=1e-3)


def test_beta_two_segments():
    d = 0.02
    t = np.linspace(-0.9, 0.9, 50)
    pts = np.vstack([np.column_stack([t, 0 * t]), np.column_stack([t, d + 0 * t])])
    fit = ms.strip_fit(pts, (0.0, 0.0), 1.0)
    assert fit.beta >= d / 2


def test_beta_empty_ball(circle):
    with pytest.raises(ms.EmptyIntersection):
        ms.beta_inf(circle, (0.0, 0.0), 0.5)


# alpha+ ----------------------------------------------------------------------


def gaussian_mass_disk(x, r):
    # iterated quadrature over the exact unit disk: erf in x, adaptive in y
    from scipy.integrate import quad
    from scipy.special import erf

    def row(y):
        h = math.sqrt(max(0.0, 1.0 - y * y))
        inner = 0.5 * math.sqrt(math.pi) * r * (erf((h - x[0]) / r) - erf((-h - x[0]) / r))
        return math.exp(-((y - x[1]) / r) ** 2) * inner

    lo, hi = max(-1.0, x[1] - 7 * r), min(1.0, x[1] + 7 * r)
    return quad(row, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def test_alpha_circle_against_area_quadrature(circle):
    # x is a polygon vertex; the 4096-gon differs from the disk by ~1e-7
    x, r = tuple(circle.vertices[500]), 0.25
    want = abs(math.pi / 2 - gaussian_mass_disk(x, r) / r ** 2)
    assert abs(ms.alpha_plus(circle, x, r) - want) <= 1e-4


def test_alpha_square_corner():
    sq = corpus.gen_square()
    # a quarter of the Gaussian mass
    assert ms.alpha_plus(sq, (0.0, 0.0), 0.01) == pytest.approx(math.pi / 4, abs=1e-6)


# a_psi -------------------------------------------------------------------------


def test_a_psi_dual_route(circle):
    small = corpus.gen_circle(512)
    for t, r in [(0.4, 0.25), (2.0, 0.1), (4.0, 0.6)]:
        x = on_circle(t)
        polar = ms.a_psi(small, x, r)
        area = ms.a_psi_area(small, x, r)
        assert abs(polar - area) <= 1e-4 * max(abs(area), 1e-9)


def test_a_psi_pointwise_bound():
    for dom, x in [(corpus.gen_square(), (0.2, 0.0)), (corpus.gen_koch(3), None), (corpus.gen_wedge(1.0), (0.0, 0.0))]:
        if x is None:
            x = tuple(dom.vertices[5])
        radii = np.geomspace(1e-3, 0.5, 12)
        prof = ms._profile_for(dom, x, radii, DEFAULT_KERNEL, DEFAULT_KERNEL.support_end)
        assert np.all(prof.apsi(radii) <= prof.apsi_bound(radii) + 1e-6)


def test_kernel_sandwich(circle):
    # g(s) = pi s - H^1(dB(x,s) cap Omega+) >= 0 for a convex domain
    x, r = on_circle(0.2), 0.3
    s = np.linspace(0, 1.1 * r, 4001)[1:]
    gs = np.array([math.pi * si - boundary_arclength_in_plus(circle, x, si) for si in s])
    assert np.all(gs >= -1e-9)
    ds = s[1] - s[0]
    lo = np.sum(gs[s <= r]) * ds / r ** 2
    hi = np.sum(gs) * ds / r ** 2
    prof = ms._profile_for(circle, x, [r], DEFAULT_KERNEL, DEFAULT_KERNEL.support_end)
    mid = float(prof.apsi_signed([r])[0])
    assert lo - 1e-4 <= mid <= hi + 1e-4


def test_lem1_tail():
    assert ms.lem1_tail(1.1) == 0.0
    assert ms.lem1_tail(1.0) > 0.0
    with pytest.raises(ValueError):
        ms.lem1_tail(0.5)


def test_lem1_inequality_on_square():
    sq = corpus.gen_square()
    res = ms.lem1_check(sq, (0.0, 0.0), 0.1, 1.1)
    assert res.tail == 0.0
    assert 0 < res.ratio < 1.0


# tangents --------------------------------------------------------------------


def test_circle_points_are_tangent(circle):
    g = ms.RadialGrid.build(1e-3, 0.1, 8)
    pts, _ = corpus.arclength_points(circle, 7)
    for p in pts:
        assert ms.tangent_detect(circle, p, g).verdict == "tangent"


def test_square_corner_not_tangent():
    sq = corpus.gen_square()
    g = ms.RadialGrid.build(1e-3, 0.1, 8)
    assert ms.tangent_detect(sq, (0.0, 0.0), g).verdict == "not_tangent"
    # cones wider than the right angle meet a side
    wide = math.cos(math.pi / 4 + 0.1)
    assert ms.tangent_detect(sq, (0.0, 0.0), g, apertures=(wide,)).verdict == "not_tangent"
    # a cone narrower than the corner around the bisector still separates
    narrow = math.cos(math.pi / 4 - 0.1)
    assert ms.tangent_detect(sq, (0.0, 0.0), g, apertures=(narrow,)).verdict == "tangent"
    assert ms.tangent_detect(sq, (0.5, 0.0), g).verdict == "tangent"


def test_koch_points_not_tangent():
    k = corpus.gen_koch(6)
    g = ms.RadialGrid.build(1e-3, 0.1, 8)
    rng = corpus.rng(4)
    pts, _ = corpus.arclength_points(k, 200)
    for p in pts[rng.choice(len(pts), 10, replace=False)]:
        assert ms.tangent_detect(k, p, g).verdict != "tangent"


def test_eps_beta_comparison_at_tangent_points(circle):
    ratios = [ms.eps_beta_ratio(circle, on_circle(t), r) for t in (0.5, 2.5) for r in (0.01, 0.05, 0.2)]
    assert max(ratios) < 10.0


# covariance and convergence ---------------------------------------------------


def test_scale_covariance():
    sq = corpus.gen_square()
    lam = 3.0
    big = sq.scaled(lam)
    x, r = np.array([0.3, 0.0]), 0.45
    pairs = [
        (ms.epsilon_coeff(sq, x, r), ms.epsilon_coeff(big, lam * x, lam * r)),
        (ms.beta_inf(sq, x, r)[0], ms.beta_inf(big, lam * x, lam * r)[0]),
        (ms.alpha_plus(sq, x, r), ms.alpha_plus(big, lam * x, lam * r)),
        (ms.a_psi(sq, x, r), ms.a_psi(big, lam * x, lam * r)),
    ]
    g = ms.RadialGrid.build(1e-2, 0.5, 8)
    gb = ms.RadialGrid.build(lam * 1e-2, lam * 0.5, 8)
    pairs.append((ms.carleson_energy(sq, x, g), ms.carleson_energy(big, lam * x, gb)))
    pairs.append((ms.a_psi_energy(sq, x, g), ms.a_psi_energy(big, lam * x, gb)))
    for a, b in pairs:
        assert abs(a - b) <= 1e-9 * max(abs(a), 1e-300)


def test_per_octave_refinement_on_circle(circle):
    x = on_circle(0.9)
    g8 = ms.RadialGrid.build(1e-3, 1.0, 8)
    g16 = ms.RadialGrid.build(1e-3, 1.0, 16)
    for fn in (ms.carleson_energy, ms.alpha_energy, ms.a_psi_energy):
        a, b = fn(circle, x, g8), fn(circle, x, g16)
        assert abs(a - b) <= 0.01 * b


def test_coefficient_report_fields(circle):
    g = ms.RadialGrid.build(1e-2, 1.0, 8)
    rep = ms.coefficient_report(circle, on_circle(0.0), g, beta_scales=(0.1, 0.2))
    assert rep.point == (1.0, 0.0)
    assert [r for r, _ in rep.beta_profile] == [0.1, 0.2]
    for v in (rep.eps_energy, rep.alpha_energy, rep.a_psi_energy):
        assert math.isfinite(v) and v >= 0
