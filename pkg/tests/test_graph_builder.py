import math

import numpy as np
import pytest

from geosquare import corpus
from geosquare import graph_builder as gb


def line_measure(n=200, angle=0.0, mass=2.0, half=1.0):
    t = np.linspace(-half, half, n)
    pts = np.column_stack([t * math.cos(angle), t * math.sin(angle)])
    return gb.WeightedPointSet(pts, np.full(n, mass / n), root_center=(0.0, 0.0), root_radius=1.0)


@pytest.fixture(scope="module")
def flat_run():
    return gb.construct(line_measure())


# inputs and parameters ------------------------------------------------------------


def test_point_set_validation():
    with pytest.raises(ValueError):
        gb.WeightedPointSet([[0.0, 0.0]], [0.0])
    with pytest.raises(ValueError):
        gb.WeightedPointSet([[0.0, math.nan]], [1.0])
    mu = line_measure(101)
    assert mu.total_mass == pytest.approx(2.0)
    assert mu.mass_in((0.0, 0.0), 0.5) == pytest.approx(1.0, abs=0.05)
    assert 1.0 <= mu.growth_constant() < 10.0


def test_params_invariants():
    with pytest.raises(ValueError):
        gb.ConstructionParams(theta=0.6, c0=0.5)
    with pytest.raises(ValueError):
        gb.ConstructionParams(alpha=0.2)
    with pytest.raises(ValueError):
        gb.ConstructionParams(flat_param=0.01, theta=0.004)


def test_rigid_motion_round_trip():
    m = gb.RigidMotion(np.array([0.3, -0.2]), 0.7)
    p = corpus.rng(1).standard_normal((5, 2))
    assert np.allclose(m.invert(m.apply(p)), p, atol=1e-14)


# balls and stopping radii -------------------------------------------------------------


def test_classify_ball_on_axis():
    mu = line_measure()
    flags = gb.classify_ball(mu, (0.0, 0.0), 0.5)
    assert flags == {"good": True, "very_good": True}


def test_classify_ball_tilted_line():
    p = gb.ConstructionParams()
    mu = line_measure(angle=2 * p.alpha)
    assert gb.classify_ball(mu, (0.0, 0.0), 0.5, p)["good"] is False


def test_classify_ball_low_density():
    p = gb.ConstructionParams()
    # mu(B(0, 0.5)) / 0.5 = theta / 2
    mu = line_measure(n=400, mass=p.theta / 2)
    assert gb.classify_ball(mu, (0.0, 0.0), 0.5, p)["good"] is False


def test_classify_ball_empty():
    with pytest.raises(gb.EmptyBall):
        gb.classify_ball(line_measure(), (0.0, 5.0), 0.1)


def test_stopping_radius_on_axis():
    mu = line_measure()
    p = gb.ConstructionParams()
    floor = gb.Ladder.build(2.0, p).floor
    assert gb.stopping_radius(mu, 100, p) == pytest.approx(floor, rel=1e-12)


def test_stopping_functions_lipschitz(flat_run):
    st = flat_run.stopping
    x = np.column_stack([np.linspace(-3, 3, 301), corpus.rng(2).uniform(-1, 1, 301)])
    d = st.d(x)
    dd = np.abs(np.diff(d))
    step = np.hypot(*np.diff(x, axis=0).T)
    assert np.all(dd <= step * (1 + 1e-12))
    assert np.all(st.d(st.points) <= st.h + 1e-15)
    p = np.linspace(-3, 3, 601)
    assert np.all(np.abs(np.diff(st.D(p))) <= np.diff(p) * (1 + 1e-12))


def test_single_ball_distance():
    mu = gb.WeightedPointSet([[0.0, 0.0]], [1.0], root_center=(0.0, 0.0), root_radius=1.0)
    st = gb.stopping_functions(mu)
    q = np.array([[0.3, 0.4], [2.0, 0.0]])
    assert np.allclose(st.d(q), np.hypot(*q.T) + st.h[0])


def test_heavy_point_off_axis_is_not_captured():
    p = gb.ConstructionParams()
    base = line_measure(n=400)
    pts = np.vstack([base.points, [[0.0, 0.25]]])
    w = np.concatenate([base.weights, [p.theta * 1.0 / 2]])
    mu = gb.WeightedPointSet(pts, w, root_center=(0.0, 0.0), root_radius=1.0)
    st = gb.stopping_functions(mu, p)
    part = gb.partition_points(st)
    assert part.labels[-1] in ("LD", "BA")


# Whitney -------------------------------------------------------------------------------


def test_whitney_constant_one():
    cov = gb.whitney_cover(lambda p: np.ones_like(np.asarray(p, dtype=float)), (0.0, 1.0))
    assert len(cov.intervals) == 32
    assert np.all(cov.lengths == 1 / 32)
    assert len(cov.clipped) == 0


def test_whitney_distance_to_origin():
    cov = gb.whitney_cover(lambda p: np.abs(np.asarray(p, dtype=float)), (-1.0, 1.0), floor=2.0 ** -16)
    iv = cov.intervals
    # no emitted interval touches 0
    assert not np.any((iv[:, 0] <= 0) & (iv[:, 1] >= 0))
    dist = np.minimum(np.abs(iv[:, 0]), np.abs(iv[:, 1]))
    ratio = cov.lengths / (dist / 21.0)
    assert np.all((ratio >= 0.5) & (ratio <= 2.0))
    assert cov.max_neighbor_ratio <= 10.0


def test_whitney_all_stopped():
    cov = gb.whitney_cover(lambda p: np.zeros_like(np.asarray(p, dtype=float)), (0.0, 1.0), floor=2.0 ** -6)
    assert len(cov.intervals) == 0
    assert len(cov.clipped) == 64
    with pytest.raises(gb.ResolutionFloorHit):
        gb.whitney_cover(lambda p: np.zeros_like(np.asarray(p, dtype=float)), (0.0, 1.0), floor=2.0 ** -6, strict=True)


def test_whitney_root_must_be_dyadic():
    with pytest.raises(ValueError):
        gb.whitney_cover(lambda p: np.ones_like(p), (0.0, 3.0))


# graph -----------------------------------------------------------------------------------


def test_flat_points_give_zero_graph(flat_run):
    g = flat_run.graph
    assert np.max(np.abs(g.values)) <= 1e-12
    assert flat_run.partition.z_mass_fraction >= 0.99
    d = flat_run.diagnostics
    assert d.piperp_ok and d.piperp_violations == 0
    assert d.dist_B0_constant == 0.0
    assert d.partition_sum_error <= 1e-9


def test_sloped_line_recovered():
    p = gb.ConstructionParams()
    s = p.alpha / 2
    con = gb.construct(line_measure(angle=math.atan(s)), p)
    # the graph lives in normalised coordinates; map it back
    poly = con.stopping.motion.invert(con.graph.polyline())
    R = con.stopping.R
    mid = np.abs(poly[:, 0]) <= 0.5 * R
    fit = np.polyfit(poly[mid, 0], poly[mid, 1], 1)[0]
    assert s / 2 <= fit <= 2 * s
    assert con.diagnostics.piperp_ok and con.diagnostics.piperp_min_slack > 0


def test_partition_of_unity_sums_to_one():
    pieces = [gb.Piece((a, a + 0.25), 0.0, 0.0, None, None, False, False) for a in np.arange(0.0, 2.0, 0.25)]
    p = np.linspace(0.0, 2.0, 999, endpoint=False)
    assert np.max(np.abs(gb.partition_of_unity(pieces, p).sum(axis=0) - 1.0)) <= 1e-12


def test_lipschitz_graph_construction():
    f, dom = corpus.gen_lipschitz_graph(1)
    mu = corpus.sample_measure(dom, 200, seed=3)
    con = gb.construct(mu, domain=dom)
    d = con.diagnostics
    assert d.lipschitz_slope <= 0.1
    assert con.partition.z_mass_fraction >= 0.5
    assert d.piperp_ok
    lo, hi = d.support
    assert -12 * con.stopping.R <= lo <= hi <= 12 * con.stopping.R
    step = con.graph.grid[1] - con.graph.grid[0]
    assert d.z_on_graph_max <= con.stopping.z0_tol + step
    fr = con.partition
    assert fr.z_mass_fraction + fr.ld_mass_fraction + fr.ba_mass_fraction == pytest.approx(1.0)


def test_construction_is_deterministic():
    a = gb.construct(line_measure(120, angle=0.03))
    b = gb.construct(line_measure(120, angle=0.03))
    assert np.array_equal(a.graph.values, b.graph.values)
    assert np.array_equal(a.cover.intervals, b.cover.intervals)
    assert np.array_equal(a.stopping.h, b.stopping.h)
