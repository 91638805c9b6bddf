import math

import numpy as np
import pytest

from geosquare import corpus
from geosquare.curve_model import (
    DegenerateTangency,
    InvalidDomain,
    PlanarDomain,
    RegionLabel,
    boundary_arclength_in_plus,
    circle_profile,
    classify_point,
    corkscrew_search,
)


@pytest.fixture(scope="module")
def circle():
    return corpus.gen_circle(4096)


@pytest.fixture(scope="module")
def flat():
    return corpus.gen_line()


def test_classify_square():
    sq = corpus.gen_square()
    assert classify_point(sq, (0.5, 0.5)) == RegionLabel.IN_PLUS
    assert classify_point(sq, (2.0, 0.0)) == RegionLabel.IN_MINUS
    assert classify_point(sq, (0.5, 0.0)) == RegionLabel.ON_GAMMA


def test_classify_graph_boundary(flat):
    assert classify_point(flat, (0.3, 0.0)) == RegionLabel.ON_GAMMA
    assert classify_point(flat, (0.3, 1e-3)) == RegionLabel.IN_PLUS
    assert classify_point(flat, (5.0, -1.0)) == RegionLabel.IN_MINUS


def test_orientation_is_normalized_and_swaps_nothing_after_load():
    v = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    a = PlanarDomain.jordan(v)
    b = PlanarDomain.jordan(v[::-1])
    pts = np.array([[0.5, 0.5], [2.0, 2.0], [0.5, 1.0]])
    assert a.signed_area() > 0 and b.signed_area() > 0
    assert np.array_equal(a.classify(pts), b.classify(pts))


def test_self_intersection_rejected():
    with pytest.raises(InvalidDomain):
        PlanarDomain.jordan([[0, 0], [1, 1], [1, 0], [0, 1]])


def test_non_finite_point_rejected():
    with pytest.raises(ValueError):
        classify_point(corpus.gen_square(), (math.nan, 0.0))


def test_half_plane_profile(flat):
    prof = circle_profile(flat, (0.0, 0.0), 1.0)
    assert prof.len_I_plus == pytest.approx(math.pi, abs=1e-12)
    assert prof.len_I_minus == pytest.approx(math.pi, abs=1e-12)


def test_circle_profile_law_of_cosines(circle):
    prof = circle_profile(circle, (1.0, 0.0), 1.0)
    assert abs(prof.len_I_plus - 2.0 * math.acos(0.5)) <= 1e-3


def test_circle_profile_center(circle):
    prof = circle_profile(circle, (0.0, 0.0), 0.5)
    assert len(prof.arcs) == 1
    assert prof.len_I_plus == pytest.approx(math.pi, rel=1e-12)
    assert prof.len_I_minus == 0.0


def test_arc_partition_and_monotone_consistency(circle):
    g = corpus.rng(3)
    for _ in range(50):
        x = g.uniform(-1.2, 1.2, size=2)
        r = g.uniform(0.01, 2.0)
        try:
            prof = circle_profile(circle, x, r)
        except DegenerateTangency:
            continue
        assert abs(prof.total_length - 2 * math.pi * r) <= 1e-9 * 2 * math.pi * r
        assert prof.len_I_plus + prof.len_I_minus <= 2 * math.pi * r * (1 + 1e-12)
        assert prof.len_I_plus <= prof.len_plus_total + 1e-12
        assert prof.len_plus_total <= 2 * math.pi * r - prof.len_I_minus + 1e-12


def test_label_stability(circle):
    for x, r in [((1.0, 0.0), 0.3), ((0.2, 0.9), 0.7), ((-1.0, 0.1), 1.3)]:
        a = boundary_arclength_in_plus(circle, x, r)
        b = boundary_arclength_in_plus(circle, x, r * (1 + 1e-12))
        assert abs(a - b) <= 1e-6 * r


def test_boundary_arclength_examples(flat, circle):
    for s in (0.1, 1.0, 7.0):
        assert boundary_arclength_in_plus(flat, (0.2, 0.0), s) == pytest.approx(math.pi * s, rel=1e-12)
    assert abs(boundary_arclength_in_plus(circle, (1.0, 0.0), 1.0) - 2 * math.pi / 3) <= 1e-3
    assert boundary_arclength_in_plus(circle, (1.0, 0.0), 3.0) == 0.0


def test_tangency_reported():
    sq = corpus.gen_square()
    # circle of radius 0.5 around the centre touches all four sides
    with pytest.raises(DegenerateTangency):
        circle_profile(sq, (0.5, 0.5), 0.5)


def test_corkscrew_half_plane(flat):
    (cp, rp), (cm, rm) = corkscrew_search(flat, (0.0, 0.0), 1.0, 256)
    assert rp >= 0.45 and rm >= 0.45
    assert cp.y > 0 > cm.y


def test_corkscrew_quarter_plane():
    w = corpus.gen_wedge(math.pi / 2)
    (_, rp), (_, rm) = corkscrew_search(w, (0.0, 0.0), 1.0, 256)
    # inscribed ball of a quarter disc of radius 1: r sin(pi/4) / (1 + sin(pi/4))
    assert rp >= 0.25 and rm >= 0.25
    assert rp <= math.sin(math.pi / 4) / (1 + math.sin(math.pi / 4)) + 1e-12


def test_corkscrew_precondition(circle):
    with pytest.raises(ValueError):
        corkscrew_search(circle, (0.0, 0.0), 0.4, 32)


def test_graph_uniform_and_scaling():
    d = PlanarDomain.graph_uniform(-1.0, 0.5, [0.0, 0.1, -0.1, 0.05, 0.0])
    assert d.kind == "graph"
    big = d.scaled(3.0)
    assert big.classify(np.array([[0.0, 3.0]]))[0] == 1
