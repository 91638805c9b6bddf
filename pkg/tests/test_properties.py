import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from geosquare import corpus
from geosquare import graph_builder as gb
from geosquare import multiscale as ms
from geosquare.curve_model import DegenerateTangency, circle_profile

SQUARE = corpus.gen_square()
KOCH = corpus.gen_koch(3)

radii = st.floats(min_value=1e-3, max_value=2.0)
coords = st.floats(min_value=-0.5, max_value=1.5)


@settings(max_examples=60, deadline=None)
@given(coords, coords, radii)
def test_epsilon_range_and_arc_budget(x, y, r):
    try:
        prof = circle_profile(SQUARE, (x, y), r)
    except DegenerateTangency:
        return
    assert prof.len_I_plus + prof.len_I_minus <= 2 * math.pi * r * (1 + 1e-12)
    eps = ms.epsilon_coeff(SQUARE, (x, y), r)
    assert 0.0 <= eps <= 2 * math.pi


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3 * 4 ** 3 - 1), st.floats(min_value=1e-3, max_value=0.5))
def test_beta_bounded_on_koch(i, r):
    x = KOCH.vertices[i]
    beta, _ = ms.beta_inf(KOCH, x, r)
    # a ball of radius r fits in a strip of half width r
    assert 0.0 <= beta <= 1.0 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.01, max_value=0.9), st.floats(min_value=0.05, max_value=1.0))
def test_a_psi_below_pointwise_majorant(t, r):
    x = (t, 0.0)
    prof = ms._profile_for(SQUARE, x, [r], ms.DEFAULT_KERNEL, ms.DEFAULT_KERNEL.support_end)
    assert prof.apsi([r])[0] <= prof.apsi_bound([r])[0] + 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=1e-4, max_value=1.0), st.floats(min_value=1.5, max_value=1e3), st.integers(4, 32))
def test_grid_weights_sum(r_min, factor, per):
    g = ms.RadialGrid.build(r_min, r_min * factor, per)
    assert abs(g.weights.sum() - math.log(factor)) <= 1e-12 * max(1.0, math.log(factor))
    assert np.all(np.diff(g.nodes) < 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=4.0), min_size=3, max_size=12))
def test_whitney_tiles_root(levels):
    # a 1-Lipschitz D from a few anchor points
    anchors = np.linspace(0.0, 1.0, len(levels))
    h = np.asarray(levels) * 0.05

    def D(p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        return np.min(np.abs(p[:, None] - anchors[None, :]) + h[None, :], axis=1)

    cov = gb.whitney_cover(D, (0.0, 1.0), floor=2.0 ** -12)
    pieces = cov.all_pieces()
    assert pieces[0, 0] == 0.0 and pieces[-1, 1] == 1.0
    assert np.all(pieces[1:, 0] == pieces[:-1, 1])
    assert cov.max_neighbor_ratio <= 10.0
