import math

import numpy as np
import pytest

from geosquare import corpus
from geosquare import multiscale as ms


def test_philox_vectors():
    # pinned so other implementations can reproduce the corpus
    assert corpus.rng(0).random(3).tolist() == [0.011546754286331562, 0.24154919656271812, 0.11142585551493822]
    assert corpus.rng(2 ** 63 + 5).random(2).tolist() == [0.4474363910727892, 0.35794734145057805]


def test_circle_generator():
    c = corpus.gen_circle(4096)
    assert tuple(c.vertices[0]) == (1.0, 0.0)
    assert c.signed_area() == pytest.approx(math.pi, abs=1e-5)
    # chord error of the inscribed polygon
    mids = 0.5 * (c.vertices + np.roll(c.vertices, -1, axis=0))
    assert np.max(1.0 - np.hypot(*mids.T)) <= 2 * math.pi ** 2 / 4096 ** 2
    with pytest.raises(ValueError):
        corpus.gen_circle(32)


def test_wedge_epsilon():
    for omega, want in [(math.pi, 0.0), (math.pi / 2, math.pi / 2), (3 * math.pi / 2, math.pi / 2)]:
        w = corpus.gen_wedge(omega)
        assert corpus.wedge_epsilon(omega) == pytest.approx(want, abs=1e-15)
        for r in (1e-3, 0.05, 0.1):
            assert ms.epsilon_coeff(w, (0.0, 0.0), r) == pytest.approx(want, abs=1e-9)
    with pytest.raises(ValueError):
        corpus.gen_wedge(0.05)


def test_koch_generator():
    tri = corpus.gen_koch(0)
    assert len(tri.vertices) == 3
    side = np.hypot(*(tri.vertices[1] - tri.vertices[0]))
    for k in (1, 3, 5):
        d = corpus.gen_koch(k)
        assert len(d.vertices) == 3 * 4 ** k
        assert d.perimeter() == pytest.approx(3 * side * (4 / 3) ** k, rel=1e-12)
    with pytest.raises(ValueError):
        corpus.gen_koch(9)


def test_lipschitz_graph_generator():
    f, dom = corpus.gen_lipschitz_graph(7, slope_cap=0.05)
    assert abs(f.slope_bound - 0.05) <= 1e-9
    assert f.support == (-1.0, 1.0)
    assert f.values[0] == 0.0 and f.values[-1] == 0.0
    assert dom.kind == "graph"
    z, _ = corpus.gen_lipschitz_graph(7, slope_cap=0.0)
    assert np.all(z.values == 0.0)
    with pytest.raises(ValueError):
        corpus.gen_lipschitz_graph(0, slope_cap=0.2)


def test_generators_are_reproducible():
    a = corpus.gen_lipschitz_graph(11)[0]
    b = corpus.gen_lipschitz_graph(11)[0]
    assert np.array_equal(a.values, b.values)
    spec = corpus.CorpusSpec("k", "koch", {"depth": 2})
    assert np.array_equal(corpus.generate(spec).vertices, corpus.generate(spec).vertices)
    with pytest.raises(ValueError):
        corpus.generate(corpus.CorpusSpec("x", "spiral"))


def test_line_measure_density():
    mu = corpus.sample_measure(corpus.gen_line(), 1000)
    assert mu.mass_in(mu.root_center, mu.root_radius * (1 + 1e-12)) / mu.root_radius == pytest.approx(1.0, rel=1e-12)


def test_circle_measure_sums_to_perimeter():
    c = corpus.gen_circle(4096)
    mu = corpus.sample_measure(c, 500)
    assert abs(mu.total_mass - c.perimeter()) <= 1e-9
    assert np.allclose(mu.weights, mu.weights[0])


def test_noise_fraction():
    f, dom = corpus.gen_lipschitz_graph(0)
    n = 300
    mu = corpus.sample_measure(dom, n, mode="noise", p=0.1, seed=4)
    frac = mu.weights[mu.off_curve].sum() / mu.total_mass
    assert abs(frac - 0.1) <= 1.0 / n
    assert np.all(dom.distance(mu.points[mu.off_curve]) > 0.01)
    with pytest.raises(ValueError):
        corpus.sample_measure(dom, 50)


def test_oracles_match_scans():
    for name, got, want, ok in corpus.validate_oracles(10 ** 5, tol=1e-3):
        assert ok, name
