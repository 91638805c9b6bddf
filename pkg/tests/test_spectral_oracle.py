import math

import numpy as np
import pytest

from geosquare import corpus
from geosquare import spectral_oracle as so
from geosquare.kernel import DEFAULT_KERNEL


@pytest.fixture(scope="module")
def consts():
    return so.spectral_constants(so.Profile1D.from_kernel())


@pytest.fixture(scope="module")
def bump():
    return corpus.gen_lipschitz_graph(0, n_cells=128)[0]


def zero_function():
    return so.GraphFunction1D(-1.0, 0.25, np.zeros(9))


def test_constants(consts):
    assert 2.0 <= consts.c_phi <= 2.2
    assert consts.c_phi == pytest.approx(DEFAULT_KERNEL.c_phi, rel=1e-6)
    assert 0.0 < consts.tilde_c < math.inf
    finer = so.spectral_constants(so.Profile1D.from_kernel(), fft_n=2 ** 16)
    assert abs(finer.tilde_c - consts.tilde_c) <= 0.005 * consts.tilde_c


def test_fft_size_checked():
    p = so.Profile1D.from_kernel()
    with pytest.raises(ValueError):
        so.spectral_constants(p, fft_n=2 ** 13)
    with pytest.raises(ValueError):
        so.spectral_constants(p, fft_n=3 * 2 ** 14)


def test_non_even_profile_rejected():
    p = so.Profile1D.from_kernel()
    s = p.samples.copy()
    s[0] += 1e-6
    with pytest.raises(so.NonEven):
        so.spectral_constants(so.Profile1D(s, p.step, p.support))


def test_derivative_identity_on_sine_bump():
    # int |f'|^2 = 4 pi^2 int |xi f^|^2 under the e^{-2 pi i xi t} convention
    xs = np.linspace(0.0, 1.0, 513)
    v = 0.01 * np.sin(math.pi * xs) ** 2
    v[-1] = 0.0
    f = so.GraphFunction1D(0.0, xs[1], v)
    unit = so.SpectralConstants(0.0, 1.0)
    spectral = 4 * math.pi ** 2 * so.plancherel_energy(f, unit)
    assert spectral == pytest.approx(f.derivative_l2_sq(), rel=1e-12)


def test_zero_function(consts):
    f = zero_function()
    assert so.deviation_energy_direct(f) == 0.0
    assert so.plancherel_energy(f, consts) == 0.0
    assert so.taylor_deviation_energy(f) == 0.0
    assert so.graph_a_rho(f, 0.1, 0.3) == 0.0
    res = so.lips_ratio(f)
    assert (res.numerator, res.denominator, res.ratio) == (0.0, 0.0, 1.0)


def test_direct_matches_plancherel(bump, consts):
    a = so.deviation_energy_direct(bump)
    b = so.plancherel_energy(bump, consts)
    assert abs(a / b - 1.0) <= 0.02


def test_energy_scales_linearly(bump, consts):
    lam = 2.0
    big = bump.scaled(lam)
    assert so.plancherel_energy(big, consts) == pytest.approx(lam * so.plancherel_energy(bump, consts), rel=1e-9)
    assert so.deviation_energy_direct(big) == pytest.approx(lam * so.deviation_energy_direct(bump), rel=0.02)


def test_sign_flip_invariance(bump, consts):
    neg = so.GraphFunction1D(bump.x0, bump.dx, -bump.values)
    assert so.plancherel_energy(neg, consts) == so.plancherel_energy(bump, consts)
    assert so.deviation_energy_direct(neg) == pytest.approx(so.deviation_energy_direct(bump), rel=1e-12)


def test_disjoint_bumps_add(bump, consts):
    n = len(bump.values)
    pad = np.zeros(3 * n)
    pad[:n] = bump.values
    pad[2 * n :] = bump.values
    two = so.GraphFunction1D(bump.x0, bump.dx, pad)
    assert so.plancherel_energy(two, consts) == pytest.approx(2 * so.plancherel_energy(bump, consts), rel=0.02)
    assert so.deviation_energy_direct(two) == pytest.approx(2 * so.deviation_energy_direct(bump), rel=0.02)


def test_taylor_energy_refinement(bump):
    from geosquare.multiscale import RadialGrid

    a, b = bump.support
    g8 = RadialGrid.build(bump.dx / 2.2, 64 * (b - a), 8)
    g16 = RadialGrid.build(bump.dx / 2.2, 64 * (b - a), 16)
    e8 = so.taylor_deviation_energy(bump, grid=g8)
    e16 = so.taylor_deviation_energy(bump, grid=g16)
    assert e16 > 0
    assert abs(e8 - e16) <= 0.02 * e16


def test_taylor_integrand_vanishes_for_affine_region():
    # f is affine on [-1, 0.5]; for small r the smoothed slope equals f'
    # and the first-order expansion is exact
    xs = np.linspace(-1.0, 1.0, 257)
    vals = np.where(xs <= 0.5, 0.05 * (xs + 1.0), 0.15 * (1.0 - xs))
    f = so.GraphFunction1D(-1.0, xs[1] - xs[0], vals)
    ys = np.linspace(-0.05, 0.05, 11)
    vals = so.taylor_integrand(f, 0.0, ys, 0.05)
    # zero up to quadrature round-off (terms are of size 0.05)
    assert np.max(np.abs(vals)) <= 1e-9


def test_graph_a_rho_identity(bump):
    g = corpus.rng(5)
    for x1, r in zip(g.uniform(-1.2, 1.2, 5), np.exp(g.uniform(math.log(0.01), 0.0, 5))):
        assert abs(so.graph_a_rho(bump, x1, r) - so.graph_a_rho_area(bump, x1, r)) <= 1e-5


def test_slope_guard():
    xs = np.linspace(-1.0, 1.0, 65)
    f = so.GraphFunction1D(-1.0, xs[1] - xs[0], 0.3 * np.maximum(0.0, 1.0 - np.abs(xs)))
    with pytest.raises(so.SlopeTooLarge):
        so.graph_a_rho(f, 0.0, 0.5)


def test_lips_translation_invariance():
    f = corpus.gen_lipschitz_graph(2, n_cells=32)[0]
    a = so.lips_ratio(f)
    b = so.lips_ratio(f.shifted(0.375))
    assert a.ratio > 0
    assert abs(a.ratio - b.ratio) <= 1e-9 * a.ratio
