import numpy as np
import pytest

from blsac.fourier import assemble_features, fourier_basis, project_low
from blsac.gaussconv import (
    conv_expected_q,
    cutoff_gain,
    gaussian_kernel_gain,
    high_band_bound,
    mc_expected_q,
    trig_polynomial,
)
from blsac.mdp import periodic_grid


def test_mc_constant_exact():
    est = mc_expected_q(lambda a: np.full_like(a, 1.75), 0.2, 0.3, n=500, seed=0)
    assert est.mean == 1.75 and est.stderr == 0.0
    with pytest.raises(ValueError):
        mc_expected_q(np.cos, 0.0, 0.1, n=99)


def test_mc_deterministic_for_seed():
    a = mc_expected_q(np.sin, 0.1, 0.4, seed=11)
    b = mc_expected_q(np.sin, 0.1, 0.4, seed=11)
    assert a == b


@pytest.mark.parametrize("sigma,mu", [(0.5, 0.0), (0.25, 0.3), (0.125, -0.6)])
def test_mc_cosine_attenuation(sigma, mu):
    w = np.pi / (2 * sigma)
    est = mc_expected_q(lambda a: np.cos(w * a), mu, sigma, n=200_000, seed=1)
    expected = np.cos(w * mu) * np.exp(-np.pi**2 / 8)
    assert abs(est.mean - expected) <= 3 * est.stderr


def test_mc_delta_limit():
    q = trig_polynomial([0.4, -0.2], [0.3, 0.1], 0.5)
    est = mc_expected_q(q, 0.37, 1e-7, n=1000, seed=2)
    assert abs(est.mean - float(q(0.37))) <= max(3 * est.stderr, 1e-12)


def test_conv_constant_and_validation():
    assert conv_expected_q(np.full(64, -2.0), 0.1, 0.3) == pytest.approx(-2.0, abs=1e-14)
    with pytest.raises(ValueError):
        conv_expected_q(np.zeros(8), 0.0, 0.1)
    with pytest.raises(ValueError):
        conv_expected_q(np.zeros(64), 0.0, -1.0)


def test_conv_high_frequency_suppressed():
    sigma = 0.25
    w = 4 * np.pi / (2 * sigma)
    a = periodic_grid(128)
    out = conv_expected_q(np.cos(w * a), 0.0, sigma)
    bound = np.exp(-((4 * np.pi / 2) ** 2) / 2)
    assert abs(out) <= bound * (1 + 1e-6)
    assert bound == pytest.approx(2.6e-9, rel=0.05)


def test_conv_matches_analytic_transform():
    sigma, mu = 0.3, 0.2
    coef_c, coef_s = [0.5, -0.3, 0.2], [0.1, 0.4, -0.2]
    q = trig_polynomial(coef_c, coef_s, 1.0)
    w = np.pi * np.arange(1, 4)
    g = gaussian_kernel_gain(sigma, w)
    oracle = 1.0 + np.sum(g * (np.array(coef_c) * np.cos(w * mu) + np.array(coef_s) * np.sin(w * mu)))
    assert conv_expected_q(q(periodic_grid(64)), mu, sigma) == pytest.approx(oracle, abs=1e-12)


def test_conv_agrees_with_mc():
    rng = np.random.default_rng(5)
    for trial in range(20):
        q = trig_polynomial(rng.normal(size=4), rng.normal(size=4), rng.normal())
        mu, sigma = rng.uniform(-1, 1), rng.uniform(0.1, 0.6)
        est = mc_expected_q(q, mu, sigma, seed=trial)
        assert abs(est.mean - conv_expected_q(q(periodic_grid(256)), mu, sigma)) <= 4 * est.stderr


def test_kernel_gain_values():
    assert gaussian_kernel_gain(0.7, 0.0) == 1.0
    for sigma in (0.05, 0.5, 3.0):
        assert gaussian_kernel_gain(sigma, np.pi / (2 * sigma)) == pytest.approx(0.2913, abs=2e-4)
        assert gaussian_kernel_gain(sigma, np.pi / sigma) == pytest.approx(0.0072, abs=5e-5)
    assert cutoff_gain() == pytest.approx(np.exp(-np.pi**2 / 8), abs=0)
    with pytest.raises(ValueError):
        gaussian_kernel_gain(0.0, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_low_high_decomposition_bound(seed):
    rng = np.random.default_rng(seed)
    M, sigma = 64, 0.2
    basis = fourier_basis(M, 21)
    q = basis @ rng.normal(size=21)
    feats = assemble_features(basis, 1, 7)
    mu = rng.uniform(-1, 1)
    gap = abs(conv_expected_q(q, mu, sigma) - conv_expected_q(project_low(q, feats), mu, sigma))
    bound = high_band_bound(q, basis, 7, sigma)
    assert gap <= bound + 1e-14
    assert bound < 0.1 * np.abs(basis.T @ q)[7:].sum()
