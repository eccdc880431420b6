import math

import numpy as np
import pytest
from scipy import stats

from refchannel import distributions as dist
from refchannel.wigner import rapidity_factor


def bessel_series(order, x, terms=40):
    """I_order(x) from its power series, independent of scipy."""
    total = 0.0
    for k in range(terms):
        term = (x / 2) ** (order + 2 * k) / (math.factorial(k) * math.factorial(order + k))
        total += term
        if term < 1e-17 * total:
            break
    return total


def test_bessel_trivial_values():
    assert dist.bessel_i(0, 0.0) == 1.0
    assert dist.bessel_i(1, 0.0) == 0.0


@pytest.mark.parametrize("order,x", [(1, 2.0), (0, 0.5), (2, 7.5), (3, 14.9), (10, 12.0)])
def test_bessel_against_series(order, x):
    assert dist.bessel_i(order, x) == pytest.approx(bessel_series(order, x), rel=1e-13)


def test_bessel_rejects_bad_input():
    with pytest.raises(ValueError):
        dist.bessel_i(1, -0.5)
    with pytest.raises(ValueError):
        dist.bessel_i(11, 1.0)


def test_bessel_recurrence():
    for x in np.geomspace(0.1, 50, 25):
        for nu in range(1, 10):
            lhs = dist.bessel_i(nu - 1, x) - dist.bessel_i(nu + 1, x)
            rhs = 2 * nu / x * dist.bessel_i(nu, x)
            assert lhs == pytest.approx(rhs, rel=1e-10)


def test_mean_resultant_limits():
    assert dist.g_over_kappa(1e-9) == pytest.approx(0.25, rel=1e-12)
    assert dist.mean_resultant_G(500.0) == pytest.approx(1.0, abs=1e-2)
    assert dist.mean_resultant_G(2.0) == pytest.approx(bessel_series(2, 2.0) / bessel_series(1, 2.0),
                                                       rel=1e-13)
    assert dist.h_over_kappa(1e-9) == pytest.approx(1 / 3, rel=1e-12)
    assert dist.mean_resultant_H(1.0) == pytest.approx(1 / math.tanh(1.0) - 1.0, rel=1e-13)
    assert dist.mean_resultant_H(1e6) == pytest.approx(1.0, abs=1e-5)


def test_series_branch_is_continuous():
    k = dist.SMALL_KAPPA
    for f in (dist.g_over_kappa, dist.h_over_kappa):
        assert f(k * (1 - 1e-9)) == pytest.approx(f(k * (1 + 1e-9)), rel=1e-12)


def test_mean_resultants_monotone_and_bounded():
    kappas = np.geomspace(1e-3, 1e3, 200)
    for f in (dist.mean_resultant_G, dist.mean_resultant_H):
        values = np.array([f(k) for k in kappas])
        assert np.all(np.diff(values) > 0)
        assert np.all((values > 0) & (values < 1))


def test_vmf_s3_density_properties():
    params = dist.VmfS3Params(3.0)
    # normalisation with the hyperspherical measure sin^2(psi) sin(theta)
    psi, wpsi = dist.gauss_legendre(0.0, math.pi, 200)
    theta, wtheta = dist.gauss_legendre(0.0, math.pi, 40)
    phi = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
    g = dist.vmf_s3_density(psi[:, None], theta[None, :], 0.0, params)
    total = np.sum(wpsi[:, None] * wtheta[None, :] * g * np.sin(psi[:, None]) ** 2
                   * np.sin(theta[None, :])) * 2 * math.pi
    assert total == pytest.approx(1.0, abs=1e-8)
    # independent of the axis coordinates
    vals = dist.vmf_s3_density(0.7, theta[:, None], phi[None, :], params)
    assert np.ptp(vals) < 1e-14 * vals.max()
    ratio = dist.vmf_s3_density(0.0, 0.1, 0.2, params) / dist.vmf_s3_density(math.pi / 2, 0.1, 0.2, params)
    assert ratio == pytest.approx(math.exp(3.0), rel=1e-12)


@pytest.mark.parametrize("kappa", [1e-6, 0.5, 3.0, 40.0])
def test_vmf_s2_density_normalised(kappa):
    params = dist.VmfS2Params((0.0, 0.0, 1.0), kappa)
    t, w = dist.gauss_legendre(-1.0, 1.0, 400)
    dirs = np.stack([np.sqrt(1 - t * t), np.zeros_like(t), t], axis=-1)
    total = 2 * math.pi * np.sum(w * dist.vmf_s2_density(dirs, params))
    assert total == pytest.approx(1.0, abs=1e-8)
    assert np.all(dist.vmf_s2_density(dirs, params) >= 0)


def test_vmf_s2_uniform_limit():
    params = dist.VmfS2Params((1.0, 0.0, 0.0), 1e-12)
    assert dist.vmf_s2_density(np.array([0.0, 1.0, 0.0]), params) == pytest.approx(1 / (4 * math.pi))


def test_s2_sampler_mean_resultant():
    rng = np.random.default_rng(5)
    n = dist.sample_vmf_s2(dist.VmfS2Params((0.0, 0.0, 1.0), 3.0), rng, 1_000_000)
    assert np.allclose(np.linalg.norm(n, axis=1), 1.0)
    z = n[:, 2]
    assert abs(z.mean() - dist.mean_resultant_H(3.0)) < 3 * z.std() / math.sqrt(z.size)


def test_s2_sampler_tilted_mean():
    mu = np.array([1.0, 2.0, -2.0]) / 3.0
    n = dist.sample_vmf_s2(dist.VmfS2Params(tuple(mu), 5.0), np.random.default_rng(6), 200_000)
    mean = n.mean(axis=0)
    assert np.allclose(mean, dist.mean_resultant_H(5.0) * mu, atol=5e-3)


def test_s3_sampler_cos_psi_mean():
    kappa = 5.0
    rng = np.random.default_rng(7)
    psi, theta, phi = dist.sample_vmf_s3(dist.VmfS3Params(kappa), rng, 1_000_000)
    c = np.cos(psi)
    # quadrature oracle: E[cos psi] under sin^2(psi) exp(kappa cos psi)
    x, w = dist.gauss_legendre(0.0, math.pi, 400)
    weight = np.sin(x) ** 2 * np.exp(kappa * np.cos(x))
    expected = np.sum(w * np.cos(x) * weight) / np.sum(w * weight)
    assert abs(c.mean() - expected) < 3 * c.std() / math.sqrt(c.size)
    # the mean of cos psi is also d/dkappa log(I_1(kappa)/kappa)
    assert expected == pytest.approx(dist.mean_resultant_G(kappa), rel=1e-10)
    # axis uniform on S^2
    axis = np.stack([np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)], -1)
    assert np.all(np.abs(axis.mean(axis=0)) < 5e-3)


def test_samplers_are_deterministic():
    a = dist.sample_vmf_s3(dist.VmfS3Params(2.0), np.random.default_rng(9), 1000)
    b = dist.sample_vmf_s3(dist.VmfS3Params(2.0), np.random.default_rng(9), 1000)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    c = dist.sample_bump(dist.BumpParams(0.4), np.random.default_rng(9), 1000)
    d = dist.sample_bump(dist.BumpParams(0.4), np.random.default_rng(9), 1000)
    assert np.array_equal(c, d)


@pytest.mark.parametrize("delta", [1.0, 0.3])
def test_bump_sampler_ks(delta):
    params = dist.BumpParams(delta)
    v = np.sort(dist.sample_bump(params, np.random.default_rng(8), 1_000_000))
    assert v.min() >= 0 and v.max() < 1

    grid = np.linspace(0.0, 1.0, 2001)
    dens = dist.bump_density(grid, params)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    ks = stats.kstest(v, lambda x: np.interp(x, grid, cdf)).statistic
    assert ks < 0.002


def test_bump_norm_values():
    assert dist.bump_norm(1e4) == pytest.approx(1.0, abs=1e-6)
    assert dist.bump_norm(1e8) == pytest.approx(1.0, abs=1e-13)
    oracle = dist.integrate_doubling(lambda v: np.exp(-1.0 / (1.0 - v * v)), 0.0, 1.0 - 1e-15,
                                     n=256, tol=1e-15)
    assert dist.bump_norm(1.0) == pytest.approx(oracle, abs=1e-12)
    deltas = np.geomspace(0.1, 20, 40)
    norms = [dist.bump_norm(d) for d in deltas]
    assert np.all(np.diff(norms) > 0)


def test_bump_norm_underflow_flagged():
    with pytest.raises(dist.BumpUnderflowError):
        dist.bump_norm(0.03)
    with pytest.raises(dist.BumpUnderflowError):
        dist.t_velocity(2, dist.BumpParams(0.03))
    assert math.isfinite(dist.bump_log_norm(0.03))


def test_t_velocity_limits():
    t = [dist.t_velocity(2, dist.BumpParams(d)) for d in (0.5, 0.2, 0.1)]
    assert t[0] > t[1] > t[2] > 0
    for n in (1, 2):
        uniform = dist.integrate_doubling(lambda v: v * v * rapidity_factor(v) ** n, 0.0, 1.0,
                                          tol=1e-14)
        assert dist.t_velocity(n, dist.BumpParams(1e4)) == pytest.approx(uniform, rel=1e-6)
    for d in np.geomspace(0.1, 10, 20):
        p = dist.BumpParams(d)
        assert 0 < dist.t_velocity(2, p) < dist.t_velocity(1, p) < 1


def test_t_momentum():
    assert dist.t_momentum(1, dist.MomentumSpec(0.0, 1.0)) == 0.0
    assert dist.t_momentum(2, dist.MomentumSpec(0.01, 1.0)) == pytest.approx(1e-4, rel=1e-15)
    with pytest.warns(UserWarning):
        dist.MomentumSpec(0.5, 1.0)
    with pytest.raises(ValueError):
        dist.t_momentum(3, dist.MomentumSpec(0.01, 1.0))


def test_gauss_legendre_exact_for_polynomials():
    x, w = dist.gauss_legendre(-1.0, 2.0, 10)
    assert np.sum(w * x**19) == pytest.approx((2.0**20 - 1.0) / 20, rel=1e-13)


def test_parameter_validation():
    with pytest.raises(ValueError):
        dist.VmfS3Params(-1.0)
    with pytest.raises(ValueError):
        dist.VmfS2Params((1.0, 1.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        dist.BumpParams(0.0)


def test_samplers_uniform_at_zero_concentration():
    rng = np.random.default_rng(12)
    psi, _, _ = dist.sample_vmf_s3(dist.VmfS3Params(0.0), rng, 200_000)
    # uniform on S^3: E[cos psi] = 0, E[cos^2 psi] = 1/4
    assert abs(np.cos(psi).mean()) < 5e-3
    assert np.mean(np.cos(psi) ** 2) == pytest.approx(0.25, abs=5e-3)
    n = dist.sample_vmf_s2(dist.VmfS2Params((0.0, 1.0, 0.0), 0.0), rng, 200_000)
    assert np.all(np.abs(n.mean(axis=0)) < 5e-3)
