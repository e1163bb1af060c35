import math

import numpy as np
import pytest
from scipy import stats

from bivou.core import Params, SamplingGrid, dense_covariance
from bivou.errors import DomainError
from bivou.simulate import (
    SimConfig,
    correlated_pairs,
    make_rng,
    recursive_covariance,
    simulate,
    simulate_dense,
    simulate_recursive,
)


def _replicate(psi, grid, m, method="recursive", seed=11):
    """m x 2n matrix of stacked draws, replication r on stream (r,)."""
    out = np.empty((m, 2 * grid.n))
    for r in range(m):
        s = simulate(SimConfig(params=psi, grid=grid, seed=seed, method=method, stream=(r,)))
        out[r] = s.stacked()
    return out


def test_recursion_is_exact_on_three_points():
    psi = Params.of(0.8, 2.5, -0.6, 1.7)
    grid = SamplingGrid.from_points([0.0, 0.4, 1.0])
    np.testing.assert_allclose(recursive_covariance(psi, grid), dense_covariance(psi, grid), rtol=0, atol=1e-12)


@pytest.mark.parametrize("method", ["dense", "recursive"])
def test_seed_determinism(psi0, method):
    grid = SamplingGrid.equispaced(40)
    cfg = SimConfig(params=psi0, grid=grid, seed=123, method=method, stream=(4, 2))
    a, b = simulate(cfg), simulate(cfg)
    np.testing.assert_array_equal(a.z1, b.z1)
    np.testing.assert_array_equal(a.z2, b.z2)
    other = simulate(cfg.model_copy(update={"stream": (4, 3)}))
    assert not np.array_equal(a.z1, other.z1)


def test_make_rng_streams_are_independent_of_call_order():
    first = make_rng(5, (2,)).standard_normal(3)
    make_rng(5, (1,)).standard_normal(100)
    np.testing.assert_array_equal(make_rng(5, (2,)).standard_normal(3), first)


def test_correlated_pairs_correlation():
    e1, e2 = correlated_pairs(make_rng(3), 20000, -0.7)
    r = np.corrcoef(e1, e2)[0, 1]
    assert abs(r + 0.7) < 4 * (1 - 0.49) / math.sqrt(20000)


def test_single_point_follows_colocated_law():
    psi = Params.of(1.0, 4.0, 0.5, 2.0)
    draws = _replicate(psi, SamplingGrid.from_points([0.3]), 4000)
    r = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert abs(r - 0.5) < 4 * (1 - 0.25) / math.sqrt(4000)
    assert np.var(draws[:, 1], ddof=1) == pytest.approx(4.0, rel=4 * math.sqrt(2 / 4000))


def test_independent_components_single_point():
    psi = Params.of(2.0, 0.5, 0.0, 1.0)
    draws = _replicate(psi, SamplingGrid.from_points([0.5]), 4000, method="dense")
    cov = np.cov(draws.T)
    assert cov[0, 0] == pytest.approx(2.0, rel=4 * math.sqrt(2 / 4000))
    assert cov[1, 1] == pytest.approx(0.5, rel=4 * math.sqrt(2 / 4000))
    assert abs(cov[0, 1]) < 4 * math.sqrt(2.0 * 0.5 / 4000)


def test_large_theta_decorrelates_endpoints():
    psi = Params.of(1.0, 1.0, 0.3, 1e6)
    draws = _replicate(psi, SamplingGrid.from_points([0.0, 1.0]), 3000, method="dense")
    r = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert abs(r) < 4 / math.sqrt(3000)


def _check_covariance(psi, grid, m, n_se, seed):
    draws = _replicate(psi, grid, m, seed=seed)
    emp = draws.T @ draws / m
    sigma = dense_covariance(psi, grid)
    d = np.diag(sigma)
    se = np.sqrt((np.outer(d, d) + sigma ** 2) / m)
    assert np.all(np.abs(emp - sigma) < n_se * se)


def test_empirical_covariance_matches_kernel(psi0):
    _check_covariance(psi0, SamplingGrid.uniform(30, make_rng(1, (1,))), 3000, 5.5, seed=21)


@pytest.mark.slow
def test_empirical_covariance_matches_kernel_n100(psi0):
    _check_covariance(psi0, SamplingGrid.uniform(100, make_rng(1, (1,))), 5000, 5.5, seed=22)


def test_recursive_and_dense_agree_in_distribution():
    psi = Params.of(1.0, 2.0, 0.5, 6.0)
    grid = SamplingGrid.uniform(50, make_rng(9, (1,)))
    rec = _replicate(psi, grid, 2000, "recursive", seed=31)
    den = _replicate(psi, grid, 2000, "dense", seed=32)
    n = grid.n
    w = np.linspace(-1.0, 1.0, 2 * n)
    pairs = [(rec[:, n - 1], den[:, n - 1]), (rec[:, n + n // 2], den[:, n + n // 2]), (rec @ w, den @ w)]
    for a, b in pairs:
        assert stats.ks_2samp(a, b).pvalue > 0.01


def test_standardized_innovations_are_standard_normal():
    psi = Params.of(1.5, 0.5, -0.4, 10.0)
    sample = simulate_recursive(SimConfig(params=psi, grid=SamplingGrid.uniform(5000, make_rng(2, (1,))), seed=2))
    d = sample.grid.deltas
    a, v = np.exp(-psi.theta * d), -np.expm1(-2 * psi.theta * d)
    w1 = (sample.z1[1:] - a * sample.z1[:-1]) / np.sqrt(psi.sigma1_sq * v)
    w2 = (sample.z2[1:] - a * sample.z2[:-1]) / np.sqrt(psi.sigma2_sq * v)
    m = w1.size
    for w in (w1, w2):
        assert abs(w.mean()) < 4 / math.sqrt(m)
        assert abs(w.var() - 1.0) < 4 * math.sqrt(2 / m)
        # no serial correlation between consecutive innovations
        assert abs(np.mean(w[1:] * w[:-1])) < 4 / math.sqrt(m)
    assert abs(np.mean(w1 * w2) - psi.rho) < 4 * math.sqrt((1 + psi.rho ** 2) / m)


class TestGuards:
    def test_dense_size_limit(self, psi0):
        cfg = SimConfig(params=psi0, grid=SamplingGrid.equispaced(4097), seed=1, method="dense")
        with pytest.raises(DomainError):
            simulate_dense(cfg)

    def test_empty_grid(self, psi0):
        with pytest.raises(DomainError):
            simulate_recursive(SimConfig(params=psi0, grid=SamplingGrid.equispaced(0), seed=1))

    @pytest.mark.parametrize("seed", [-1, 2 ** 64])
    def test_seed_range(self, psi0, seed):
        with pytest.raises(DomainError):
            SimConfig(params=psi0, grid=SamplingGrid.equispaced(3), seed=seed)

    def test_unknown_method(self, psi0):
        with pytest.raises(DomainError):
            SimConfig(params=psi0, grid=SamplingGrid.equispaced(3), seed=1, method="fft")
