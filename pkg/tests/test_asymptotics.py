import math

import numpy as np
import pytest

from bernet.asymptotics import (InflatingRegion, across_frequency, fit_gumbel_sample,
                                gumbel_fit, poisson_approx_across, rate_sweep,
                                region_membership, rho_hat)
from bernet.net import NetConfig


def test_poisson_approx_values():
    assert poisson_approx_across(10, 0.0) == 0.0
    assert poisson_approx_across(1000, math.log(2) / 1000) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        poisson_approx_across(10, 1.5)


def test_poisson_approx_monotone_and_taylor():
    grid = [poisson_approx_across(m, t) for m in (1, 10, 100) for t in (1e-4, 1e-3, 1e-2)]
    assert np.all(np.diff(np.reshape(grid, (3, 3)), axis=0) >= 0)
    assert np.all(np.diff(np.reshape(grid, (3, 3)), axis=1) >= 0)
    for x in (1e-4, 1e-3, 1e-2, 0.1):
        assert abs(poisson_approx_across(1, x) - x) <= x * x / 2


def test_region_examples():
    reg = InflatingRegion(1, 1, 0.1, 0.1, 0.5)
    assert region_membership(reg, 20, 10)
    assert not region_membership(reg, 5, 10)
    assert not region_membership(reg, 100, 10)


def test_region_emptiness():
    empty = InflatingRegion(1, 1, 0.1, 0.6, 0.5)
    assert empty.eventually_empty
    assert not any(region_membership(empty, m, 200) for m in (10 ** k for k in range(1, 30)))
    assert not InflatingRegion(1, 1, 0.1, 0.1, 0.5).eventually_empty


def test_rate_sweep_bounds_and_zero():
    t = rate_sweep(1, 0.0, 0.5, [(16, 16), (32, 32)], 20, 1)
    assert all(e.mean_ratio == 0 for e in t.entries)
    t = rate_sweep(1, 0.3, 0.4, [(16, 16), (32, 32)], 50, 1, InflatingRegion(1, 1, 0.1, 0.1, 0.4))
    for e in t.entries:
        assert 0 <= e.mean_ratio <= e.n / math.log(e.m * e.n)
        assert e.in_region is not None
    assert t.to_csv().splitlines()[0].startswith("m,n,mean_ratio,stderr,replicates,target")
    with pytest.raises(ValueError):
        rate_sweep(1, 0.3, 0.4, [(32, 32), (16, 16)], 5, 1)


def test_across_frequency_matches_exact():
    from bernet.markov import across_prob_exact
    est = across_frequency(NetConfig.planar(4, 6, 1, 0.5, 2), 100_000)
    assert abs(est.estimate - across_prob_exact(4, 1, 0.5, 6)) < 4 * est.stderr


def test_supercritical_rho_hat():
    r = rho_hat(512, 32, 1, 0.8, 500, 1)
    assert r.rho >= 0.99


def test_gumbel_single_row():
    g = gumbel_fit(1, 1, 0.5, 10_000, 2000, 3)
    assert g.A1 > 0 and g.ks_distance < 0.05
    assert g.A1 == pytest.approx(0.5, abs=0.1)


def test_gumbel_four_rows():
    g = gumbel_fit(4, 1, 0.3, 10_000, 2000, 4)
    assert g.ks_distance < 0.08


def test_gumbel_degenerate():
    with pytest.raises(ValueError):
        fit_gumbel_sample(np.full(10, 3), 0.5, 100)


def test_gumbel_recovers_planted_constant():
    # draw from the discretized limit law itself and refit
    rng = np.random.default_rng(0)
    rho, n, A1 = 0.6, 5000, 0.8
    shift = math.log(n) / math.log(1 / rho)
    u = rng.random(20000)
    # P(L < l) = exp(-A1 rho^(l - shift)); invert on the integer grid
    t = np.log(-np.log(u) / A1) / np.log(rho) + shift
    L = np.floor(t).astype(int)
    got, ks = fit_gumbel_sample(L, rho, n)
    assert got == pytest.approx(A1, rel=0.05)
    assert ks < 0.02
