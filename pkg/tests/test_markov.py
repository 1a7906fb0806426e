import itertools

import numpy as np
import pytest

from bernet.markov import (ColumnStateModel, across_prob_exact, across_probs_exact, dilation_map,
                           longest_run_dist_bruteforce, rho_exact, rho_table_csv, stab_bounds, thin)
from bernet.net import NetConfig
from bernet.longest_run import replicate_lengths


def test_dilation_map():
    dil = dilation_map(5, 1)
    assert dil[0b00100] == 0b01110
    assert dil[0b00001] == 0b00011
    assert dil[0] == 0


def test_thin_matches_direct_sum():
    m, p = 4, 0.3
    g = np.random.default_rng(0).random(1 << m)
    out = thin(g, m, p)
    direct = np.zeros(1 << m)
    for D, T in itertools.product(range(1 << m), repeat=2):
        if T & ~D == 0:
            k, r = bin(T).count("1"), bin(D & ~T).count("1")
            direct[T] += g[D] * p ** k * (1 - p) ** r
    assert np.allclose(out, direct, atol=1e-15)


def _pattern_loop_step(dist, m, C, p):
    """The explicit state x pattern transition (4^m loop)."""
    new = np.zeros_like(dist)
    for S in range(1 << m):
        if dist[S] == 0:
            continue
        for B in range(1 << m):
            k = bin(B).count("1")
            pr = p ** k * (1 - p) ** (m - k)
            Sn = 0
            for b in range(m):
                if B >> b & 1 and any(S >> s & 1 and abs(b - s) <= C for s in range(m)):
                    Sn |= 1 << b
            new[Sn] += dist[S] * pr
    return new


def test_fast_step_matches_pattern_loop():
    model = ColumnStateModel(5, 1, 0.35)
    for _ in range(4):
        expect = _pattern_loop_step(model.dist, 5, 1, 0.35)
        model.step()
        assert np.allclose(model.dist, expect, atol=1e-15)
        assert model.dist.sum() == pytest.approx(1.0, abs=1e-12)


def test_across_trivial_cases():
    for p in (0.1, 0.5, 0.9):
        assert across_prob_exact(1, 1, p, 6) == pytest.approx(p ** 6)
        assert across_prob_exact(7, 2, p, 1) == pytest.approx(1 - (1 - p) ** 7)


def test_across_matches_bruteforce():
    pmf = longest_run_dist_bruteforce(3, 4, 1, 0.3)
    assert across_prob_exact(3, 1, 0.3, 4) == pytest.approx(pmf[4], abs=1e-13)


def test_across_monotone():
    P = across_probs_exact(4, 1, 0.4, 20)
    assert np.all(np.diff(P) <= 0)
    assert across_prob_exact(4, 1, 0.5, 6) >= across_prob_exact(4, 1, 0.4, 6)
    assert across_prob_exact(5, 1, 0.4, 6) >= across_prob_exact(4, 1, 0.4, 6)


def test_rho_single_row_and_errors():
    assert rho_exact(1, 1, 0.37).rho == pytest.approx(0.37, abs=1e-12)
    with pytest.raises(ValueError):
        rho_exact(13, 1, 0.3)
    with pytest.raises(ValueError):
        rho_exact(3, 1, 0.0)
    with pytest.raises(RuntimeError):
        rho_exact(6, 1, 0.1, tol=1e-300, max_steps=3)


def test_rho_monotone_and_in_range():
    r = [[rho_exact(m, 1, p).rho for p in (0.1, 0.3, 0.5)] for m in (2, 3, 5)]
    assert np.all(np.diff(r, axis=0) >= 0) and np.all(np.diff(r, axis=1) >= 0)
    assert all(0 < x < 1 for row in r for x in row)


def test_rho_matches_direct_simulation():
    # nested across events of a 4-row net: P_9 / P_8 estimated directly
    from bernet.asymptotics import rho_hat
    est = rho_hat(4, 9, 1, 0.5, 200_000, 3)
    assert abs(est.rho - rho_exact(4, 1, 0.5).rho) < 4 * est.stderr + 0.01


def test_rho_extreme_small_mass():
    # thousands of steps with P_k far below 1e-300 must not underflow
    r = rho_exact(3, 1, 0.05, tol=1e-12)
    assert 0 < r.rho < 1
    assert np.isfinite(r.log_across)
    assert abs(r.log_across / r.k_converged - np.log(r.rho)) < 0.05


def test_stab_bounds_trivial():
    # q = 0 makes the upper bound 1 at p = 1
    assert stab_bounds(3, 5, 1, 1.0, 3) == (0.0, 1.0)
    assert stab_bounds(3, 5, 1, 0.0, 3) == (1.0, 1.0)
    with pytest.raises(ValueError):
        stab_bounds(3, 5, 1, 0.5, 6)


def test_stab_sandwich_example():
    pmf = longest_run_dist_bruteforce(3, 5, 1, 0.3)
    lo, hi = stab_bounds(3, 5, 1, 0.3, 3)
    assert lo <= pmf[:3].sum() <= hi


def test_bruteforce_pmf():
    p = 0.4
    pmf = longest_run_dist_bruteforce(1, 2, 1, p)
    assert pmf[2] == pytest.approx(p * p)
    assert longest_run_dist_bruteforce(3, 6, 2, 0.35).sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        longest_run_dist_bruteforce(5, 5, 1, 0.5)


def test_bruteforce_pmf_matches_simulation():
    pmf = longest_run_dist_bruteforce(2, 3, 1, 0.5)
    R = 1_000_000
    L = replicate_lengths(NetConfig.planar(2, 3, 1, 0.5, 17), R)
    freq = np.bincount(L, minlength=4) / R
    se = np.sqrt(pmf * (1 - pmf) / R)
    assert np.all(np.abs(freq - pmf) <= 4 * se + 1e-12)


def test_table_csv_header():
    rows = [rho_exact(2, 1, 0.3)]
    assert rho_table_csv(rows).splitlines()[0] == "m,p,rho,k_converged"
