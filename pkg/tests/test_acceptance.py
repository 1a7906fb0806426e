"""Acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (visible under ``pytest -v`` without
``-s``) and then asserts.  Tolerances are the stated ones; nothing is relaxed.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time

import numpy as np
import pytest

from bernet.asymptotics import across_frequency, poisson_approx_across, rate_sweep, rho_hat
from bernet.cli import COMMANDS, run
from bernet.detection.anomaly import AnomalyScenario, plant_and_test_anomaly
from bernet.detection.msra import compute_thresholds, msra_test, sample_scene
from bernet.detection.tracking import TrackConfig, simulate_track, track_test
from bernet.longest_run import longest_run_bruteforce, longest_run_dp
from bernet.markov import longest_run_dist_bruteforce, stab_bounds, table1
from bernet.net import NetConfig, generate_net
from bernet.pseudotree import (PseudoTreeConfig, estimate_phi, theta_exact, theta_mc,
                               theta_series)

# reference rho(m, p) for C = 1; rows m = 4, 8, 10, columns p = 0.1 .. 0.6
TABLE_RHO = {
    4: (0.2444, 0.4564, 0.6341, 0.7758, 0.8804, 0.9482),
    8: (0.2654, 0.4955, 0.6869, 0.8363, 0.9383, 0.9876),
    10: (0.2691, 0.5022, 0.6958, 0.8467, 0.9486, 0.9930),
}
TABLE_PS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)

# phi(0.2), C = 1, shared by criteria 5, 7 and 10
PHI_ARGS = dict(C=(1,), p=0.2, kmax=400, replicates=1_000_000, seed=3)


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    return _report


def test_c01_table_rho(report):
    t0 = time.perf_counter()
    rows = table1((4, 8, 10), TABLE_PS, C=1)
    elapsed = time.perf_counter() - t0
    worst, where = 0.0, None
    for r in rows:
        ref = TABLE_RHO[r.m][TABLE_PS.index(r.p)]
        if abs(r.rho - ref) > worst:
            worst, where = abs(r.rho - ref), (r.m, r.p, r.rho, ref)
    ok = worst <= 5e-4 and elapsed < 120
    report(1, ok, f"max |rho - table| = {worst:.4g} at m={where[0]}, p={where[1]} "
                  f"({where[2]:.4f} vs {where[3]:.4f}); tol 5e-4; {elapsed:.2f}s")
    assert ok


def test_c02_dp_vs_bruteforce(report):
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(500):
        m, n, C = int(rng.integers(1, 7)), int(rng.integers(1, 7)), int(rng.integers(1, 3))
        cfg = NetConfig.planar(m, n, C, float(rng.uniform(0.1, 0.9)), int(rng.integers(1 << 62)))
        net = generate_net(cfg)
        mismatches += longest_run_dp(net).length != longest_run_bruteforce(net)
    report(2, mismatches == 0, f"{mismatches} mismatches over 500 nets")
    assert mismatches == 0


def test_c03_theta_oracle(report):
    worst = 0.0
    for p in (0.2, 0.3):
        cfg = PseudoTreeConfig([1], p)
        for k in (1, 2, 3, 4):
            e = theta_mc(cfg, k, 1_000_000, seed=100 + k)
            worst = max(worst, abs(e.estimate - theta_exact(cfg, k)) / e.stderr)
    ok = worst <= 3
    report(3, ok, f"max |theta_mc - theta_exact| = {worst:.2f} standard errors (limit 3)")
    assert ok


def test_c04_stab_sandwich(report):
    bad = []
    for p in (0.2, 0.3, 0.5):
        pmf = longest_run_dist_bruteforce(3, 5, 1, p)
        for k in (2, 3, 4, 5):
            lo, hi = stab_bounds(3, 5, 1, p, k)
            exact = pmf[:k].sum()
            if not lo - 1e-12 <= exact <= hi + 1e-12:
                bad.append((p, k, lo, exact, hi))
    report(4, not bad, f"{len(bad)} of 12 (p, k) cells outside the bounds")
    assert not bad


def test_c05_phi_sandwich(report):
    fit = estimate_phi(**PHI_ARGS)
    series = theta_series(PseudoTreeConfig([1], 0.2), PHI_ARGS["kmax"], PHI_ARGS["replicates"],
                          PHI_ARGS["seed"])
    holds = fit.sandwich_holds(series)
    bound = -math.log(3 * 0.2) - 0.05
    ok = holds and fit.phi_hat >= bound
    report(5, ok, f"phi_hat = {fit.phi_hat:.4f} (bound {bound:.4f}), window {fit.k_window}, "
                  f"sigma1 = {fit.sigma1:.4g}, sigma2 = {fit.sigma2:.4g}, sandwich holds: {holds}")
    assert ok


def test_c06_poisson_approximation(report):
    m, n, p = 2000, 30, 0.2
    s = theta_series(PseudoTreeConfig([1], p), n, 1_000_000, seed=6)
    th, th_se = s.entries[-1].estimate, s.entries[-1].stderr
    approx = poisson_approx_across(m, th)
    approx_se = m * math.exp(-m * th) * th_se
    direct = across_frequency(NetConfig.planar(m, n, 1, p, 66), 100_000)
    gap = abs(approx - direct.estimate)
    limit = 3 * math.hypot(approx_se, direct.stderr) + 0.02
    ok = gap <= limit
    report(6, ok, f"approx {approx:.3g} vs direct {direct.estimate:.3g}; gap {gap:.3g} <= {limit:.3g}")
    assert ok


def test_c07_rate_ladder(report):
    phi = estimate_phi(**PHI_ARGS).phi_hat
    t0 = time.perf_counter()
    table = rate_sweep(1, 0.2, phi, [(64, 64), (128, 128), (256, 256)], 1000, seed=7)
    elapsed = time.perf_counter() - t0
    dev = table.deviations()
    monotone = bool(np.all(np.diff(dev) <= 0))
    final = dev[-1] / table.target
    ok = monotone and final <= 0.15 and elapsed < 600
    means = ", ".join(f"{e.mean_ratio:.3f}" for e in table.entries)
    report(7, ok, f"mean ratios {means} vs 1/phi = {table.target:.3f}; deviation nonincreasing: "
                  f"{monotone}; final relative deviation {final:.1%} (limit 15%); {elapsed:.1f}s")
    assert ok


def test_c08_supercritical_rho(report):
    r = rho_hat(4096, 64, 1, 0.8, 2000, seed=8)
    ok = r.rho + 3 * r.stderr >= 0.99
    report(8, ok, f"rho_hat = {r.rho:.4f} +/- {r.stderr:.2g} (P_n = {r.P_n:.4f})")
    assert ok


def test_c09_rho_monotone(report):
    rows = {(r.m, r.p): r.rho for r in table1((4, 8, 10), TABLE_PS, C=1)}
    grid = np.array([[rows[m, p] for p in TABLE_PS] for m in (4, 8, 10)])
    ok = bool(np.all(np.diff(grid, axis=0) >= 0) and np.all(np.diff(grid, axis=1) >= 0))
    report(9, ok, "rho nondecreasing in m and in p on the 3 x 6 grid")
    assert ok


def test_c10_anomaly_power(report):
    phi = estimate_phi(**PHI_ARGS).phi_hat
    sc = AnomalyScenario(NetConfig.planar(256, 256, 1, 0.2, 10), 0.8)
    r = plant_and_test_anomaly(sc, phi, 200, seed=10)
    ok = r.type1_rate <= 0.05 and r.type2_rate <= 0.05
    report(10, ok, f"type I {r.type1_rate:.3f}, type II {r.type2_rate:.3f} (limit 0.05 each); "
                   f"threshold {r.threshold:.2f}")
    assert ok


def test_c11_msra(report):
    t0 = time.perf_counter()
    th = compute_thresholds(2048, 2.0, 1.0, 1)
    eps = 2 * th.T_star * 2048 ** (-2.0 / 3.0)
    rej0 = np.mean([msra_test(sample_scene(2048, 2, 1, 1, 0.0, s, "H0").points, th).decision
                    for s in range(50)])
    rej1 = np.mean([msra_test(sample_scene(2048, 2, 1, 1, eps, s, "H1").points, th).decision
                    for s in range(50)])
    elapsed = time.perf_counter() - t0
    ok = rej0 <= 0.10 and rej1 >= 0.90 and elapsed < 1800
    report(11, ok, f"H0 rejection {rej0:.2f} (<= 0.10), H1 rejection {rej1:.2f} (>= 0.90) at "
                   f"eps = {eps:.3f}; L* = {th.L_star:.2f}; {elapsed:.0f}s")
    assert ok


def test_c12_track_false_alarm(report):
    phi = estimate_phi((1,), 0.3).phi_hat
    cfg = TrackConfig.null(256, 256, sigma=1.0)
    rej = np.mean([track_test(simulate_track(cfg, s).Z, 1.0, 0.3, "inflating", 0.1, phi).decision
                   for s in range(200)])
    ok = rej <= 0.05
    report(12, ok, f"false alarm rate {rej:.3f} over 200 seeds (limit 0.05)")
    assert ok


# modest sizes per command; every subcommand is exercised
CLI_RUNS = {
    "simulate-net": ["--m", "12", "--n", "10", "--p", "0.4"],
    "longest-run": ["--m", "20", "--n", "20", "--p", "0.4"],
    "hist": ["--m", "64", "--n", "64", "--reps", "600"],
    "theta": ["--kmax", "30", "--reps", "20000"],
    "phi": ["--kmax", "60", "--reps", "40000"],
    "pc": ["--depth", "32", "--reps", "300", "--tol", "0.02"],
    "rho-exact": ["--m", "6"],
    "table1": [],
    "stab-bounds": [],
    "poisson-approx": ["--m", "200", "--n", "12", "--reps", "20000", "--direct-reps", "2000"],
    "rate-check": ["--sizes", "32x32,64x64", "--reps", "300", "--phi", "0.635"],
    "gumbel": ["--m", "2", "--n", "2000", "--reps", "500"],
    "detect-anomaly": ["--m", "64", "--n", "64", "--reps", "60", "--phi", "0.635"],
    "detect-filament": ["--N", "512"],
    "thresholds": ["--N", "1024"],
    "track-sim": ["--m", "16", "--n", "16", "--p0", "0.05", "--p2", "0.8"],
    "track-test": ["--m", "64", "--n", "64", "--phi", "0.306"],
}


def test_c13_cli_determinism(report, tmp_path):
    assert set(CLI_RUNS) == set(COMMANDS)
    differ = []
    for name, extra in CLI_RUNS.items():
        for fmt in ("csv", "json"):
            first = tmp_path / f"{name}.{fmt}"
            code = run([name, *extra, "--seed", "13", "--format", fmt, "--threads", "1",
                        "--out", str(first)])
            assert code == 0, name
            manifest = str(first) + ".manifest.json"
            for threads in ("2", "4"):
                again = tmp_path / f"{name}.{threads}.{fmt}"
                assert run([name, "--config", manifest, "--threads", threads,
                            "--out", str(again)]) == 0, name
                if again.read_bytes() != first.read_bytes():
                    differ.append(f"{name}/{fmt}/threads={threads}")
    report(13, not differ, f"{2 * len(CLI_RUNS)} command/format pairs replayed at 2 and 4 threads; "
                           f"differences: {differ or 'none'}")
    assert not differ


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
