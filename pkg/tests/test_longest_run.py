import numpy as np
import pytest

from bernet.longest_run import (LengthHistogram, length_distribution, longest_run_bruteforce,
                                longest_run_dp, replicate_lengths)
from bernet.net import Net, NetConfig, generate_net
from bernet.rng import replicate_seeds


def _net(states, C=1):
    states = np.asarray(states, dtype=bool)
    return Net(NetConfig(states.shape[0], tuple((m, C) for m in states.shape[1:]), 0.5), states)


def test_trivial_nets():
    assert longest_run_dp(_net(np.zeros((4, 5)))).length == 0
    assert longest_run_dp(_net(np.zeros((4, 5)))).path == ()
    r = longest_run_dp(_net(np.ones((7, 3))))
    assert r.length == 7 and r.is_valid_for(_net(np.ones((7, 3))))


def test_single_node():
    s = np.zeros((3, 3))
    s[1, 2] = 1
    assert longest_run_bruteforce(_net(s)) == 1


def test_known_run_and_tie_break():
    # columns are rows of this array; a diagonal run of length 3 plus a flat one
    s = np.array([[1, 0, 0, 1],
                  [0, 1, 0, 1],
                  [0, 0, 1, 1]])
    r = longest_run_dp(_net(s))
    assert r.length == 3
    assert [c.rows[0] for c in r.path] == [1, 2, 3]


def test_dp_matches_bruteforce_random():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m, n, C = rng.integers(1, 7), rng.integers(1, 7), rng.integers(1, 3)
        net = generate_net(NetConfig.planar(int(m), int(n), int(C), float(rng.uniform(0.2, 0.8)),
                                            int(rng.integers(1 << 62))))
        r = longest_run_dp(net)
        assert r.length == longest_run_bruteforce(net)
        assert r.is_valid_for(net)


def test_dp_matches_bruteforce_two_axes():
    for seed in range(40):
        net = generate_net(NetConfig(4, ((3, 1), (3, 1)), 0.35, seed))
        assert longest_run_dp(net).length == longest_run_bruteforce(net)


def test_bruteforce_guard():
    with pytest.raises(ValueError):
        longest_run_bruteforce(generate_net(NetConfig.planar(10, 10, 1, 0.5)))


def test_flipping_a_node_never_shortens():
    rng = np.random.default_rng(1)
    for seed in range(50):
        net = generate_net(NetConfig.planar(8, 8, 1, 0.3, seed))
        base = longest_run_dp(net, with_path=False)
        s = net.states.copy()
        s[tuple(rng.integers(0, 8, size=2))] = True
        assert longest_run_dp(Net(net.config, s)).length >= longest_run_dp(net).length
        assert base.length == longest_run_dp(net).length and base.path == ()


def test_replicates_are_replayable():
    cfg = NetConfig.planar(9, 11, 1, 0.4, 5)
    lengths = replicate_lengths(cfg, 20)
    for i, s in enumerate(replicate_seeds(5, 20)):
        net = generate_net(NetConfig.planar(9, 11, 1, 0.4, int(s)))
        assert longest_run_dp(net).length == lengths[i]
    assert np.array_equal(replicate_lengths(cfg, 5, start=10), lengths[10:15])


def test_distribution_edges():
    h0 = length_distribution(NetConfig.planar(10, 10, 1, 0.0, 1), 30)
    assert h0.counts == {0: 30}
    h1 = length_distribution(NetConfig.planar(10, 10, 1, 1.0, 1), 30)
    assert h1.counts == {10: 30}


def test_histogram_merge_and_formats():
    cfg = NetConfig.planar(16, 16, 1, 0.3, 2)
    h = length_distribution(cfg, 100)
    assert sum(h.counts.values()) == 100
    assert all(0 <= k <= 16 for k in h.counts)
    lines = h.to_csv().splitlines()
    assert lines[0] == "length,count"
    assert len(lines) == max(h.counts) + 2
    assert LengthHistogram.from_dict(h.to_dict()).counts == h.counts
    merged = h.merge(h)
    assert merged.replicates == 200 and merged.median == h.median


def test_threads_do_not_change_results():
    cfg = NetConfig.planar(20, 20, 2, 0.3, 8)
    assert np.array_equal(replicate_lengths(cfg, 700, threads=1), replicate_lengths(cfg, 700, threads=3))


@pytest.mark.slow
def test_median_shift_orders_like_the_figures():
    def med(m, n, C):
        return length_distribution(NetConfig.planar(m, n, C, 0.2, 7), 1000).median
    base = med(128, 128, 1)
    shift_c = med(128, 128, 2) - base
    shift_n = med(128, 256, 1) - base
    assert shift_c > 0 and shift_c > shift_n
