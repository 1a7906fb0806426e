"""The compiled and numpy kernels must agree bit for bit."""
import numpy as np
import pytest

from bernet import kernels
from bernet.rng import replicate_keys

ref = kernels.backends()["python"]


def test_selected_backend_is_known():
    assert kernels.BACKEND in kernels.backends()


@pytest.mark.parametrize("shape,Cs", [((7,), (1,)), ((9,), (3,)), ((4, 5), (1, 2))])
def test_net_kernels(backend, shape, Cs):
    keys = replicate_keys(3, 40)
    assert np.array_equal(backend.net_states(int(keys[0]), 11, shape, 0.4),
                          ref.net_states(int(keys[0]), 11, shape, 0.4))
    st = ref.net_states(int(keys[1]), 11, shape, 0.6)
    assert np.array_equal(backend.dp_table(st, shape, Cs), ref.dp_table(st, shape, Cs))
    for p in (0.0, 0.3, 0.7, 1.0):
        assert np.array_equal(backend.longest_run_batch(keys, 13, shape, Cs, p),
                              ref.longest_run_batch(keys, 13, shape, Cs, p))
        assert np.array_equal(backend.across_depth_batch(keys, 13, shape, Cs, p),
                              ref.across_depth_batch(keys, 13, shape, Cs, p))


@pytest.mark.parametrize("Cs,p", [((1,), 0.3), ((1,), 0.6), ((2,), 0.25), ((1, 1), 0.15)])
def test_tree_kernels(backend, Cs, p):
    keys = replicate_keys(8, 300)
    assert np.array_equal(backend.tree_depth_batch(keys, 25, Cs, p),
                          ref.tree_depth_batch(keys, 25, Cs, p))
    assert np.array_equal(backend.tree_splitting(12345, 20, Cs, p, 64),
                          ref.tree_splitting(12345, 20, Cs, p, 64))


@pytest.mark.parametrize("j", [0, 1, 2, 3])
def test_region_kernels(backend, j):
    pts = np.random.default_rng(j).random((400, 2))
    a = backend.region_counts(pts[:, 0], pts[:, 1], j, 6, 1)
    assert np.array_equal(a, ref.region_counts(pts[:, 0], pts[:, 1], j, 6, 1))
    lab = (a > 2).astype(np.uint8)
    assert backend.longest_path_labels(lab) == ref.longest_path_labels(lab)
