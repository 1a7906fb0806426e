import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bernet.net import (NetConfig, NodeCoord, connected, generate_net, neighbors,
                        net_from_bytes)


def test_zero_and_one_probability():
    assert not generate_net(NetConfig.planar(7, 9, 1, 0.0, 3)).states.any()
    assert generate_net(NetConfig.planar(7, 9, 1, 1.0, 3)).states.all()


def test_fraction_of_significant_nodes():
    net = generate_net(NetConfig.planar(100, 100, 1, 0.5, 11))
    assert abs(net.states.mean() - 0.5) <= 0.02


def test_regeneration_is_identical():
    cfg = NetConfig(12, ((5, 1), (4, 2)), 0.4, 77)
    assert generate_net(cfg) == generate_net(cfg)
    assert generate_net(cfg).states.shape == (12, 5, 4)


@pytest.mark.parametrize("bad", [
    dict(n=0, row_dims=((3, 1),), p=0.5),
    dict(n=3, row_dims=((0, 1),), p=0.5),
    dict(n=3, row_dims=((3, 0),), p=0.5),
    dict(n=3, row_dims=(), p=0.5),
    dict(n=3, row_dims=((3, 1),), p=1.5),
])
def test_invalid_config(bad):
    with pytest.raises(ValueError):
        NetConfig(**bad)


def test_config_json_round_trip():
    cfg = NetConfig(5, ((3, 1), (2, 2)), 0.25, 2 ** 63 + 5)
    assert NetConfig.from_json(cfg.to_json()) == cfg
    assert set(cfg.to_dict()) == {"n", "row_dims", "p", "seed"}


def test_neighbors_interior_and_boundary():
    cfg = NetConfig.planar(5, 4, 1, 0.5)
    got = {(c.col, c.rows[0]) for c in neighbors(cfg, NodeCoord(1, (3,)))}
    assert got == {(2, 2), (2, 3), (2, 4)}
    got = {(c.col, c.rows[0]) for c in neighbors(cfg, NodeCoord(1, (1,)))}
    assert got == {(2, 1), (2, 2)}


def test_neighbors_81_in_3d():
    cfg = NetConfig(4, ((20, 4), (20, 4)), 0.5)
    assert len(neighbors(cfg, NodeCoord(2, (10, 10)))) == 81


def test_neighbors_errors():
    cfg = NetConfig.planar(5, 4, 1, 0.5)
    with pytest.raises(ValueError):
        neighbors(cfg, NodeCoord(4, (2,)))
    with pytest.raises(ValueError):
        neighbors(cfg, NodeCoord(1, (6,)))


@given(st.integers(1, 12), st.integers(1, 3), st.data())
@settings(max_examples=100, deadline=None)
def test_neighbor_reflection_symmetry(m, C, data):
    cfg = NetConfig.planar(m, 3, C, 0.5)
    r = data.draw(st.integers(1, m))
    a = {c.rows[0] for c in neighbors(cfg, NodeCoord(1, (r,)))}
    b = {m + 1 - c.rows[0] for c in neighbors(cfg, NodeCoord(1, (m + 1 - r,)))}
    assert a == b
    assert all(connected(NodeCoord(1, (r,)), NodeCoord(2, (x,)), (C,)) for x in a)


def test_dump_round_trip_and_header():
    cfg = NetConfig(6, ((5, 1), (3, 1)), 0.5, 9)
    net = generate_net(cfg)
    blob = net.to_bytes()
    assert blob[:4] == b"BNET"
    assert len(blob) == 16 + 8 + (6 * 15 + 7) // 8
    assert net_from_bytes(blob, cfg) == net
