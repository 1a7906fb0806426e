"""Testing for an anomalous run planted in a Bernoulli net.

Under the null every node is Bernoulli(p0).  Under the alternative the
nodes of one unknown chain are Bernoulli(p1) with p1 > p0.  The test rejects
when the longest significant run exceeds log(mn) / phi(p0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..net import NetConfig, NodeCoord, connected
from ..parallel import map_items
from ..rng import TAG_CURVE, derive_key, replicate_keys, uniforms


def random_chain(config: NetConfig, key: int) -> list[NodeCoord]:
    """Monotone chain through every column with iid steps uniform on [-C, C].

    The start row is uniform; steps that would leave the net are clamped.
    """
    shape, Cs = config.shape, config.Cs
    u = uniforms(key, np.arange(config.n)[:, None], np.arange(len(shape))[None, :])
    rows = np.minimum((u[0] * np.array(shape)).astype(np.int64), np.array(shape) - 1)
    chain = [NodeCoord(1, tuple(rows + 1))]
    for c in range(1, config.n):
        step = np.minimum((u[c] * (2 * np.array(Cs) + 1)).astype(np.int64), 2 * np.array(Cs)) - Cs
        rows = np.clip(rows + step, 0, np.array(shape) - 1)
        chain.append(NodeCoord(c + 1, tuple(rows + 1)))
    return chain


@dataclass(frozen=True)
class AnomalyScenario:
    base: NetConfig
    p1: float
    chain: tuple | None = None  # fixed chain; None draws a random one per replicate

    def __post_init__(self):
        if not self.p1 >= self.base.p:
            raise ValueError("p1 must be at least p0")
        if self.p1 > 1.0:
            raise ValueError("p1 must lie in [0, 1]")
        if self.chain is not None:
            chain = tuple(self.chain)
            object.__setattr__(self, "chain", chain)
            if not all(connected(a, b, self.base.Cs) for a, b in zip(chain, chain[1:])):
                raise ValueError("planted chain is not connected")

    @property
    def p0(self) -> float:
        return self.base.p


@dataclass(frozen=True)
class AnomalyResult:
    type1_rate: float
    type2_rate: float
    threshold: float
    separated: bool
    replicates: int
    null_lengths: np.ndarray
    alt_lengths: np.ndarray

    def to_dict(self) -> dict:
        return {"type1_rate": self.type1_rate, "type2_rate": self.type2_rate,
                "threshold": self.threshold, "separated": self.separated,
                "replicates": self.replicates}


def decision_threshold(m_total: int, n: int, phi_p0: float) -> float:
    return math.log(m_total * n) / phi_p0


def separation_holds(chain_length: int, p1: float, threshold: float) -> bool:
    """Whether log_{1/p1} |L| exceeds the test threshold."""
    if p1 >= 1.0:
        return True
    if p1 <= 0.0:
        return False
    return math.log(chain_length) / math.log(1.0 / p1) > threshold


def planted_length(scenario: AnomalyScenario, key: int, chain_key: int) -> int:
    """Longest run of one alternative net.

    Chain nodes reuse the net's own uniform variates thresholded at p1, so
    they are Bernoulli(p1) and every other node keeps its Bernoulli(p0) state.
    """
    cfg = scenario.base
    states = kernels.net_states(key, cfg.n, cfg.shape, cfg.p)
    chain = scenario.chain if scenario.chain is not None else random_chain(cfg, chain_key)
    cols = np.array([c.col - 1 for c in chain], dtype=np.int64)
    flat = np.array([np.ravel_multi_index(tuple(r - 1 for r in c.rows), cfg.shape) for c in chain],
                    dtype=np.int64)
    u = uniforms(key, cols, flat)
    states[cols, flat] = (u < scenario.p1).astype(np.uint8)
    return int(kernels.dp_table(states, cfg.shape, cfg.Cs).max())


def plant_and_test_anomaly(scenario: AnomalyScenario, phi_p0: float, replicates: int,
                           seed: int | None = None, threads=None) -> AnomalyResult:
    """Empirical type I and type II error rates of the longest-run test.

    Null replicates use indices ``0..R-1`` of the seed's replicate stream and
    alternative replicates ``R..2R-1``, so the two samples are independent.
    """
    if phi_p0 <= 0:
        raise ValueError("phi(p0) must be positive; p0 is not subcritical")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    cfg = scenario.base
    seed = cfg.seed if seed is None else seed
    thr = decision_threshold(cfg.rows_per_column, cfg.n, phi_p0)
    null_keys = replicate_keys(seed, replicates)
    null = np.concatenate(map_items(
        lambda ks: kernels.longest_run_batch(ks, cfg.n, cfg.shape, cfg.Cs, cfg.p),
        [null_keys[i:i + 64] for i in range(0, replicates, 64)], threads))
    alt_keys = replicate_keys(seed, replicates, start=replicates)
    alt = np.array(map_items(
        lambda i: planted_length(scenario, int(alt_keys[i]), derive_key(seed, TAG_CURVE, i)),
        range(replicates), threads))
    chain_len = len(scenario.chain) if scenario.chain is not None else cfg.n
    return AnomalyResult(float(np.mean(null > thr)), float(np.mean(alt <= thr)), thr,
                         separation_holds(chain_len, scenario.p1, thr), replicates, null, alt)
