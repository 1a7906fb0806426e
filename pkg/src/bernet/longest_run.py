"""Longest significant run in a Bernoulli net.

The dynamic program keeps, for every node, the length of the longest
significant run ending there; the answer is the largest entry.  A brute
force depth-first search over all chains is provided as an oracle for small
nets.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .net import Net, NetConfig, NodeCoord, connected
from .parallel import map_keys
from .rng import replicate_keys

BRUTEFORCE_MAX_NODES = 64


@dataclass(frozen=True)
class RunResult:
    length: int
    path: tuple = ()

    def is_valid_for(self, net: Net) -> bool:
        """Structural check: connected, all significant, length matches."""
        if len(self.path) != self.length:
            return False
        Cs = net.config.Cs
        if any(not net.is_significant(c) for c in self.path):
            return False
        return all(connected(a, b, Cs) for a, b in zip(self.path, self.path[1:]))


def longest_run_dp(net: Net, with_path: bool = True) -> RunResult:
    """Longest significant run, with the run itself recovered by backtracking.

    Ties are broken toward the smallest column, then the lexicographically
    smallest transverse index, both for the end node and for predecessors.
    """
    cfg = net.config
    Y = kernels.dp_table(net.flat_states(), cfg.shape, cfg.Cs)
    best = int(Y.max())
    if best == 0 or not with_path:
        return RunResult(best, ())
    shape = cfg.shape
    col, pos = np.unravel_index(int(np.argmax(Y)), Y.shape)
    rows = np.unravel_index(pos, shape)
    path = [NodeCoord(int(col) + 1, tuple(int(r) + 1 for r in rows))]
    value = best
    while value > 1:
        cur = path[-1]
        prev_col = cur.col - 2  # 0-based index of previous column
        ranges = [range(max(0, r - 1 - c), min(m - 1, r - 1 + c) + 1)
                  for r, (m, c) in zip(cur.rows, cfg.row_dims)]
        for cand in itertools.product(*ranges):
            if Y[prev_col, np.ravel_multi_index(cand, shape)] == value - 1:
                path.append(NodeCoord(prev_col + 1, tuple(x + 1 for x in cand)))
                break
        else:  # pragma: no cover - the table guarantees a predecessor
            raise RuntimeError("inconsistent run table")
        value -= 1
    return RunResult(best, tuple(reversed(path)))


def longest_run_bruteforce(net: Net) -> int:
    """Exact longest chain length by exhaustive DFS from every significant node."""
    cfg = net.config
    if cfg.n * cfg.rows_per_column > BRUTEFORCE_MAX_NODES:
        raise ValueError(f"net too large for brute force (> {BRUTEFORCE_MAX_NODES} nodes)")
    st = net.states
    shape = cfg.shape
    offsets = list(itertools.product(*[range(-c, c + 1) for c in cfg.Cs]))

    def open_at(col, rows):
        return all(0 <= r < m for r, m in zip(rows, shape)) and st[(col,) + rows]

    def dfs(col, rows):
        if col + 1 >= cfg.n:
            return 1
        longest = 0
        for off in offsets:
            nxt = tuple(r + o for r, o in zip(rows, off))
            if open_at(col + 1, nxt):
                longest = max(longest, dfs(col + 1, nxt))
        return 1 + longest

    best = 0
    for col in range(cfg.n):
        for rows in itertools.product(*[range(m) for m in shape]):
            if st[(col,) + rows]:
                best = max(best, dfs(col, rows))
    return best


@dataclass
class LengthHistogram:
    config: NetConfig
    replicates: int
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = {int(k): int(v) for k, v in sorted(self.counts.items())}

    def quantile(self, q: float) -> float:
        lengths = np.repeat(list(self.counts), list(self.counts.values()))
        return float(np.quantile(lengths, q))

    @property
    def median(self) -> float:
        return self.quantile(0.5)

    def mean(self) -> float:
        return sum(k * v for k, v in self.counts.items()) / self.replicates

    def merge(self, other: "LengthHistogram") -> "LengthHistogram":
        merged = dict(self.counts)
        for k, v in other.counts.items():
            merged[k] = merged.get(k, 0) + v
        return LengthHistogram(self.config, self.replicates + other.replicates, merged)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["length", "count"])
        top = max(self.counts) if self.counts else 0
        for length in range(0, top + 1):
            w.writerow([length, self.counts.get(length, 0)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "replicates": self.replicates,
                "counts": {str(k): v for k, v in self.counts.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "LengthHistogram":
        return cls(NetConfig.from_dict(d["config"]), d["replicates"],
                   {int(k): v for k, v in d["counts"].items()})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def replicate_lengths(config: NetConfig, replicates: int, threads=None, start: int = 0) -> np.ndarray:
    """Longest-run lengths of replicates ``start..start+replicates-1``.

    Replicate ``i`` is the net generated from seed ``hash(config.seed, i)``.
    """
    keys = replicate_keys(config.seed, replicates, start)
    return map_keys(
        lambda ks: kernels.longest_run_batch(ks, config.n, config.shape, config.Cs, config.p),
        keys, threads)


def length_distribution(config: NetConfig, replicates: int, threads=None) -> LengthHistogram:
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    lengths = replicate_lengths(config, replicates, threads)
    values, counts = np.unique(lengths, return_counts=True)
    return LengthHistogram(config, replicates, dict(zip(values.tolist(), counts.tolist())))
