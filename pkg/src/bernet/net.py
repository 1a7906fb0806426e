"""Bernoulli nets: configuration, seeded generation and connectivity.

Coordinates are 1-based at the public surface (column ``1..n``, transverse
``1..m_k``) and 0-based inside arrays.
"""
from __future__ import annotations

import itertools
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import net_key

MAGIC = b"BNET"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sHHII")  # magic, version, ndim, n, node count per column


@dataclass(frozen=True)
class NetConfig:
    """Dimensions, connectivity and significance probability of a net.

    ``row_dims`` holds one ``(m_k, C_k)`` pair per transverse axis; a single
    pair is the planar m-by-n net with connectivity C.
    """

    n: int
    row_dims: tuple
    p: float
    seed: int = 0

    def __post_init__(self):
        dims = tuple((int(m), int(c)) for m, c in self.row_dims)
        object.__setattr__(self, "row_dims", dims)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "seed", int(self.seed) & ((1 << 64) - 1))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not dims:
            raise ValueError("row_dims must be nonempty")
        for m, c in dims:
            if m < 1 or c < 1:
                raise ValueError(f"row extents and connectivities must be >= 1, got {(m, c)}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @classmethod
    def planar(cls, m: int, n: int, C: int, p: float, seed: int = 0) -> "NetConfig":
        return cls(n=n, row_dims=((m, C),), p=p, seed=seed)

    @property
    def shape(self) -> tuple:
        return tuple(m for m, _ in self.row_dims)

    @property
    def Cs(self) -> tuple:
        return tuple(c for _, c in self.row_dims)

    @property
    def rows_per_column(self) -> int:
        return int(np.prod(self.shape))

    def to_dict(self) -> dict:
        return {"n": self.n, "row_dims": [list(d) for d in self.row_dims],
                "p": self.p, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        return cls(n=d["n"], row_dims=tuple(tuple(x) for x in d["row_dims"]),
                   p=d["p"], seed=d.get("seed", 0))

    @classmethod
    def from_json(cls, text: str) -> "NetConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class NodeCoord:
    col: int
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))


@dataclass(frozen=True, eq=False)
class Net:
    """A realized net.  ``states[c, r1, ..., rd]`` is 1 for a significant node."""

    config: NetConfig
    states: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (self.config.n,) + self.config.shape
        if self.states.shape != expected:
            raise ValueError(f"states shape {self.states.shape} != {expected}")
        self.states.setflags(write=False)

    def __eq__(self, other):
        return (isinstance(other, Net) and self.config == other.config
                and np.array_equal(self.states, other.states))

    def is_significant(self, coord: NodeCoord) -> bool:
        check_coord(self.config, coord)
        return bool(self.states[(coord.col - 1,) + tuple(r - 1 for r in coord.rows)])

    def flat_states(self) -> np.ndarray:
        """States as an (n, rows_per_column) uint8 array."""
        return self.states.reshape(self.config.n, -1).astype(np.uint8)

    def to_bytes(self) -> bytes:
        cfg = self.config
        header = _HEADER.pack(MAGIC, DUMP_VERSION, len(cfg.shape), cfg.n, cfg.rows_per_column)
        extents = struct.pack(f"<{len(cfg.shape)}I", *cfg.shape)
        bits = np.packbits(self.states.astype(np.uint8).ravel(), bitorder="little")
        return header + extents + bits.tobytes()


def net_from_bytes(data: bytes, config: NetConfig) -> Net:
    """Inverse of :meth:`Net.to_bytes`; ``config`` supplies C, p and seed."""
    magic, version, ndim, n, per_col = _HEADER.unpack_from(data, 0)
    if magic != MAGIC or version != DUMP_VERSION:
        raise ValueError("not a net dump")
    off = _HEADER.size
    shape = struct.unpack_from(f"<{ndim}I", data, off)
    off += 4 * ndim
    if n != config.n or tuple(shape) != config.shape or per_col != config.rows_per_column:
        raise ValueError("dump dimensions do not match config")
    bits = np.frombuffer(data, dtype=np.uint8, offset=off)
    flat = np.unpackbits(bits, bitorder="little")[: n * per_col]
    return Net(config, flat.reshape((n,) + tuple(shape)).astype(bool))


def generate_net(config: NetConfig) -> Net:
    """Draw every node independently as Bernoulli(p), keyed by the config seed."""
    key = int(net_key(config.seed))
    flat = kernels.net_states(key, config.n, config.shape, config.p)
    return Net(config, flat.reshape((config.n,) + config.shape).astype(bool))


def check_coord(config: NetConfig, coord: NodeCoord) -> None:
    if not 1 <= coord.col <= config.n:
        raise ValueError(f"column {coord.col} outside [1, {config.n}]")
    if len(coord.rows) != len(config.shape):
        raise ValueError(f"expected {len(config.shape)} transverse coordinates")
    for r, m in zip(coord.rows, config.shape):
        if not 1 <= r <= m:
            raise ValueError(f"row {r} outside [1, {m}]")


def neighbors(config: NetConfig, coord: NodeCoord) -> list[NodeCoord]:
    """Nodes of the next column connected to ``coord``."""
    check_coord(config, coord)
    if coord.col >= config.n:
        raise ValueError("last column has no successors")
    ranges = [range(max(1, r - c), min(m, r + c) + 1)
              for r, (m, c) in zip(coord.rows, config.row_dims)]
    return [NodeCoord(coord.col + 1, rows) for rows in itertools.product(*ranges)]


def connected(a: NodeCoord, b: NodeCoord, Cs) -> bool:
    """True iff ``b`` lies in the column after ``a`` within every connectivity band."""
    return (b.col - a.col == 1
            and all(abs(x - y) <= c for x, y, c in zip(a.rows, b.rows, Cs)))
