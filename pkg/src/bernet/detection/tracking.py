"""Target tracking in noisy frames.

Targets live on m locations and evolve over n time steps: empty sites spawn
a target with probability p0, occupied sites send their target left, keep
it, or send it right with probabilities p1, p2, p3 and otherwise lose it.
Observations add Gaussian noise.  The test thresholds the frames and
compares the longest C=1 run with the fixed-m or inflating threshold.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .. import kernels
from ..markov import rho_exact
from ..pseudotree import estimate_phi
from ..rng import TAG_NOISE, TAG_SCENE, derive_key, normals, uniforms


@dataclass(frozen=True)
class TrackConfig:
    m: int
    n: int
    p0: float
    p1: float
    p2: float
    p3: float
    sigma: float = 1.0
    initial: tuple = ()  # 1-based locations occupied at t = 1

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        for name in ("p0", "p1", "p2", "p3"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.p1 + self.p2 + self.p3 > 1.0:
            raise ValueError("p1 + p2 + p3 must not exceed 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "initial", tuple(int(i) for i in self.initial))
        if any(not 1 <= i <= self.m for i in self.initial):
            raise ValueError("initial locations must lie in [1, m]")

    @classmethod
    def null(cls, m: int, n: int, sigma: float = 1.0) -> "TrackConfig":
        """No target at any time."""
        return cls(m, n, 0.0, 0.0, 0.0, 0.0, sigma)

    def to_dict(self) -> dict:
        return {"m": self.m, "n": self.n, "p0": self.p0, "p1": self.p1, "p2": self.p2,
                "p3": self.p3, "sigma": self.sigma, "initial": list(self.initial)}


@dataclass(frozen=True)
class TrackScene:
    config: TrackConfig
    X: np.ndarray  # uint8 (n, m), row t-1 is time t
    Z: np.ndarray  # float (n, m)
    seed: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "location", "x", "z"])
        n, m = self.X.shape
        for t in range(n):
            for j in range(m):
                w.writerow([t + 1, j + 1, int(self.X[t, j]), repr(float(self.Z[t, j]))])
        return buf.getvalue()


def read_frames_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :meth:`TrackScene.to_csv`: returns (X, Z)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    t = np.array([int(r["t"]) for r in rows])
    loc = np.array([int(r["location"]) for r in rows])
    n, m = int(t.max()), int(loc.max())
    X = np.zeros((n, m), dtype=np.uint8)
    Z = np.zeros((n, m))
    X[t - 1, loc - 1] = [int(r["x"]) for r in rows]
    Z[t - 1, loc - 1] = [float(r["z"]) for r in rows]
    return X, Z


def evolve(X: np.ndarray, u: np.ndarray, cfg: TrackConfig) -> np.ndarray:
    """One motion step; ``u`` holds one uniform per location."""
    nxt = np.zeros(X.size, dtype=np.int64)
    empty = X == 0
    nxt += (empty & (u < cfg.p0))
    occ = ~empty
    left = occ & (u < cfg.p1)
    stay = occ & (u >= cfg.p1) & (u < cfg.p1 + cfg.p2)
    right = occ & (u >= cfg.p1 + cfg.p2) & (u < cfg.p1 + cfg.p2 + cfg.p3)
    nxt[:-1] += left[1:]  # a target at j moves to j-1; off the edge it is lost
    nxt += stay
    nxt[1:] += right[:-1]
    return np.minimum(nxt, 1).astype(np.uint8)


def simulate_track(cfg: TrackConfig, seed: int) -> TrackScene:
    key = derive_key(seed, TAG_SCENE)
    noise_key = derive_key(seed, TAG_NOISE)
    X = np.zeros((cfg.n, cfg.m), dtype=np.uint8)
    for i in cfg.initial:
        X[0, i - 1] = 1
    loc = np.arange(cfg.m)
    for t in range(1, cfg.n):
        X[t] = evolve(X[t - 1], uniforms(key, t, loc), cfg)
    Z = X + cfg.sigma * normals(noise_key, np.arange(cfg.n)[:, None], loc[None, :])
    return TrackScene(cfg, X, Z, seed)


@dataclass(frozen=True)
class TrackDecision:
    decision: bool
    statistic: int
    threshold: float
    z_star: float
    mode: str

    def to_dict(self) -> dict:
        return {"decision": "reject" if self.decision else "accept", "statistic": self.statistic,
                "threshold": self.threshold, "z_star": self.z_star, "mode": self.mode}


def track_threshold(m: int, n: int, p_target: float, mode: str, delta4: float = 0.1,
                    phi: float | None = None) -> float:
    if mode == "fixed":
        rho = rho_exact(m, 1, p_target).rho
        return (1 + delta4) * math.log(n) / math.log(1.0 / rho)
    if mode == "inflating":
        if phi is None:
            phi = estimate_phi((1,), p_target).phi_hat
        return (1 + delta4) * math.log(m * n) / phi
    raise ValueError(f"unknown mode {mode!r}")


def track_test(Z: np.ndarray, sigma: float, p_target: float = 0.3, mode: str = "inflating",
               delta4: float = 0.1, phi: float | None = None) -> TrackDecision:
    """Threshold the frames at Z* = sigma * z_(p_target) and test the longest run.

    ``Z`` is indexed (time, location); time plays the role of the column.
    """
    if not 0.0 < p_target < 1.0 / 3.0:
        raise ValueError("p_target must lie in (0, 1/3)")
    Z = np.asarray(Z, dtype=float)
    n, m = Z.shape
    z_star = sigma * float(stats.norm.isf(p_target))
    states = (Z > z_star).astype(np.uint8)
    stat = int(kernels.dp_table(states, (m,), (1,)).max())
    thr = track_threshold(m, n, p_target, mode, delta4, phi)
    return TrackDecision(stat > thr, stat, thr, z_star, mode)
