"""Finite-size checks of the limit laws for the longest run.

Covers the Poisson approximation of the across probability, the inflating
region of admissible (m, n), the |L0| / log(mn) rate law and the Gumbel-type
limit in the fixed-m regime.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .longest_run import replicate_lengths
from .markov import rho_exact
from .net import NetConfig
from .parallel import map_keys
from .rng import replicate_keys


def poisson_approx_across(m: int, theta_n: float) -> float:
    """Across probability approximated by 1 - exp(-m theta_n)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 <= theta_n <= 1.0:
        raise ValueError("theta_n must lie in [0, 1]")
    return -math.expm1(-m * theta_n)


@dataclass(frozen=True)
class InflatingRegion:
    """(m, n) pairs with c1 n^(1+delta1) <= m <= c2 exp(n (phi - delta2))."""

    c1: float
    c2: float
    delta1: float
    delta2: float
    phi: float

    def __post_init__(self):
        if min(self.c1, self.c2, self.delta1, self.delta2, self.phi) <= 0:
            raise ValueError("all region parameters must be positive")

    @property
    def eventually_empty(self) -> bool:
        """The upper envelope stops growing faster than the lower one."""
        return self.delta2 >= self.phi

    def lower(self, n: float) -> float:
        return self.c1 * n ** (1.0 + self.delta1)

    def log_upper(self, n: float) -> float:
        return math.log(self.c2) + n * (self.phi - self.delta2)

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "delta1": self.delta1,
                "delta2": self.delta2, "phi": self.phi}


def region_membership(region: InflatingRegion, m: int, n: int) -> bool:
    if m < region.lower(n):
        return False
    # compare on the log scale: the upper envelope overflows quickly
    return math.log(m) <= region.log_upper(n)


# ---------------------------------------------------------------------------
# Across frequencies


@dataclass(frozen=True)
class AcrossEstimate:
    m: int
    n: int
    estimate: float
    stderr: float
    replicates: int


def across_depths(config: NetConfig, replicates: int, threads=None) -> np.ndarray:
    """Columns survived by the across frontier for each replicate net."""
    keys = replicate_keys(config.seed, replicates)
    return map_keys(
        lambda ks: kernels.across_depth_batch(ks, config.n, config.shape, config.Cs, config.p),
        keys, threads)


def across_frequency(config: NetConfig, replicates: int, threads=None) -> AcrossEstimate:
    """Direct Monte Carlo frequency of an across in the configured net."""
    depth = across_depths(config, replicates, threads)
    est = float(np.mean(depth >= config.n))
    return AcrossEstimate(config.rows_per_column, config.n, est,
                          math.sqrt(est * (1 - est) / replicates), replicates)


@dataclass(frozen=True)
class RhoHat:
    m: int
    n: int
    p: float
    rho: float
    stderr: float
    P_n: float
    P_prev: float
    replicates: int


def rho_hat(m: int, n: int, C: int, p: float, replicates: int, seed: int, threads=None) -> RhoHat:
    """Empirical P_n / P_{n-1} from the same replicates (nested events).

    Because an across of n columns implies one of n - 1 columns, the ratio
    is the conditional frequency; its error is binomial given the
    denominator count.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    cfg = NetConfig.planar(m, n, C, p, seed)
    depth = across_depths(cfg, replicates, threads)
    a = int(np.sum(depth >= n))
    b = int(np.sum(depth >= n - 1))
    if b == 0:
        raise ValueError("no replicate survived n - 1 columns; ratio undefined")
    r = a / b
    return RhoHat(m, n, p, r, math.sqrt(r * (1 - r) / b), a / replicates, b / replicates, replicates)


# ---------------------------------------------------------------------------
# Rate law


@dataclass(frozen=True)
class RateEntry:
    m: int
    n: int
    mean_ratio: float
    stderr: float
    replicates: int
    in_region: bool | None = None


@dataclass
class RateTable:
    C: int
    p: float
    phi_hat: float
    entries: list = field(default_factory=list)

    @property
    def target(self) -> float:
        return 1.0 / self.phi_hat if self.phi_hat > 0 else float("inf")

    def deviations(self) -> np.ndarray:
        return np.array([abs(e.mean_ratio - self.target) for e in self.entries])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n", "mean_ratio", "stderr", "replicates", "target", "in_region"])
        for e in self.entries:
            w.writerow([e.m, e.n, repr(e.mean_ratio), repr(e.stderr), e.replicates,
                        repr(self.target), "" if e.in_region is None else int(e.in_region)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"C": self.C, "p": self.p, "phi_hat": self.phi_hat, "target": self.target,
                "entries": [e.__dict__ for e in self.entries]}


def rate_sweep(C: int, p: float, phi_hat: float, sizes, replicates: int, seed: int,
               region: InflatingRegion | None = None, threads=None) -> RateTable:
    """Mean and standard error of |L0(m, n)| / log(mn) along a size ladder."""
    sizes = [(int(m), int(n)) for m, n in sizes]
    if sorted(sizes, key=lambda s: s[0] * s[1]) != sizes:
        raise ValueError("sizes must be ordered by m*n")
    table = RateTable(C, p, phi_hat)
    for m, n in sizes:
        lengths = replicate_lengths(NetConfig.planar(m, n, C, p, seed), replicates, threads)
        ratio = lengths / math.log(m * n)
        se = float(ratio.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
        inside = region_membership(region, m, n) if region is not None else None
        table.entries.append(RateEntry(m, n, float(ratio.mean()), se, replicates, inside))
    return table


# ---------------------------------------------------------------------------
# Gumbel-type limit


@dataclass(frozen=True)
class GumbelFit:
    m: int
    C: int
    p: float
    n: int
    rho: float
    A1: float
    ks_distance: float
    replicates: int

    def cdf(self, t) -> np.ndarray:
        """Limit law P(|L0| < log_{1/rho} n + t)."""
        return np.exp(-self.A1 * self.rho ** np.asarray(t, dtype=float))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _gumbel_probs(A1: float, rho: float, shift: float, support: np.ndarray) -> np.ndarray:
    # P(L = l) = F(l + 1 - shift) - F(l - shift)
    upper = np.exp(-A1 * rho ** (support + 1 - shift))
    lower = np.exp(-A1 * rho ** (support - shift))
    return upper - lower


def fit_gumbel_sample(lengths: np.ndarray, rho: float, n: int) -> tuple[float, float]:
    """Maximum likelihood A1 for integer lengths, and the KS distance of the fit."""
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.min() == lengths.max():
        raise ValueError("degenerate sample: all lengths equal")
    shift = math.log(n) / math.log(1.0 / rho)
    values, counts = np.unique(lengths, return_counts=True)

    def nll(logA):
        pr = _gumbel_probs(math.exp(logA), rho, shift, values.astype(float))
        return -float(np.sum(counts * np.log(np.maximum(pr, 1e-300))))

    res = optimize.minimize_scalar(nll, bounds=(-20.0, 20.0), method="bounded",
                                   options={"xatol": 1e-10})
    A1 = math.exp(res.x)
    grid = np.arange(values.min(), values.max() + 2)
    emp = np.searchsorted(np.sort(lengths), grid, side="left") / lengths.size
    model = np.exp(-A1 * rho ** (grid - shift))
    return A1, float(np.max(np.abs(emp - model)))


def gumbel_fit(m: int, C: int, p: float, n: int, replicates: int, seed: int,
               threads=None) -> GumbelFit:
    """Fit A1 of the fixed-m limit law with the exact rho(m, p)."""
    rho = rho_exact(m, C, p).rho
    lengths = replicate_lengths(NetConfig.planar(m, n, C, p, seed), replicates, threads)
    A1, ks = fit_gumbel_sample(lengths, rho, n)
    return GumbelFit(m, C, p, n, rho, A1, ks, replicates)


def to_json(obj) -> str:
    return json.dumps(obj.to_dict(), sort_keys=True)
