"""Origin-rooted runs in the pseudo-tree lattice.

Column c of the lattice holds the nodes with transverse offsets
``|j_k| <= c*C_k``; edges go to the next column with per-axis steps of at
most ``C_k``.  ``theta_k(p)`` is the probability that the origin reaches
column ``k-1`` through significant nodes.

Estimates come from frontier simulation: only the set of reachable
significant nodes in the current column is ever stored.  Deep, exponentially
rare depths are reached with fixed-effort splitting (clone survivors at
every column, multiply the surviving fractions).
"""
from __future__ import annotations

import csv
import functools
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .parallel import map_items, map_keys
from .rng import TAG_BATCH, derive_key, replicate_keys

THETA_EXACT_MAX_NODES = 24
SPLITTING_MIN_SURVIVORS = 50


@dataclass(frozen=True)
class PseudoTreeConfig:
    C: tuple
    p: float

    def __post_init__(self):
        Cs = tuple(int(c) for c in (self.C if np.iterable(self.C) else (self.C,)))
        object.__setattr__(self, "C", Cs)
        object.__setattr__(self, "p", float(self.p))
        if not Cs or any(c < 1 for c in Cs):
            raise ValueError("C must be a nonempty list of positive integers")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @property
    def d(self) -> int:
        return len(self.C)

    @property
    def branching(self) -> int:
        """Number of successors of every node, prod(2 C_k + 1)."""
        return int(np.prod([2 * c + 1 for c in self.C]))

    def to_dict(self) -> dict:
        return {"C": list(self.C), "p": self.p}


@dataclass(frozen=True)
class ThetaEntry:
    k: int
    estimate: float
    stderr: float
    replicates: int


@dataclass
class ThetaSeries:
    config: PseudoTreeConfig
    entries: list = field(default_factory=list)
    method: str = "naive"

    @property
    def ks(self) -> np.ndarray:
        return np.array([e.k for e in self.entries])

    @property
    def estimates(self) -> np.ndarray:
        return np.array([e.estimate for e in self.entries])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for e in self.entries])

    def entry(self, k: int) -> ThetaEntry:
        for e in self.entries:
            if e.k == k:
                return e
        raise KeyError(k)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "estimate", "stderr", "replicates"])
        for e in self.entries:
            w.writerow([e.k, repr(e.estimate), repr(e.stderr), e.replicates])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "method": self.method,
                "entries": [[e.k, e.estimate, e.stderr, e.replicates] for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaSeries":
        cfg = PseudoTreeConfig(tuple(d["config"]["C"]), d["config"]["p"])
        return cls(cfg, [ThetaEntry(int(k), float(e), float(s), int(r)) for k, e, s, r in d["entries"]],
                   d.get("method", "naive"))


# ---------------------------------------------------------------------------
# Estimation


def _depths(config: PseudoTreeConfig, K: int, replicates: int, seed: int, threads=None) -> np.ndarray:
    keys = replicate_keys(seed, replicates)
    return map_keys(lambda ks: kernels.tree_depth_batch(ks, K, config.C, config.p),
                    keys, threads, chunk=4096)


def theta_mc(config: PseudoTreeConfig, k: int, replicates: int, seed: int, threads=None) -> ThetaEntry:
    """Plain Monte Carlo estimate of theta_k with its binomial standard error."""
    if k < 1 or replicates < 1:
        raise ValueError("k and replicates must be >= 1")
    depth = _depths(config, k, replicates, seed, threads)
    est = float(np.mean(depth >= k))
    return ThetaEntry(k, est, math.sqrt(est * (1.0 - est) / replicates), replicates)


def theta_series_naive(config: PseudoTreeConfig, kmax: int, replicates: int, seed: int,
                       threads=None) -> ThetaSeries:
    """theta_1..theta_kmax from one set of replicates (entries share draws).

    Two series with the same seed and different p are coupled: every node
    uses the same uniform variate, so the larger p dominates pathwise.
    """
    depth = _depths(config, kmax, replicates, seed, threads)
    counts = np.bincount(np.minimum(depth, kmax), minlength=kmax + 1)
    at_least = np.cumsum(counts[::-1])[::-1]
    entries = []
    for k in range(1, kmax + 1):
        est = at_least[k] / replicates
        entries.append(ThetaEntry(k, float(est), math.sqrt(est * (1 - est) / replicates), replicates))
    return ThetaSeries(config, entries, "naive")


def theta_series_splitting(config: PseudoTreeConfig, kmax: int, effort: int, batches: int,
                           seed: int, threads=None) -> ThetaSeries:
    """Fixed-effort splitting: ``batches`` independent runs of ``effort`` particles.

    Each batch yields an unbiased product-form estimate of every theta_k; the
    entry is the batch mean and its standard error the batch spread.
    """
    if batches < 2:
        raise ValueError("need at least 2 batches for a standard error")
    keys = [derive_key(seed, TAG_BATCH, b) for b in range(batches)]
    runs = np.array(map_items(
        lambda bk: kernels.tree_splitting(bk, kmax, config.C, config.p, effort), keys, threads))
    mean = runs.mean(axis=0)
    se = runs.std(axis=0, ddof=1) / math.sqrt(batches)
    entries = [ThetaEntry(k + 1, float(mean[k]), float(se[k]), effort * batches)
               for k in range(kmax)]
    return ThetaSeries(config, entries, "splitting")


def theta_series(config: PseudoTreeConfig, kmax: int, replicates: int, seed: int,
                 method: str = "auto", batches: int = 20, threads=None) -> ThetaSeries:
    """theta_1..theta_kmax, switching to splitting when plain MC runs dry.

    ``auto`` runs plain Monte Carlo first and falls back to splitting (same
    total effort) when fewer than 50 replicates survive to ``kmax``.
    """
    if method not in ("auto", "naive", "splitting"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "naive"):
        series = theta_series_naive(config, kmax, replicates, seed, threads)
        survivors = series.entries[-1].estimate * replicates
        if method == "naive" or survivors >= SPLITTING_MIN_SURVIVORS or config.p in (0.0, 1.0):
            return series
    effort = max(1, replicates // batches)
    return theta_series_splitting(config, kmax, effort, batches, seed, threads)


def column_nodes(c: int, C) -> list[tuple]:
    """Transverse offsets of column ``c`` of the pseudo-tree."""
    return list(itertools.product(*[range(-c * ck, c * ck + 1) for ck in C]))


def theta_exact(config: PseudoTreeConfig, k: int) -> float:
    """theta_k by enumerating every state configuration of columns 0..k-1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    C = config.C
    cols = [column_nodes(c, C) for c in range(k)]
    total = sum(len(c) for c in cols)
    if total > THETA_EXACT_MAX_NODES:
        raise ValueError(f"{total} nodes exceed the enumeration limit {THETA_EXACT_MAX_NODES}")
    p, q = config.p, 1.0 - config.p
    # predecessor lists between consecutive columns
    preds = []
    for c in range(1, k):
        prev = {node: i for i, node in enumerate(cols[c - 1])}
        lists = []
        for node in cols[c]:
            lists.append([prev[src] for src in prev
                          if all(abs(a - b) <= ck for a, b, ck in zip(node, src, C))])
        preds.append(lists)
    n_cfg = 1 << total
    prob = 0.0
    chunk = 1 << 16
    for start in range(0, n_cfg, chunk):
        cfg = np.arange(start, min(n_cfg, start + chunk), dtype=np.int64)
        bit = 0
        reach = None
        ones = np.zeros(cfg.size, dtype=np.int64)
        for c in range(k):
            st = np.stack([(cfg >> (bit + i)) & 1 for i in range(len(cols[c]))], axis=1).astype(bool)
            bit += len(cols[c])
            ones += st.sum(axis=1)
            if c == 0:
                reach = st
            else:
                fed = np.stack([reach[:, lst].any(axis=1) for lst in preds[c - 1]], axis=1)
                reach = st & fed
        hit = reach.any(axis=1)
        zeros = total - ones
        w = np.where(ones > 0, p ** ones, 1.0) * np.where(zeros > 0, q ** zeros, 1.0)
        prob += float(w[hit].sum())
    return prob


# ---------------------------------------------------------------------------
# Decay-rate fit


@dataclass(frozen=True)
class PhiFit:
    phi_hat: float
    k_window: tuple
    sigma1: float
    sigma2: float
    ratio_estimate: float
    d: int = 1
    intercept: float = 0.0
    slope: float = 0.0

    def sandwich_holds(self, series: ThetaSeries, rtol: float = 1e-9) -> bool:
        """sigma1 k^-d e^{-k phi} <= theta_k <= sigma2 k^d e^{-k phi} on the window."""
        lo_k, hi_k = self.k_window
        for e in series.entries:
            if lo_k <= e.k <= hi_k:
                base = math.exp(-e.k * self.phi_hat)
                lower = self.sigma1 * e.k ** (-self.d) * base
                upper = self.sigma2 * e.k ** self.d * base
                if not (lower * (1 - rtol) <= e.estimate <= upper * (1 + rtol)):
                    return False
        return True

    def to_dict(self) -> dict:
        return {"phi_hat": self.phi_hat, "k_window": list(self.k_window),
                "sigma1": self.sigma1, "sigma2": self.sigma2,
                "ratio_estimate": self.ratio_estimate, "d": self.d,
                "intercept": self.intercept, "slope": self.slope}

    @classmethod
    def from_dict(cls, d: dict) -> "PhiFit":
        return cls(d["phi_hat"], tuple(d["k_window"]), d["sigma1"], d["sigma2"],
                   d["ratio_estimate"], d.get("d", 1), d.get("intercept", 0.0), d.get("slope", 0.0))


class InsufficientDataError(ValueError):
    """Too few usable theta estimates; increase replicates or use splitting."""


def fit_window(series: ThetaSeries, rel_cap: float = 0.2, ratio_tol: float = 0.1,
               k_floor: int = 8, min_points: int = 4) -> tuple[int, int]:
    """Pick the fit window.

    ``k_max`` is the largest k whose relative standard error is below
    ``rel_cap``.  ``k_min`` is the first k >= ``k_floor`` at which the ratio
    theta_k / theta_{k-1} has settled to within ``ratio_tol`` of its
    predecessor.  If that leaves fewer than ``min_points`` entries, the
    window is extended downward.
    """
    ks = series.ks
    est = series.estimates
    se = series.stderrs
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(est > 0, se / est, np.inf)
    usable = (est > 0) & (rel < rel_cap)
    if usable.sum() < min_points:
        raise InsufficientDataError(
            f"only {int(usable.sum())} usable theta entries (need {min_points}); "
            "increase replicates or switch to splitting")
    # the usable prefix: stop at the first unusable entry
    first_bad = np.argmin(usable) if not usable.all() else len(ks)
    ks_u = ks[:first_bad]
    est_u = est[:first_bad]
    if ks_u.size < min_points:
        raise InsufficientDataError("usable entries are not contiguous from k=1")
    k_max = int(ks_u[-1])
    ratios = est_u[1:] / est_u[:-1]
    k_min = None
    for i in range(1, ratios.size):
        k = int(ks_u[i + 1])
        if k >= k_floor and abs(ratios[i] - ratios[i - 1]) < ratio_tol * ratios[i - 1]:
            k_min = k
            break
    if k_min is None:
        k_min = max(k_floor, int(ks_u[0]))
    # ensure at least min_points in the window
    in_window = ks_u[(ks_u >= k_min) & (ks_u <= k_max)]
    if in_window.size < min_points:
        k_min = int(ks_u[-min_points])
    return k_min, k_max


def phi_fit(series: ThetaSeries, window: tuple | None = None, rel_cap: float = 0.2) -> PhiFit:
    """Least-squares decay rate of log theta_k over the fit window."""
    k_min, k_max = window if window is not None else fit_window(series, rel_cap)
    sel = [e for e in series.entries if k_min <= e.k <= k_max]
    if len(sel) < 2 or any(e.estimate <= 0 for e in sel):
        raise InsufficientDataError("fit window contains zero or too few estimates")
    ks = np.array([e.k for e in sel], dtype=float)
    logs = np.log([e.estimate for e in sel])
    slope, intercept = np.polyfit(ks, logs, 1)
    phi = max(0.0, -float(slope))
    d = series.config.d
    est = np.exp(logs)
    sigma1 = float(np.min(est * ks ** d * np.exp(ks * phi)))
    sigma2 = float(np.max(est * ks ** (-d) * np.exp(ks * phi)))
    last = series.entry(int(ks[-1])).estimate
    before = series.entry(int(ks[-1]) - 1).estimate
    ratio = last / before if before > 0 else float("nan")
    return PhiFit(phi, (int(ks[0]), int(ks[-1])), sigma1, sigma2, float(ratio), d,
                  float(intercept), float(slope))


# ---------------------------------------------------------------------------
# Critical probability bracket


@dataclass(frozen=True)
class PcBracket:
    lower: float
    upper: float
    depth: int
    survival_threshold: float

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "depth": self.depth,
                "threshold": self.survival_threshold}


def survival_probability(C, p: float, depth: int, replicates: int, seed: int, threads=None) -> float:
    """Fraction of replicates whose origin reaches column ``depth - 1``."""
    cfg = PseudoTreeConfig(C, p)
    d = _depths(cfg, depth, replicates, seed, threads)
    return float(np.mean(d >= depth))


def pc_bracket(C, depth: int = 256, survival_threshold: float = 0.05, replicates: int = 1000,
               seed: int = 0, tol: float = 1e-3, threads=None) -> PcBracket:
    """Bisect p on the depth-limited survival probability.

    All probes share their uniform variates, so survival is monotone in p
    and the bisection is well defined.  The lower end never goes below the
    branching bound 1 / prod(2 C_k + 1).
    """
    if depth < 32:
        raise ValueError("depth must be >= 32")
    if not 0.0 < survival_threshold < 1.0:
        raise ValueError("survival_threshold must lie in (0, 1)")
    Cs = PseudoTreeConfig(C, 0.5).C
    bound = 1.0 / PseudoTreeConfig(Cs, 0.5).branching
    surv = lambda p: survival_probability(Cs, p, depth, replicates, seed, threads)  # noqa: E731
    lo, hi = 0.0, 1.0
    if surv(hi) <= survival_threshold:
        raise RuntimeError("survival at p=1 below threshold; bisection cannot separate")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if surv(mid) > survival_threshold:
            hi = mid
        else:
            lo = mid
    return PcBracket(max(lo, bound), max(hi, bound), depth, survival_threshold)


def monotonicity_check(series_a: ThetaSeries, series_b: ThetaSeries) -> bool:
    """True iff theta_k(p_a) <= theta_k(p_b) at every k (p_a <= p_b)."""
    if series_a.config.C != series_b.config.C:
        raise ValueError("series use different connectivity")
    if list(series_a.ks) != list(series_b.ks):
        raise ValueError("series use different k grids")
    if series_a.config.p > series_b.config.p:
        series_a, series_b = series_b, series_a
    return bool(np.all(series_a.estimates <= series_b.estimates))


def series_to_json(series: ThetaSeries, fit: PhiFit | None = None) -> str:
    d = series.to_dict()
    if fit is not None:
        d["fit"] = fit.to_dict()
    return json.dumps(d, sort_keys=True)


@functools.lru_cache(maxsize=32)
def estimate_phi(C: tuple, p: float, kmax: int = 200, replicates: int = 200_000, seed: int = 0) -> PhiFit:
    """Fitted decay rate for a lattice, cached per argument set."""
    series = theta_series(PseudoTreeConfig(tuple(C), p), kmax, replicates, seed)
    return phi_fit(series)
