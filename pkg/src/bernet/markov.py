"""Exact across probabilities for thin nets.

The state after column k is the set S of rows reachable by a significant
run that starts in column 1.  Given S, the next state is an independent
Bernoulli(p) subset of the C-dilation of S, so one step factorizes into

1. aggregating the distribution by dilation ``D = dil(S)``, then
2. a per-row butterfly that thins each ``D`` to its random subsets.

Each step costs O(m 2^m) instead of the O(4^m) of an explicit
state-by-pattern loop.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

MAX_ROWS = 12
BRUTEFORCE_MAX_NODES = 22


def _check(m: int, C: int, p: float) -> None:
    if not 1 <= m <= MAX_ROWS:
        raise ValueError(f"m must be in [1, {MAX_ROWS}] for exact computation, got {m}")
    if C < 1:
        raise ValueError("C must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")


def dilation_map(m: int, C: int) -> np.ndarray:
    """``dil[S]`` = rows within distance C of some row of S (as bitmasks)."""
    states = np.arange(1 << m, dtype=np.int64)
    full = (1 << m) - 1
    out = states.copy()
    for s in range(1, C + 1):
        out |= (states << s) & full
        out |= states >> s
    return out


def thin(g: np.ndarray, m: int, p: float) -> np.ndarray:
    """Keep each member of every set independently with probability p.

    ``out[T] = sum_{D >= T} g[D] p^|T| (1-p)^|D - T|``.
    """
    q = 1.0 - p
    out = g.astype(np.float64, copy=True)
    for b in range(m):
        v = out.reshape(-1, 2, 1 << b)
        with_b = v[:, 1, :].copy()
        v[:, 0, :] += q * with_b
        v[:, 1, :] = p * with_b
    return out


@dataclass
class ColumnStateModel:
    """Distribution over reachable-row subsets, advanced one column at a time."""

    m: int
    C: int
    p: float
    dist: np.ndarray = None
    k: int = 0

    def __post_init__(self):
        _check(self.m, self.C, self.p)
        self._dil = dilation_map(self.m, self.C)
        if self.dist is None:
            start = np.zeros(1 << self.m)
            start[-1] = 1.0
            self.dist = thin(start, self.m, self.p)
            self.k = 1

    def step(self) -> None:
        g = np.bincount(self._dil, weights=self.dist, minlength=1 << self.m)
        self.dist = thin(g, self.m, self.p)
        self.k += 1

    @property
    def across(self) -> float:
        """P_k: probability some row is still reachable after k columns."""
        return float(self.dist[1:].sum())


def across_prob_exact(m: int, C: int, p: float, k: int) -> float:
    """Probability of an across in an m-by-k net (exact)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    model = ColumnStateModel(m, C, p)
    for _ in range(k - 1):
        model.step()
    return model.across


def across_probs_exact(m: int, C: int, p: float, kmax: int) -> np.ndarray:
    """``P_1 .. P_kmax`` in one pass."""
    model = ColumnStateModel(m, C, p)
    out = [model.across]
    for _ in range(kmax - 1):
        model.step()
        out.append(model.across)
    return np.array(out)


@dataclass(frozen=True)
class RhoEstimate:
    m: int
    C: int
    p: float
    rho: float
    k_converged: int
    tol: float
    log_across: float  # log P_k at k_converged


def rho_exact(m: int, C: int, p: float, tol: float = 1e-7, max_steps: int = 200_000) -> RhoEstimate:
    """Limit of P_k / P_{k-1} by iterating the conditioned state distribution.

    The distribution is renormalized over nonempty states after every step,
    so each step's surviving mass is exactly the ratio P_k / P_{k-1} and no
    underflow occurs however small P_k becomes.
    """
    _check(m, C, p)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if p == 0.0:
        raise ValueError("rho is undefined at p = 0 (P_k = 0 for all k)")
    dil = dilation_map(m, C)
    size = 1 << m
    start = np.zeros(size)
    start[-1] = 1.0
    dist = thin(start, m, p)
    log_mass = math.log(1.0 - dist[0])
    dist[0] = 0.0
    dist /= dist.sum()
    prev = None
    for k in range(2, max_steps + 1):
        g = np.bincount(dil, weights=dist, minlength=size)
        dist = thin(g, m, p)
        alive = dist[1:].sum()
        rho = alive / (alive + dist[0])
        log_mass += math.log(rho)
        dist[0] = 0.0
        dist /= alive
        if prev is not None and abs(rho - prev) < tol:
            return RhoEstimate(m, C, p, float(rho), k, tol, log_mass)
        prev = rho
    raise RuntimeError(f"rho did not converge to tol={tol} within {max_steps} steps")


def stab_bounds(m: int, n: int, C: int, p: float, k: int) -> tuple[float, float]:
    """Lower and upper bounds on P(|L0(m, n)| < k) from the across probability P_k."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    Pk = across_prob_exact(m, C, p, k)
    q = 1.0 - p
    e = n - k + 1
    return (1.0 - Pk) ** e, (1.0 - q ** m * Pk) ** e


def longest_run_dist_bruteforce(m: int, n: int, C: int, p: float) -> np.ndarray:
    """Exact pmf of |L0(m, n)| over 0..n by enumerating all 2^(mn) nets.

    Bit ``c*m + r`` of the configuration index is the state of row r in
    column c.  The run-length recursion is evaluated for all configurations
    of a chunk at once.
    """
    if m * n > BRUTEFORCE_MAX_NODES:
        raise ValueError(f"m*n must be <= {BRUTEFORCE_MAX_NODES}")
    total = 1 << (m * n)
    pmf = np.zeros(n + 1)
    q = 1.0 - p
    chunk = 1 << 18
    for start in range(0, total, chunk):
        cfg = np.arange(start, min(total, start + chunk), dtype=np.int64)
        ones = np.zeros(cfg.size, dtype=np.int64)
        best = np.zeros(cfg.size, dtype=np.int64)
        Y = np.zeros((cfg.size, m), dtype=np.int64)
        for c in range(n):
            st = (cfg[:, None] >> (c * m + np.arange(m))[None, :]) & 1
            ones += st.sum(axis=1)
            if c == 0:
                Y = st.copy()
            else:
                nb = Y.copy()
                for s in range(1, C + 1):
                    nb[:, s:] = np.maximum(nb[:, s:], Y[:, :-s])
                    nb[:, :-s] = np.maximum(nb[:, :-s], Y[:, s:])
                Y = np.where(st == 1, nb + 1, 0)
            np.maximum(best, Y.max(axis=1), out=best)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(ones > 0, p ** ones, 1.0) * np.where(m * n - ones > 0, q ** (m * n - ones), 1.0)
        pmf += np.bincount(best, weights=w, minlength=n + 1)
    return pmf


TABLE1_ROWS = (4, 8, 10)
TABLE1_PS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


def table1(ms=TABLE1_ROWS, ps=TABLE1_PS, C: int = 1, tol: float = 1e-7, threads=None) -> list[RhoEstimate]:
    from .parallel import map_items
    cells = [(m, p) for m in ms for p in ps]
    return map_items(lambda mp: rho_exact(mp[0], C, mp[1], tol), cells, threads)


def rho_table_csv(rows: list[RhoEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "p", "rho", "k_converged"])
    for r in rows:
        w.writerow([r.m, repr(r.p), f"{r.rho:.10f}", r.k_converged])
    return buf.getvalue()
