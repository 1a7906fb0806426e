"""Multiscale detection of a filament in a uniform point cloud.

At every dyadic scale j the unit square is covered by thin parallelograms
R(j, k, l1, l2) with vertical sides.  A region is significant when it holds
more than N* points, and significant regions are chained by good
continuation (k, l1, l2) -> (k+1, l1 + l2 + u, l2 + v), |u|, |v| <= 4.  The
test rejects the uniform null when the longest such chain over all scales
exceeds a length threshold derived from the decay rate of the 81-neighbour
pseudo-tree.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .. import kernels
from .._fallback import scale_geometry
from ..pseudotree import estimate_phi
from ..rng import TAG_CURVE, TAG_SCENE, derive_key, uniforms

REACH = 4
HOLDER_GRID = 4096
HOLDER_MARGIN = 0.9
PHI_LATTICE = (4, 4)


def dyadic_J(N: int) -> int:
    if N < 2:
        raise ValueError("N must be >= 2")
    return int(math.ceil(math.log2(N)))


# ---------------------------------------------------------------------------
# Scenes


@dataclass(frozen=True)
class Sinusoid:
    """f(x) = 1/2 + A sin(2 pi w x + phase)."""

    A: float
    w: float
    phase: float

    def __call__(self, x):
        return 0.5 + self.A * np.sin(2 * np.pi * self.w * np.asarray(x) + self.phase)

    def derivative(self, x):
        return 2 * np.pi * self.w * self.A * np.cos(2 * np.pi * self.w * np.asarray(x) + self.phase)


def holder_ratio(df, alpha: float, beta: float, grid: int = HOLDER_GRID) -> float:
    """max |f'(x) - f'(y)| / (alpha beta |x - y|^(alpha - 1)) over grid pairs."""
    x = np.linspace(0.0, 1.0, grid)
    g = df(x)
    worst = 0.0
    block = 512
    for i in range(0, grid, block):
        xi, gi = x[i:i + block, None], g[i:i + block, None]
        dx = np.abs(xi - x[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(gi - g[None, :]) / (alpha * beta * dx ** (alpha - 1.0))
        r[dx == 0] = 0.0
        worst = max(worst, float(np.nanmax(r)))
    return worst


def random_curve(key: int, alpha: float, beta: float, S: float, max_tries: int = 100) -> Sinusoid:
    """Draw a sinusoid and shrink its amplitude until it passes the audit.

    The audit requires a Hoelder ratio below 0.9 on a 4096-point grid and
    a slope bound of 0.9 S.  Amplitudes stay below 0.4, so the graph lies in
    [0.1, 0.9].
    """
    for attempt in range(max_tries):
        u = uniforms(key, attempt, np.arange(3))
        w = 0.5 + 1.5 * u[0]
        A = 0.05 + 0.35 * u[1]
        phase = 2 * np.pi * u[2]
        slope = 2 * np.pi * w * A
        ratio = holder_ratio(Sinusoid(A, w, phase).derivative, alpha, beta)
        scale = min(1.0, HOLDER_MARGIN * S / slope, HOLDER_MARGIN / ratio if ratio > 0 else 1.0)
        f = Sinusoid(A * scale, w, phase)
        if (holder_ratio(f.derivative, alpha, beta) <= HOLDER_MARGIN
                and np.max(np.abs(f.derivative(np.linspace(0, 1, HOLDER_GRID)))) <= S * HOLDER_MARGIN):
            return f
    raise RuntimeError("curve generation failed the Hoelder audit")


@dataclass(frozen=True)
class Scene:
    points: np.ndarray  # (N, 2)
    on_curve: np.ndarray  # bool (N,)
    curve: Sinusoid | None
    eps: float
    seed: int

    def to_csv(self) -> str:
        lines = ["x,y"] + [f"{x!r},{y!r}" for x, y in self.points]
        return "\n".join(lines) + "\n"


def sample_scene(N: int, alpha: float, beta: float, S: float, eps: float, seed: int,
                 hypothesis: str = "H1") -> Scene:
    """N iid points: uniform on the square, or on graph(f) with probability eps.

    On-curve points have x uniform and y = f(x).  The choice, x and y draws
    are separate counter streams, so eps = 0 reproduces the null scene of
    the same seed exactly.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if hypothesis not in ("H0", "H1"):
        raise ValueError("hypothesis must be 'H0' or 'H1'")
    key = derive_key(seed, TAG_SCENE)
    idx = np.arange(N)
    x = uniforms(key, 1, idx)
    y = uniforms(key, 2, idx)
    if hypothesis == "H0":
        return Scene(np.column_stack([x, y]), np.zeros(N, dtype=bool), None, 0.0, seed)
    f = random_curve(derive_key(seed, TAG_CURVE), alpha, beta, S)
    on = uniforms(key, 0, idx) < eps
    y = np.where(on, f(x), y)
    return Scene(np.column_stack([x, y]), on, f, eps, seed)


def read_points_csv(text: str) -> np.ndarray:
    rows = [r for r in text.strip().splitlines() if r.strip()]
    if rows and rows[0].replace(" ", "").lower() == "x,y":
        rows = rows[1:]
    pts = np.array([[float(v) for v in r.split(",")] for r in rows], dtype=float).reshape(-1, 2)
    if pts.size and (pts.min() < 0 or pts.max() > 1):
        raise ValueError("points must lie in [0, 1]^2")
    return pts


# ---------------------------------------------------------------------------
# Regions and significance graphs


@dataclass(frozen=True)
class Region:
    j: int
    k: int
    l1: int
    l2: int
    J: int

    @property
    def omega(self) -> float:
        return 2.0 ** (-self.j)

    @property
    def t(self) -> float:
        return 2.0 ** (-(self.J - self.j) + 1)

    @property
    def center(self) -> tuple:
        return ((self.k + 0.5) * self.omega, self.l1 * self.t / 4.0)

    @property
    def slope(self) -> float:
        return self.l2 * self.t / (4.0 * self.omega)

    def contains(self, x: float, y: float) -> bool:
        cx = (self.k + 0.5) * self.omega
        cy = self.l1 * (self.t / 4.0)
        s = self.l2 * (self.t / (4.0 * self.omega))
        return abs(x - cx) <= self.omega / 2.0 and abs((y - cy) - s * (x - cx)) <= self.t / 2.0


@dataclass
class SignificanceGraph:
    """Counts and labels of every region at one scale; edges are implicit."""

    j: int
    J: int
    S: int
    N_star: int
    counts: np.ndarray = field(repr=False)  # (2^j, 2^(J-j+1), 2 l2h + 1)

    @property
    def labels(self) -> np.ndarray:
        return (self.counts > self.N_star).astype(np.uint8)

    @property
    def l2_half(self) -> int:
        return (self.counts.shape[2] - 1) // 2

    def region(self, k: int, l1: int, l2: int) -> Region:
        return Region(self.j, k, l1, l2, self.J)

    def count(self, k: int, l1: int, l2: int) -> int:
        return int(self.counts[k, l1, l2 + self.l2_half])

    def in_range(self, k: int, l1: int, l2: int) -> bool:
        nk, nl1, _ = self.counts.shape
        return 0 <= k < nk and 0 <= l1 < nl1 and abs(l2) <= self.l2_half

    def successors(self, k: int, l1: int, l2: int) -> list[tuple]:
        """Good-continuation targets; those outside the index ranges are dropped."""
        out = []
        for u, v in itertools.product(range(-REACH, REACH + 1), repeat=2):
            tgt = (k + 1, l1 + l2 + u, l2 + v)
            if self.in_range(*tgt):
                out.append(tgt)
        return out


def build_significance_graph(points, j: int, J: int, S: int, N_star: int,
                             max_scale: int | None = None) -> SignificanceGraph:
    if j < 0 or j > J or (max_scale is not None and j > max_scale):
        raise ValueError(f"scale {j} out of range")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    counts = kernels.region_counts(pts[:, 0], pts[:, 1], j, J, S)
    return SignificanceGraph(j, J, S, N_star, counts)


def brute_force_counts(points, j: int, J: int, S: int) -> np.ndarray:
    """Per-point, per-region membership scan (oracle for the binned counter)."""
    _, _, _, _, nk, nl1, l2h = scale_geometry(j, J, S)
    out = np.zeros((nk, nl1, 2 * l2h + 1), dtype=np.int64)
    for k, l1, l2 in itertools.product(range(nk), range(nl1), range(-l2h, l2h + 1)):
        reg = Region(j, k, l1, l2, J)
        out[k, l1, l2 + l2h] = sum(reg.contains(x, y) for x, y in points)
    return out


def longest_significant_path(graph: SignificanceGraph) -> int:
    return kernels.longest_path_labels(graph.labels, REACH)


def longest_path_dfs(graph: SignificanceGraph) -> int:
    """Exhaustive search over significant paths (oracle for small graphs)."""
    lab = graph.labels
    h = graph.l2_half

    @functools.lru_cache(maxsize=None)
    def walk(k, l1, l2):
        best = 0
        for tgt in graph.successors(k, l1, l2):
            if lab[tgt[0], tgt[1], tgt[2] + h]:
                best = max(best, walk(*tgt))
        return 1 + best

    best = 0
    for k, l1, b in zip(*np.nonzero(lab)):
        best = max(best, walk(int(k), int(l1), int(b) - h))
    return best


# ---------------------------------------------------------------------------
# Thresholds


def lattice_phi(p0: float, seed: int = 0, kmax: int = 40, replicates: int = 20000) -> float:
    """Decay rate of the 81-neighbour pseudo-tree at p0."""
    return estimate_phi(PHI_LATTICE, p0, kmax, replicates, seed).phi_hat


@dataclass(frozen=True)
class MsraThresholds:
    N: int
    J: int
    N_star: int
    p0: float
    phi: float
    L_star: float
    p_star: float
    lambda_star: float
    T_star: float
    delta3: float
    c_J: int
    alpha: float | None
    beta: float
    S: int
    phi_seed: int

    def check(self, tol: float = 1e-9) -> None:
        """Re-derive every threshold from its definition."""
        J = self.J
        assert abs(self.p0 - stats.poisson.sf(self.N_star, 2.0)) <= tol
        assert self.p0 < 1.0 / 81.0
        assert abs(self.L_star - (1 + self.delta3) * 2 * J * math.log(2) / self.phi) <= tol * self.L_star
        ps = math.exp(-self.phi * self.c_J * (1 - self.delta3) / (2 * J * (1 + self.delta3)))
        assert abs(self.p_star - ps) <= tol
        assert stats.poisson.sf(self.N_star, self.lambda_star) > self.p_star
        ts = 2 * self.lambda_star * self.beta ** (1 / (1 + (self.alpha or 1.0))) * math.sqrt(1 + self.S ** 2)
        assert abs(self.T_star - ts) <= tol * ts
        assert self.c_J == scale_cap(J, self.alpha, self.beta)

    def eps_for_power(self, factor: float = 2.0) -> float:
        """factor * T* * N^(-alpha / (1 + alpha))."""
        a = self.alpha if self.alpha is not None else 1.0
        return factor * self.T_star * self.N ** (-a / (1 + a))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def scale_cap(J: int, alpha: float | None, beta: float) -> int:
    """c_J = ceil((J + log2 beta) / (alpha + 1)), or floor(0.5001 J) when alpha is unknown."""
    if alpha is None:
        return int(math.floor(0.5001 * J))
    return int(math.ceil((J + math.log2(beta)) / (alpha + 1)))


def compute_thresholds(N: int, alpha: float | None, beta: float, S: int, delta3: float = 0.1,
                       N_star: int = 6, phi: float | None = None, phi_seed: int = 0,
                       lambda_cap: float = 1e4, grid_ratio: float = 1.0001) -> MsraThresholds:
    if alpha is not None and not 1.0 < alpha <= 2.0:
        raise ValueError("alpha must lie in (1, 2]")
    if beta <= 0 or delta3 <= 0:
        raise ValueError("beta and delta3 must be positive")
    if S < 1:
        raise ValueError("S must be >= 1")
    J = dyadic_J(N)
    p0 = float(stats.poisson.sf(N_star, 2.0))
    if not p0 < 1.0 / 81.0:
        raise ValueError(f"N* = {N_star} gives p0 = {p0:.4g} >= 1/81")
    if phi is None:
        phi = lattice_phi(p0, phi_seed)
    if phi <= 0:
        raise ValueError("phi(p0) must be positive")
    c_J = scale_cap(J, alpha, beta)
    L_star = (1 + delta3) * 2 * J * math.log(2) / phi
    p_star = math.exp(-phi * c_J * (1 - delta3) / (2 * J * (1 + delta3)))
    grid = 1e-3 * grid_ratio ** np.arange(int(math.log(lambda_cap / 1e-3) / math.log(grid_ratio)) + 1)
    ok = np.nonzero(stats.poisson.sf(N_star, grid) > p_star)[0]
    if ok.size == 0:
        raise ValueError("no lambda below the grid cap satisfies the tail condition")
    lam = float(grid[ok[0]])
    a = alpha if alpha is not None else 1.0
    T_star = 2 * lam * beta ** (1 / (1 + a)) * math.sqrt(1 + S ** 2)
    return MsraThresholds(N, J, N_star, p0, phi, L_star, p_star, lam, T_star, delta3, c_J,
                          alpha, beta, S, phi_seed)


# ---------------------------------------------------------------------------
# Test


@dataclass(frozen=True)
class MsraResult:
    decision: bool
    L_max: int
    per_scale: tuple
    scale: int
    threshold: float

    def to_dict(self) -> dict:
        return {"decision": "reject" if self.decision else "accept", "statistic": self.L_max,
                "threshold": self.threshold, "scale": self.scale,
                "per_scale": list(self.per_scale)}


def msra_test(points, thresholds: MsraThresholds, J: int | None = None, S: int | None = None) -> MsraResult:
    """Longest significant path over scales 0..c_J against L*."""
    J = thresholds.J if J is None else J
    S = thresholds.S if S is None else S
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    per_scale = []
    for j in range(0, min(thresholds.c_J, J) + 1):
        g = build_significance_graph(pts, j, J, S, thresholds.N_star)
        per_scale.append(longest_significant_path(g))
    L_max = max(per_scale)
    scale = int(np.argmax(per_scale))
    return MsraResult(L_max > thresholds.L_star, L_max, tuple(per_scale), scale, thresholds.L_star)
