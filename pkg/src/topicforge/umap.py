"""Manifold dimensionality reduction: exact kNN graph under cosine distance,
fuzzy graph construction, and stochastic cross-entropy layout optimization."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .embedding import pairwise_cosine_distances

SMOOTH_SEARCH_ITERS = 64
MIN_SIGMA_SCALE = 1e-3
GRAD_CLIP = 4.0


class UmapError(ValueError):
    pass


@dataclass(frozen=True)
class KnnGraph:
    k: int
    neighbors: np.ndarray  # (n, k) int indices, no self-loops
    distances: np.ndarray  # (n, k) nondecreasing per row

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric sparse membership-strength graph, diagonal zero."""

    edges: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class LayoutConfig:
    out_dim: int = 5
    epochs: int = 200
    min_dist: float = 0.1
    spread: float = 1.0
    a: float | None = None  # fitted from (min_dist, spread) when None
    b: float | None = None
    negative_sample_rate: int = 5
    seed: int = 0
    learning_rate: float = 1.0

    def __post_init__(self):
        if self.out_dim < 1 or self.epochs < 1:
            raise UmapError("out_dim and epochs must be >= 1")
        if self.min_dist <= 0 or self.spread <= 0:
            raise UmapError("min_dist and spread must be > 0")
        if (self.a is None) != (self.b is None):
            raise UmapError("a and b must be given together")
        if self.a is not None and (self.a <= 0 or self.b <= 0):
            raise UmapError("curve parameters must be positive")


def knn_graph(m: np.ndarray, k: int) -> KnnGraph:
    """Exact k nearest neighbors under cosine distance (brute force).
    Ties broken by lowest index."""
    m = np.asarray(m)
    n = m.shape[0]
    if k >= n:
        raise UmapError(f"k={k} must be < n={n}")
    dist = pairwise_cosine_distances(m)
    np.fill_diagonal(dist, np.inf)
    idx = np.arange(n)[None, :].repeat(n, axis=0)
    order = np.lexsort((idx, dist), axis=1)[:, :k]
    neighbors = order
    distances = np.take_along_axis(dist, order, axis=1)
    return KnnGraph(k, neighbors, distances)


def smooth_knn(g: KnnGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (rho, sigma) calibration. rho_i is the distance to the
    nearest neighbor; sigma_i solves
        sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)
    by 64-iteration binary search, clamped below at 1e-3 times the mean
    neighbor distance."""
    rho = g.distances[:, 0].copy()
    target = np.log2(g.k)
    mean_dist = float(g.distances.mean()) if g.distances.size else 0.0
    floor = MIN_SIGMA_SCALE * mean_dist
    sigma = np.empty(g.n)
    for i in range(g.n):
        gaps = np.maximum(0.0, g.distances[i] - rho[i])
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(SMOOTH_SEARCH_ITERS):
            psum = np.exp(-gaps / mid).sum() if mid > 0 else float(np.sum(gaps == 0))
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = max(mid, floor)
    return rho, sigma


def membership_strengths(g: KnnGraph, rho: np.ndarray, sigma: np.ndarray) -> sp.csr_matrix:
    """Directed membership matrix P with P[i, j-th neighbor of i] =
    exp(-max(0, d - rho_i) / sigma_i)."""
    vals = np.exp(-np.maximum(0.0, g.distances - rho[:, None]) / sigma[:, None])
    rows = np.repeat(np.arange(g.n), g.k)
    p = sp.csr_matrix((vals.ravel(), (rows, g.neighbors.ravel())), shape=(g.n, g.n))
    p.setdiag(0.0)
    p.eliminate_zeros()
    return p


def fuzzy_union(directed: sp.spmatrix) -> FuzzyGraph:
    """Symmetrize directed memberships with the probabilistic t-conorm
    a + b - a*b."""
    a = sp.csr_matrix(directed)
    t = a.T.tocsr()
    sym = (a + t - a.multiply(t)).tocsr()
    sym.setdiag(0.0)
    sym.eliminate_zeros()
    return FuzzyGraph(sym)


def _curve(x: np.ndarray, a: float, b: float) -> np.ndarray:
    return 1.0 / (1.0 + a * x ** (2.0 * b))


def fit_curve_params(min_dist: float, spread: float, max_iter: int = 1000) -> tuple[float, float]:
    """Least-squares fit of phi(x) = 1/(1 + a*x^(2b)) to the piecewise
    target (1 for x <= min_dist, exp(-(x - min_dist)/spread) beyond),
    sampled on 300 points of [0, 3*spread]. Levenberg-Marquardt on (a, b)."""
    if not 0 < min_dist < spread * 10:
        raise UmapError("require 0 < min_dist < 10*spread")
    x = np.linspace(0.0, 3.0 * spread, 300)
    y = np.where(x <= min_dist, 1.0, np.exp(-(x - min_dist) / spread))

    a, b = 1.0, 1.0
    lam = 1e-3
    cost = float(np.sum((_curve(x, a, b) - y) ** 2))
    for _ in range(max_iter):
        xb = x ** (2.0 * b)
        denom = (1.0 + a * xb) ** 2
        r = _curve(x, a, b) - y
        with np.errstate(divide="ignore", invalid="ignore"):
            logx = np.where(x > 0, np.log(x), 0.0)
        da = -xb / denom
        db = -2.0 * a * xb * logx / denom
        jac = np.column_stack([da, db])
        g = jac.T @ r
        h = jac.T @ jac
        step = np.linalg.solve(h + lam * np.diag(np.diag(h)) + 1e-12 * np.eye(2), -g)
        na, nb = max(a + step[0], 1e-8), max(b + step[1], 1e-8)
        new_cost = float(np.sum((_curve(x, na, nb) - y) ** 2))
        if new_cost < cost:
            converged = abs(cost - new_cost) < 1e-14
            a, b, cost = na, nb, new_cost
            lam = max(lam / 3.0, 1e-12)
            if converged:
                break
        else:
            lam *= 3.0
            if lam > 1e12:
                break
    if not (np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0):
        raise UmapError("curve fit did not converge")
    return float(a), float(b)


def optimize_layout(g: FuzzyGraph, cfg: LayoutConfig) -> np.ndarray:
    """Stochastic gradient descent on the fuzzy cross-entropy: attractive
    updates on edges sampled proportionally to strength, repulsive updates
    on uniform negative samples. Per-dimension gradients are clipped to
    [-4, 4] and the learning rate anneals linearly to zero. Deterministic
    for a fixed seed (single worker)."""
    if cfg.a is None:
        a, b = fit_curve_params(cfg.min_dist, cfg.spread)
    else:
        a, b = cfg.a, cfg.b
    rng = np.random.default_rng(cfg.seed)
    n = g.n
    emb = rng.uniform(-10.0, 10.0, size=(n, cfg.out_dim))

    coo = g.edges.tocoo()
    heads, tails, w = coo.row, coo.col, coo.data
    if len(w) == 0:
        return emb
    eps = w.max() / w  # epochs between samples of each directed edge
    next_due = np.zeros(len(w))

    for epoch in range(cfg.epochs):
        alpha = cfg.learning_rate * (1.0 - epoch / cfg.epochs)
        due = next_due <= epoch
        if due.any():
            h, t = heads[due], tails[due]
            diff = emb[h] - emb[t]
            d2 = np.einsum("ij,ij->i", diff, diff)
            # attraction along the edge
            with np.errstate(divide="ignore", invalid="ignore"):
                coeff = np.where(
                    d2 > 0.0,
                    (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2 ** b),
                    0.0,
                )
            step = np.clip(coeff[:, None] * diff, -GRAD_CLIP, GRAD_CLIP) * alpha
            # never step past the midpoint: an isolated attracted pair must
            # not overshoot and end up farther apart
            dist = np.sqrt(d2)
            norm = np.linalg.norm(step, axis=1)
            scale = np.where(norm > 0.0, np.minimum(1.0, 0.5 * dist / np.maximum(norm, 1e-12)), 0.0)
            np.add.at(emb, h, step * scale[:, None])

            # repulsion from negative samples
            for _ in range(cfg.negative_sample_rate):
                neg = rng.integers(0, n, size=len(h))
                diff_n = emb[h] - emb[neg]
                d2n = np.einsum("ij,ij->i", diff_n, diff_n)
                coeff_n = (2.0 * b) / ((0.001 + d2n) * (1.0 + a * d2n ** b))
                step_n = np.clip(coeff_n[:, None] * diff_n, -GRAD_CLIP, GRAD_CLIP) * alpha
                step_n[(neg == h) | (neg == t)] = 0.0
                np.add.at(emb, h, step_n)

            next_due[due] += eps[due]

    if not np.isfinite(emb).all():
        raise UmapError("layout diverged to non-finite coordinates")
    return emb


def reduce_embeddings(m: np.ndarray, k: int = 20, cfg: LayoutConfig | None = None) -> np.ndarray:
    """Full reduction pipeline: cosine kNN -> smooth calibration -> fuzzy
    union -> SGD layout."""
    cfg = cfg or LayoutConfig()
    g = knn_graph(m, k)
    rho, sigma = smooth_knn(g)
    directed = membership_strengths(g, rho, sigma)
    fuzzy = fuzzy_union(directed)
    return optimize_layout(fuzzy, cfg)
