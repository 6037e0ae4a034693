"""Smoothness-based graph learning over trace-normalized Laplacians.

The problem

    minimize   sum_m y_m' L y_m + (lam / 2) ||L||_F^2
    subject to trace(L) = n, L 1 = 0, L_ij <= 0 (i != j), L = L'

is solved in edge-weight coordinates.  Writing L = L(w) with ``w`` the
upper-triangular edge weights in lexicographic pair order, symmetry and zero
row sums hold by construction, the trace constraint becomes sum(w) = n / 2
and the sign constraint becomes w >= 0.  What is left is a strongly convex
(lam > 0) quadratic over a scaled simplex, handled with projected gradient
descent at the exact Lipschitz step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph, validate_in_laplacian_set

logger = logging.getLogger(__name__)


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 2.0
    max_iters: int = 20000
    rel_tol: float = 1e-9
    kkt_tol: float = 1e-6

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class SolveResult:
    laplacian: np.ndarray
    weights: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    history: list = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.laplacian.shape[0]

    def record(self) -> dict:
        return {
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "kkt_residual": self.kkt_residual,
        }

    def graph(self) -> Graph:
        A = -self.laplacian.copy()
        np.fill_diagonal(A, 0.0)
        return Graph(np.maximum(A, 0.0))


def pair_index(n: int):
    """Row/column indices of the upper-triangular pairs, lexicographic order."""
    return np.triu_indices(n, k=1)


def laplacian_from_weights(w, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    iu, ju = pair_index(n)
    if w.shape != iu.shape:
        raise ValueError(f"expected {iu.size} edge weights for n={n}, got {w.size}")
    L = np.zeros((n, n))
    L[iu, ju] = -w
    L[ju, iu] = -w
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def weights_from_laplacian(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    iu, ju = pair_index(L.shape[0])
    return -L[iu, ju]


def pairwise_energy_vector(Y) -> np.ndarray:
    """Total squared signal difference across each node pair.

    ``z @ w`` equals ``sum_m y_m' L(w) y_m`` for every weight vector ``w``.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Y.shape[1]
    if n < 2:
        raise ValueError("need at least 2 nodes")
    iu, ju = pair_index(n)
    sq = (Y * Y).sum(axis=0)
    G = Y.T @ Y
    z = sq[iu] + sq[ju] - 2.0 * G[iu, ju]
    # the Gram expansion can go slightly negative for near-equal columns
    return np.maximum(z, 0.0)


def objective(L, Y, lam: float) -> float:
    L = np.asarray(L, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if L.shape != (Y.shape[1], Y.shape[1]):
        raise ValueError(f"Laplacian {L.shape} does not match {Y.shape[1]} signal columns")
    smooth = float(np.einsum("mi,ij,mj->", Y, L, Y))
    return smooth + 0.5 * lam * float(np.sum(L * L))


def simplex_projection(v, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum(w) = radius} (sort-based)."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


class _WeightProblem:
    """Objective and gradient of the edge-weight form of the learning problem."""

    def __init__(self, z, n, lam):
        self.z = z
        self.n = n
        self.lam = lam
        self.iu, self.ju = pair_index(n)

    def degrees(self, w):
        return np.bincount(self.iu, w, self.n) + np.bincount(self.ju, w, self.n)

    def value(self, w):
        d = self.degrees(w)
        return float(self.z @ w + 0.5 * self.lam * (d @ d + 2.0 * (w @ w)))

    def grad(self, w):
        d = self.degrees(w)
        return self.z + self.lam * (d[self.iu] + d[self.ju] + 2.0 * w)

    def hess_apply(self, v):
        d = self.degrees(v)
        return self.lam * (d[self.iu] + d[self.ju] + 2.0 * v)

    @property
    def lipschitz(self):
        # Hessian is lam * (S'S + 2I) with S the node-pair incidence; for the
        # complete pair set, S S' = (n - 2) I + 11' has top eigenvalue 2(n - 1)
        return 2.0 * self.lam * self.n


def estimate_lipschitz(hess_apply, dim: int, iters: int = 20, seed: int = 0) -> float:
    """Power-iteration estimate of the top eigenvalue of a PSD operator."""
    v = np.random.default_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        hv = hess_apply(v)
        est = float(np.linalg.norm(hv))
        if est == 0:
            return 0.0
        v = hv / est
    return est


def _solve_linear(z, n):
    # lam = 0: linear objective over a simplex, minimized on its cheapest face
    zmin = z.min()
    ties = z <= zmin + 1e-12 * max(1.0, abs(zmin))
    w = np.where(ties, (n / 2.0) / ties.sum(), 0.0)
    return w


def solve_gl_sigrep(Y, cfg: SolverConfig | None = None, w0=None, keep_history: bool = False) -> SolveResult:
    """Learn a trace-normalized Laplacian from signals ``Y`` (one per row).

    The same routine serves full and partial observation: it only sees the
    columns it is given.  Non-convergence is reported through
    ``SolveResult.converged`` rather than raised.
    """
    cfg = cfg or SolverConfig()
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] < 1:
        raise SolverError("need at least one signal")
    n = Y.shape[1]
    if n < 2:
        raise SolverError(f"need at least 2 nodes, got {n}")
    z = pairwise_energy_vector(Y)
    prob = _WeightProblem(z, n, cfg.lam)
    radius = n / 2.0

    history = []
    if cfg.lam == 0:
        w = _solve_linear(z, n)
        it = 0
        step = None
    else:
        step = 1.0 / prob.lipschitz
        w = simplex_projection(w0, radius) if w0 is not None else np.full(z.size, radius / z.size)
        f = prob.value(w)
        if keep_history:
            history.append(f)
        for it in range(1, cfg.max_iters + 1):
            g = prob.grad(w)
            w_new = simplex_projection(w - step * g, radius)
            gmap = (w - w_new) / step
            w = w_new
            f_new = prob.value(w)
            if keep_history:
                history.append(f_new)
            # objective decrease is second order near the optimum; also require a small step
            small_change = (
                f - f_new <= cfg.rel_tol * (1.0 + abs(f_new))
                and step * np.linalg.norm(gmap) <= cfg.rel_tol * (1.0 + np.linalg.norm(w))
            )
            f = f_new
            if small_change and np.linalg.norm(gmap) <= cfg.kkt_tol * (1.0 + np.linalg.norm(g)):
                break

    kkt = _kkt_residual(prob, w, radius, step)
    converged = kkt <= cfg.kkt_tol
    if not converged:
        logger.warning("solver stopped after %d iterations with KKT residual %.3g", it, kkt)
    L = laplacian_from_weights(w, n)
    rep = validate_in_laplacian_set(L, n, 1e-8)
    if not rep.ok:  # pragma: no cover - guarded by the projection
        raise SolverError(f"solution left the feasible set: {rep.failures()}")
    w.setflags(write=False)
    L.setflags(write=False)
    return SolveResult(
        laplacian=L,
        weights=w,
        objective=objective(L, Y, cfg.lam),
        iterations=it,
        converged=bool(converged),
        kkt_residual=float(kkt),
        history=history,
    )


def _kkt_residual(prob, w, radius, step):
    """Relative norm of the projected-gradient map at ``w``."""
    g = prob.grad(w)
    if step is None:
        # linear case: any step size certifies; use one scaled to the data
        step = radius / max(1.0, np.abs(g).max())
    gmap = (w - simplex_projection(w - step * g, radius)) / step
    return float(np.linalg.norm(gmap) / (1.0 + np.linalg.norm(g)))


def threshold_edges(L, tau: float = 0.1) -> Graph:
    """Binary graph keeping pairs whose weight exceeds ``tau`` times the largest weight."""
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau}")
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    A = -L.copy()
    np.fill_diagonal(A, 0.0)
    A = 0.5 * (A + A.T)
    wmax = A.max(initial=0.0)
    if wmax <= 0:
        logger.info("threshold_edges: no positive off-diagonal weight, returning empty graph")
        return Graph(np.zeros((n, n)))
    return Graph((A > tau * wmax).astype(float))
