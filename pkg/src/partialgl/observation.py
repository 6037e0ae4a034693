"""Partial node observation and the surrogate Laplacians that move between
the full and the observed problem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import validate_in_laplacian_set


class DegenerateSurrogateError(ValueError):
    """Observed block has no positive effective degree; the surrogate is undefined."""


class InfeasibleLaplacianError(ValueError):
    pass


@dataclass(frozen=True)
class ObservationMask:
    """Ordered subset of observed nodes; row ``k`` of the selection matrix picks ``observed[k]``."""

    total_nodes: int
    observed: tuple

    def __post_init__(self):
        obs = tuple(int(i) for i in self.observed)
        N = int(self.total_nodes)
        if not 1 <= len(obs) <= N:
            raise ValueError(f"need between 1 and {N} observed nodes, got {len(obs)}")
        if len(set(obs)) != len(obs):
            raise ValueError("observed indices must be distinct")
        if min(obs) < 0 or max(obs) >= N:
            raise ValueError(f"observed indices must lie in [0, {N})")
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "total_nodes", N)

    @property
    def n(self) -> int:
        return len(self.observed)

    @property
    def index(self) -> np.ndarray:
        return np.asarray(self.observed, dtype=int)

    @property
    def hidden(self) -> np.ndarray:
        keep = np.ones(self.total_nodes, dtype=bool)
        keep[self.index] = False
        return np.flatnonzero(keep)

    def selection_matrix(self) -> np.ndarray:
        E = np.zeros((self.n, self.total_nodes))
        E[np.arange(self.n), self.index] = 1.0
        return E

    def to_csv(self) -> str:
        return " ".join(str(i) for i in self.observed)

    @classmethod
    def from_csv(cls, total_nodes: int, text: str) -> "ObservationMask":
        return cls(total_nodes, tuple(int(t) for t in text.replace(",", " ").split()))


def sample_observation(N: int, n: int, rng) -> ObservationMask:
    """Uniform random ``n``-subset of ``range(N)`` in random order."""
    if not 1 <= n <= N:
        raise ValueError(f"n must lie in [1, {N}], got {n}")
    return ObservationMask(N, tuple(rng.permutation(N)[:n]))


def _check_dim(mask, size, what):
    if size != mask.total_nodes:
        raise ValueError(f"{what} has {size} nodes, mask expects {mask.total_nodes}")


def restrict_signals(mask: ObservationMask, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    _check_dim(mask, Y.shape[-1], "signal matrix")
    return Y[..., mask.index]


def restrict_laplacian(mask: ObservationMask, L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    _check_dim(mask, L.shape[0], "Laplacian")
    idx = mask.index
    return L[np.ix_(idx, idx)]


@dataclass(frozen=True)
class BlockDecomposition:
    L_oo: np.ndarray
    L_oh_rowsums: np.ndarray
    trace_oo: float
    coupling: float

    @property
    def n(self) -> int:
        return self.L_oo.shape[0]

    @property
    def epsilon(self) -> float:
        """Largest total weight from one observed node into the hidden set."""
        return float(np.max(-self.L_oh_rowsums))

    @property
    def c(self) -> float:
        """Effective observed degree per observed node."""
        return (self.trace_oo + self.coupling) / self.n


def block_decompose(mask: ObservationMask, L) -> BlockDecomposition:
    L_oo = restrict_laplacian(mask, L)
    # rows of L sum to zero, so L_oh 1 = -L_oo 1
    rowsums = -L_oo.sum(axis=1)
    return BlockDecomposition(
        L_oo=L_oo,
        L_oh_rowsums=rowsums,
        trace_oo=float(np.trace(L_oo)),
        coupling=float(rowsums.sum()),
    )


def _require_feasible(L, size, tol, what):
    rep = validate_in_laplacian_set(L, size, tol)
    if not rep.ok:
        raise InfeasibleLaplacianError(f"{what} is not a trace-normalized Laplacian: fails {rep.failures()}")


def lift_surrogate_full(mask: ObservationMask, L_p, tol: float = 1e-8) -> np.ndarray:
    """Zero-pad an observed-node Laplacian to all nodes, scaled by N/n."""
    L_p = np.asarray(L_p, dtype=float)
    _require_feasible(L_p, mask.n, tol, "partial solution")
    N = mask.total_nodes
    out = np.zeros((N, N))
    idx = mask.index
    out[np.ix_(idx, idx)] = (N / mask.n) * L_p
    return out


def project_surrogate_partial(mask: ObservationMask, L_star, tol: float = 1e-8) -> np.ndarray:
    """Observed block of a full solution, with hidden-node coupling folded onto
    the diagonal and rescaled to trace n."""
    L_star = np.asarray(L_star, dtype=float)
    _require_feasible(L_star, mask.total_nodes, tol, "full solution")
    blocks = block_decompose(mask, L_star)
    denom = blocks.trace_oo + blocks.coupling
    if not denom > 0:
        raise DegenerateSurrogateError(
            f"observed block has nonpositive effective degree (trace + coupling = {denom:.3g})"
        )
    return (mask.n / denom) * (blocks.L_oo + np.diag(blocks.L_oh_rowsums))
