"""Graphs, Laplacians and spectra.

Dense representation throughout: every graph in this package is small enough
(a few hundred nodes at most) that a full symmetric eigendecomposition is the
dominant cost anyway.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_CONNECT_RETRIES = 100


class GraphError(ValueError):
    """Invalid graph data or a generator that could not produce a valid graph."""


class EdgeListParseError(GraphError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph stored as a dense adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        A = _frozen(self.adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise GraphError("adjacency has non-finite entries")
        if np.any(A < 0):
            raise GraphError("adjacency has negative entries")
        if np.any(np.diag(A) != 0):
            raise GraphError("adjacency has self-loops")
        if not np.array_equal(A, A.T):
            raise GraphError("adjacency is not symmetric")
        object.__setattr__(self, "adjacency", A)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, 1)))

    def edges(self):
        """Sorted list of ``(i, j, weight)`` with ``i < j``."""
        iu, ju = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(i), int(j), float(self.adjacency[i, j])) for i, j in zip(iu, ju)]

    def edge_set(self):
        return {(i, j) for i, j, _ in self.edges()}

    def is_connected(self) -> bool:
        return is_connected(self.adjacency)

    def subgraph(self, nodes) -> "Graph":
        nodes = np.asarray(nodes, dtype=int)
        return Graph(self.adjacency[np.ix_(nodes, nodes)])

    def binarized(self) -> "Graph":
        return Graph((self.adjacency > 0).astype(float))


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with eigenvectors in matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    laplacian: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def leading(self, K: int) -> np.ndarray:
        """The N x K frame of the K lowest-frequency eigenvectors."""
        if not 1 <= K <= self.n:
            raise ValueError(f"K must lie in [1, {self.n}], got {K}")
        return self.eigenvectors[:, :K]

    @property
    def sigma_max(self) -> float:
        return float(self.eigenvalues[-1])

    def sigma_min_plus(self, zero_tol: float = 1e-10) -> float:
        """Smallest nonzero eigenvalue (singular value, L being PSD)."""
        nz = self.eigenvalues[self.eigenvalues > zero_tol]
        if nz.size == 0:
            raise ValueError("Laplacian has no nonzero eigenvalue")
        return float(nz[0])


@dataclass(frozen=True)
class MembershipReport:
    """Per-constraint outcome of checking a matrix against the trace-normalized Laplacian set."""

    size: int
    tol: float
    trace_violation: float
    rowsum_violation: float
    offdiag_violation: float
    symmetry_violation: float

    @property
    def trace_ok(self) -> bool:
        return self.trace_violation <= self.tol * max(1.0, self.size)

    @property
    def rowsum_ok(self) -> bool:
        return self.rowsum_violation <= self.tol * max(1.0, self.size)

    @property
    def offdiag_ok(self) -> bool:
        return self.offdiag_violation <= self.tol

    @property
    def symmetry_ok(self) -> bool:
        return self.symmetry_violation <= self.tol

    @property
    def ok(self) -> bool:
        return self.trace_ok and self.rowsum_ok and self.offdiag_ok and self.symmetry_ok

    def failures(self):
        names = ("trace", "rowsum", "offdiag", "symmetry")
        return [nm for nm in names if not getattr(self, f"{nm}_ok")]


def build_laplacian(g: Graph) -> np.ndarray:
    A = g.adjacency
    return np.diag(A.sum(axis=1)) - A


def laplacian_from_adjacency(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return np.diag(A.sum(axis=1)) - A


def adjacency_from_laplacian(L) -> np.ndarray:
    A = -np.asarray(L, dtype=float).copy()
    np.fill_diagonal(A, 0.0)
    return A


def eigendecompose(L) -> Spectrum:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {L.shape}")
    if not np.allclose(L, L.T, rtol=0, atol=1e-12 * max(1.0, np.abs(L).max(initial=0.0))):
        raise ValueError("eigendecompose requires a symmetric matrix")
    # eigh returns ascending eigenvalues; LinAlgError propagates as unrecoverable
    lam, V = np.linalg.eigh(0.5 * (L + L.T))
    lam = _frozen(lam)
    V = _frozen(V)
    return Spectrum(lam, V, _frozen(L))


def validate_in_laplacian_set(L, size: int, tol: float = 1e-8) -> MembershipReport:
    """Measure how far ``L`` is from {trace = size, L1 = 0, off-diagonal <= 0, symmetric}.

    Trace and row-sum violations are compared against ``tol * size``; the
    off-diagonal and symmetry violations against ``tol`` directly.
    """
    L = np.asarray(L, dtype=float)
    if L.shape != (size, size):
        raise ValueError(f"expected a {size}x{size} matrix, got shape {L.shape}")
    off = L - np.diag(np.diag(L))
    return MembershipReport(
        size=size,
        tol=tol,
        trace_violation=float(abs(np.trace(L) - size)),
        rowsum_violation=float(np.abs(L.sum(axis=1)).max(initial=0.0)),
        offdiag_violation=float(max(off.max(initial=0.0), 0.0)),
        symmetry_violation=float(np.abs(L - L.T).max(initial=0.0)),
    )


def is_connected(A) -> bool:
    A = np.asarray(A)
    n = A.shape[0]
    if n == 0:
        return False
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(A[u] > 0):
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return bool(seen.all())


def _connected_sample(draw, what):
    for _ in range(MAX_CONNECT_RETRIES):
        A = draw()
        if is_connected(A):
            return Graph(A)
    raise GraphError(
        f"{what}: no connected sample in {MAX_CONNECT_RETRIES} attempts "
        "(edge probability too small?)"
    )


def _bernoulli_upper(P, rng):
    n = P.shape[0]
    U = np.triu(rng.random((n, n)) < P, 1).astype(float)
    return U + U.T


def generate_er(n: int, p: float, rng) -> Graph:
    """Erdos-Renyi graph with unit weights, conditioned on being connected."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    P = np.full((n, n), p)
    return _connected_sample(lambda: _bernoulli_upper(P, rng), f"ER(n={n}, p={p})")


def knn_adjacency(points, k: int) -> np.ndarray:
    """Symmetrized k-nearest-neighbour graph on a point cloud.

    Equal distances are resolved towards the lower node index.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    D = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
    np.fill_diagonal(D, np.inf)
    nbrs = np.argsort(D, axis=1, kind="stable")[:, :k]
    A = np.zeros((n, n))
    A[np.repeat(np.arange(n), k), nbrs.ravel()] = 1.0
    return np.maximum(A, A.T)


def generate_knn(n: int, k: int, rng, return_points: bool = False):
    """kNN graph over points drawn uniformly in the unit square."""
    if not 1 <= k < n:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    last = {}

    def draw():
        last["points"] = rng.random((n, 2))
        return knn_adjacency(last["points"], k)

    g = _connected_sample(draw, f"kNN(n={n}, k={k})")
    if return_points:
        return g, last["points"]
    return g


def generate_sbm(sizes, p_in: float, p_out: float, rng) -> Graph:
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError(f"block sizes must be positive, got {sizes}")
    for name, p in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")
    labels = np.repeat(np.arange(len(sizes)), sizes)
    if labels.size < 2:
        raise ValueError("SBM needs at least 2 nodes")
    P = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    return _connected_sample(lambda: _bernoulli_upper(P, rng), f"SBM(sizes={sizes})")


def block_labels(sizes) -> np.ndarray:
    return np.repeat(np.arange(len(sizes)), [int(s) for s in sizes])


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def load_edge_list(path, n_nodes: int | None = None) -> Graph:
    """Read an ``i,j,weight`` CSV with 0-based indices.

    If ``n_nodes`` is omitted the node count is one past the largest index.
    A first line whose first token is non-numeric is taken as a header.
    """
    path = Path(path)
    entries = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and not _is_number(row[0].strip()):
                continue
            if len(row) != 3:
                raise EdgeListParseError(path, lineno, f"expected 3 fields, got {len(row)}")
            try:
                i, j = int(row[0]), int(row[1])
                w = float(row[2])
            except ValueError as exc:
                raise EdgeListParseError(path, lineno, str(exc)) from None
            if i < 0 or j < 0:
                raise EdgeListParseError(path, lineno, "negative node index")
            if n_nodes is not None and max(i, j) >= n_nodes:
                raise EdgeListParseError(path, lineno, f"node index out of range [0, {n_nodes})")
            if i == j:
                raise EdgeListParseError(path, lineno, f"self-loop on node {i}")
            if not np.isfinite(w) or w < 0:
                raise EdgeListParseError(path, lineno, f"invalid weight {w}")
            key = (min(i, j), max(i, j))
            if key in entries:
                raise EdgeListParseError(path, lineno, f"duplicate edge {key}")
            entries[key] = w
    if n_nodes is None:
        n_nodes = 1 + max((j for _, j in entries), default=-1)
    A = np.zeros((n_nodes, n_nodes))
    for (i, j), w in entries.items():
        A[i, j] = A[j, i] = w
    return Graph(A)


def save_edge_list(g: Graph, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "j", "weight"])
        for i, j, w in g.edges():
            writer.writerow([i, j, repr(w)])


def save_points(points, path) -> None:
    np.savetxt(path, np.asarray(points), delimiter=",", header="x,y", comments="", fmt="%.17g")
