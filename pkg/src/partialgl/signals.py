"""Graph filters and synthetic low-pass graph signals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Spectrum

FILTER_KINDS = ("polynomial", "heat", "resolvent", "ideal_lowpass")
ZERO_EIG_TOL = 1e-10


@dataclass(frozen=True)
class GraphFilter:
    """Frequency-response specification of a graph filter.

    Use the constructors :meth:`polynomial`, :meth:`heat`, :meth:`resolvent`
    and :meth:`ideal_lowpass` rather than building one by hand.
    """

    kind: str
    coefficients: tuple = ()
    alpha: float = 0.0
    beta: float = 0.0
    cutoff: int = 0

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "polynomial":
            if not self.coefficients or not any(c != 0 for c in self.coefficients):
                raise ValueError("polynomial filter needs a nonzero coefficient")
        elif self.kind == "heat":
            if not (math.isfinite(self.alpha) and self.alpha > 0):
                raise ValueError(f"heat filter needs alpha > 0, got {self.alpha}")
        elif self.kind == "resolvent":
            if not (math.isfinite(self.beta) and self.beta >= 0):
                raise ValueError(f"resolvent filter needs beta >= 0, got {self.beta}")
        elif self.cutoff < 1:
            raise ValueError(f"ideal low-pass cutoff must be >= 1, got {self.cutoff}")

    @classmethod
    def polynomial(cls, coefficients):
        return cls("polynomial", coefficients=tuple(float(c) for c in coefficients))

    @classmethod
    def heat(cls, alpha):
        return cls("heat", alpha=float(alpha))

    @classmethod
    def resolvent(cls, beta):
        return cls("resolvent", beta=float(beta))

    @classmethod
    def ideal_lowpass(cls, K):
        return cls("ideal_lowpass", cutoff=int(K))

    def to_dict(self) -> dict:
        if self.kind == "polynomial":
            return {"kind": self.kind, "coefficients": list(self.coefficients)}
        if self.kind == "heat":
            return {"kind": self.kind, "alpha": self.alpha}
        if self.kind == "resolvent":
            return {"kind": self.kind, "beta": self.beta}
        return {"kind": self.kind, "cutoff": self.cutoff}

    @classmethod
    def from_dict(cls, d: dict) -> "GraphFilter":
        d = dict(d)
        kind = d.pop("kind", None)
        allowed = {
            "polynomial": {"coefficients"},
            "heat": {"alpha"},
            "resolvent": {"beta"},
            "ideal_lowpass": {"cutoff"},
        }
        if kind not in allowed:
            raise ValueError(f"unknown filter kind {kind!r}")
        extra = set(d) - allowed[kind]
        missing = allowed[kind] - set(d)
        if extra:
            raise ValueError(f"unexpected keys for {kind} filter: {sorted(extra)}")
        if missing:
            raise ValueError(f"missing keys for {kind} filter: {sorted(missing)}")
        return getattr(cls, kind)(*d.values())

    def with_parameter(self, value) -> "GraphFilter":
        """Same kind of filter with its scalar parameter replaced."""
        if self.kind == "heat":
            return GraphFilter.heat(value)
        if self.kind == "resolvent":
            return GraphFilter.resolvent(value)
        if self.kind == "ideal_lowpass":
            return GraphFilter.ideal_lowpass(value)
        raise ValueError("polynomial filters have no scalar parameter")


def frequency_response(f: GraphFilter, lam):
    """Evaluate h(lam) for value-based filters.

    The ideal low-pass filter is defined by eigen-index, so asking for its
    response at a frequency value is an error.
    """
    lam = np.asarray(lam, dtype=float)
    if f.kind == "ideal_lowpass":
        raise ValueError("ideal low-pass response is defined per eigen-index, not per value")
    if f.kind in ("heat", "resolvent") and np.any(lam < 0):
        raise ValueError("graph frequencies must be nonnegative")
    if f.kind == "polynomial":
        # np.polyval wants highest degree first
        out = np.polyval(f.coefficients[::-1], lam)
    elif f.kind == "heat":
        out = np.exp(-f.alpha * lam)
    else:
        out = 1.0 / (1.0 + f.beta * lam)
    return float(out) if out.ndim == 0 else out


def spectral_response(spec: Spectrum, f: GraphFilter) -> np.ndarray:
    """h evaluated on every eigenvalue of ``spec`` (in ascending order)."""
    if f.kind == "ideal_lowpass":
        if f.cutoff > spec.n:
            raise ValueError(f"cutoff {f.cutoff} exceeds graph size {spec.n}")
        h = np.zeros(spec.n)
        h[: f.cutoff] = 1.0
        return h
    # zero eigenvalues come out of eigh at round-off level, either sign; snap them
    lam = spec.eigenvalues
    lam = np.where(lam <= ZERO_EIG_TOL * max(1.0, lam[-1]), 0.0, lam)
    return np.asarray(frequency_response(f, lam), dtype=float)


def filter_matrix(spec: Spectrum, f: GraphFilter) -> np.ndarray:
    V = spec.eigenvectors
    return (V * spectral_response(spec, f)) @ V.T


def apply_filter(spec: Spectrum, f: GraphFilter, X) -> np.ndarray:
    """Filter each row of ``X`` (one signal per row)."""
    X = np.asarray(X, dtype=float)
    squeeze = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != spec.n:
        raise ValueError(f"signals have {X.shape[1]} columns, graph has {spec.n} nodes")
    V = spec.eigenvectors
    Y = ((X @ V) * spectral_response(spec, f)) @ V.T
    return Y[0] if squeeze else Y


@dataclass(frozen=True)
class LowpassProfile:
    K: int
    eta_K: float
    H_bound: float
    M_bound: float | None = None

    @property
    def is_lowpass(self) -> bool:
        return self.eta_K < 1.0


def sharpness_ratio(spec: Spectrum, f: GraphFilter, K: int, excitations=None) -> LowpassProfile:
    """Ratio of the strongest stop-band response to the weakest pass-band response.

    Passing ``excitations`` also records the largest excitation norm.
    """
    if not 1 <= K < spec.n:
        raise ValueError(f"K must lie in [1, {spec.n - 1}], got {K}")
    h = np.abs(spectral_response(spec, f))
    floor = h[:K].min()
    if floor == 0:
        raise ValueError("filter annihilates part of the pass band; sharpness ratio undefined")
    M_bound = None
    if excitations is not None:
        M_bound = float(np.linalg.norm(np.atleast_2d(excitations), axis=1).max())
    return LowpassProfile(K=K, eta_K=float(h[K:].max() / floor), H_bound=float(h.max()), M_bound=M_bound)


@dataclass(frozen=True)
class SignalMatrix:
    """Filtered signals (one per row) together with the excitations that produced them."""

    signals: np.ndarray
    excitations: np.ndarray
    filter: GraphFilter

    def __post_init__(self):
        if self.signals.shape != self.excitations.shape or self.signals.ndim != 2:
            raise ValueError(
                f"signals {self.signals.shape} and excitations {self.excitations.shape} disagree"
            )

    @property
    def M(self) -> int:
        return self.signals.shape[0]

    @property
    def M_bound(self) -> float:
        return float(np.linalg.norm(self.excitations, axis=1).max())

    def check(self, spec: Spectrum, atol: float = 1e-8) -> None:
        err = np.abs(apply_filter(spec, self.filter, self.excitations) - self.signals).max()
        if err > atol:
            raise ValueError(f"signals do not match filtered excitations (max error {err:.3g})")


def generate_signals(spec: Spectrum, f: GraphFilter, M: int, rng) -> SignalMatrix:
    """Filter ``M`` standard Gaussian excitations."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    X = rng.standard_normal((M, spec.n))
    Y = apply_filter(spec, f, X)
    X.setflags(write=False)
    Y.setflags(write=False)
    sm = SignalMatrix(Y, X, f)
    sm.check(spec)
    return sm


def decompose_lowpass(spec: Spectrum, K: int, y):
    """Split ``y`` into its projection on the K lowest-frequency eigenvectors and the rest."""
    VK = spec.leading(K)
    y = np.asarray(y, dtype=float)
    y_par = VK @ (VK.T @ y)
    return y_par, y - y_par


def quadratic_form(L, y) -> float:
    L = np.asarray(L, dtype=float)
    y = np.asarray(y, dtype=float)
    if L.shape != (y.shape[0], y.shape[0]):
        raise ValueError(f"Laplacian {L.shape} does not match signal length {y.shape[0]}")
    return float(y @ L @ y)


def save_signals(Y, path) -> None:
    np.savetxt(path, np.asarray(Y), delimiter=",", fmt="%.17g")


def load_signals(path) -> np.ndarray:
    Y = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(Y)):
        raise ValueError(f"{path}: non-finite signal values")
    return Y
