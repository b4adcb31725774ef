"""Degree-corrected propagation operator and dense spectral diagnostics.

The propagator applies ``delta * x + alpha * D_tau^{-1/2} A D_tau^{-1/2} x``
with ``D_tau = D + tau * I``. In the eigenbasis of the regularized Laplacian
``L_tau = I - D_tau^{-1/2} A D_tau^{-1/2}`` this is multiplication by the
affine kernel ``g(lam) = (delta + alpha) - alpha * lam``.

The dense routines (:func:`dense_spectrum` and friends) are O(n^3) and only
meant for small graphs in tests and diagnostics; the embedding path never
eigendecomposes anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, NumericError
from .graph import Graph

DENSE_CAP = 2000
# Computed eigenvalues may leave the provable enclosure by rounding error only.
ENCLOSURE_SLACK = 1e-10


@dataclass(frozen=True)
class FilterConfig:
    delta: float
    alpha: float
    tau: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta}")
        if not -1.0 <= self.alpha <= 1.0 or self.alpha == 0.0:
            raise DomainError(f"alpha must lie in [-1, 1] and be non-zero, got {self.alpha}")
        if not self.tau >= 0.0:
            raise DomainError(f"tau must be >= 0, got {self.tau}")

    @classmethod
    def low_pass(cls, tau: float = 0.0) -> FilterConfig:
        return cls(0.1, 1.0, tau)

    @classmethod
    def high_pass(cls, tau: float = 0.0) -> FilterConfig:
        return cls(0.1, -1.0, tau)

    @classmethod
    def preset(cls, name: str, tau: float = 0.0) -> FilterConfig:
        if name in ("low", "low_pass", "L"):
            return cls.low_pass(tau)
        if name in ("high", "high_pass", "H"):
            return cls.high_pass(tau)
        raise DomainError(f"unknown filter {name!r}; expected 'low' or 'high'")

    @property
    def kind(self) -> str:
        return "low" if self.alpha > 0 else "high"


def kernel_response(cfg: FilterConfig, lam):
    """Filter gain at Laplacian eigenvalue(s) ``lam``."""
    return (cfg.delta + cfg.alpha) - cfg.alpha * np.asarray(lam, dtype=np.float64)


def degree_scale(degrees: np.ndarray, tau: float) -> np.ndarray:
    """Per-node factors ``(deg_i + tau)^{-1/2}``; zero where the sum is zero."""
    shifted = degrees.astype(np.float64) + tau
    out = np.zeros_like(shifted)
    np.divide(1.0, np.sqrt(shifted), out=out, where=shifted > 0)
    return out


@dataclass(frozen=True, eq=False)
class Propagator:
    """Precomputed sparse filter operator for one graph.

    Attributes:
        graph: The graph the operator acts on.
        scale: ``(deg_i + tau)^{-1/2}`` per node.
        delta, alpha: Kernel coefficients copied from the filter config.
        tau: Degree-correction term.
    """

    graph: Graph
    scale: np.ndarray
    delta: float
    alpha: float
    tau: float

    @property
    def n(self) -> int:
        return self.graph.n

    def __call__(self, x, out=None):
        return apply_propagator(self, x, out=out)


def build_propagator(g: Graph, cfg: FilterConfig) -> Propagator:
    if cfg.tau == 0.0 and g.n > 0 and np.any(g.degrees == 0):
        raise DomainError(
            "graph has isolated nodes and tau = 0: degree correction required "
            "or remove isolates (e.g. keep the largest connected component)")
    return Propagator(graph=g, scale=degree_scale(g.degrees, cfg.tau),
                      delta=float(cfg.delta), alpha=float(cfg.alpha),
                      tau=float(cfg.tau))


def apply_propagator(p: Propagator, x, out=None) -> np.ndarray:
    """Compute ``delta * x + alpha * D_tau^{-1/2} A D_tau^{-1/2} x``.

    ``x`` may be a vector or an ``(n, d)`` matrix. If ``out`` is given it
    must be a C-contiguous float64 array of the same shape, distinct from
    ``x``; it is overwritten and returned.
    """
    x = np.asarray(x, dtype=np.float64)
    vector = x.ndim == 1
    if vector:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != p.n:
        raise DomainError(f"expected {p.n} rows, got array of shape {x.shape}")
    x = np.ascontiguousarray(x)
    if out is None:
        out = np.empty_like(x)
    elif out.shape != x.shape or out.dtype != np.float64 or not out.flags.c_contiguous:
        raise DomainError("out must be a C-contiguous float64 array shaped like x")
    elif np.shares_memory(out, x):
        raise DomainError("out must not alias x")
    g = p.graph
    _kernels.propagate(g.indptr, g.indices, p.scale, x, out, p.delta, p.alpha)
    return out[:, 0] if vector else out


def normalized_adjacency_dense(g: Graph, tau: float) -> np.ndarray:
    s = degree_scale(g.degrees, tau)
    a = g.adjacency().toarray()
    return s[:, None] * a * s[None, :]


def laplacian_dense(g: Graph, tau: float = 0.0) -> np.ndarray:
    """Dense ``L_tau = I - D_tau^{-1/2} A D_tau^{-1/2}``."""
    return np.eye(g.n) - normalized_adjacency_dense(g, tau)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenpairs of ``L_tau``; ``eigenvectors[:, r]`` pairs with ``eigenvalues[r]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tau: float

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def apply_kernel(self, cfg: FilterConfig, x, power: int = 1) -> np.ndarray:
        """Spectral-domain filtering ``U g(Lam)^power U^T x``."""
        gain = kernel_response(cfg, self.eigenvalues) ** power
        u = self.eigenvectors
        x = np.asarray(x, dtype=np.float64)
        coeff = u.T @ x
        coeff *= gain[:, None] if coeff.ndim == 2 else gain
        return u @ coeff

    def is_simple(self, r: int, rel_gap: float = 1e-8) -> bool:
        """True if eigenvalue ``r`` has multiplicity one."""
        lam = self.eigenvalues
        tol = rel_gap * max(1.0, abs(lam[r]))
        left = r == 0 or lam[r] - lam[r - 1] > tol
        right = r == lam.size - 1 or lam[r + 1] - lam[r] > tol
        return bool(left and right)

    def multiplicity(self, value: float, tol: float = 1e-8) -> int:
        return int(np.sum(np.abs(self.eigenvalues - value) <= tol))


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    mag = np.abs(vecs)
    peak = mag.max(axis=0)
    # first index whose magnitude ties the column maximum (up to rounding)
    lead = np.argmax(mag >= peak * (1.0 - 1e-9), axis=0)
    signs = np.sign(vecs[lead, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def gershgorin_interval(g: Graph, tau: float) -> tuple[float, float]:
    """Interval ``[1 - r, 1 + r]`` with ``r = max_i deg_i / (deg_i + tau)``.

    Isolated nodes contribute radius 0.
    """
    deg = g.degrees.astype(np.float64)
    denom = deg + tau
    ratio = np.divide(deg, denom, out=np.zeros_like(deg), where=denom > 0)
    r = float(ratio.max()) if ratio.size else 0.0
    return 1.0 - r, 1.0 + r


def dense_spectrum(g: Graph, tau: float = 0.0, cap: int = DENSE_CAP) -> Spectrum:
    """Full eigendecomposition of ``L_tau`` with a symmetric solver.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive (first such entry on ties). Eigenvalues within rounding distance
    of the Gershgorin enclosure are clamped onto it.
    """
    if g.n > cap:
        raise DomainError(
            f"dense spectrum limited to n <= {cap} (graph has n = {g.n}); "
            "use the sparse operations or diagnose a subsample")
    vals, vecs = np.linalg.eigh(laplacian_dense(g, tau))
    lo, hi = gershgorin_interval(g, tau)
    excess = max(lo - vals.min(), vals.max() - hi)
    if excess > ENCLOSURE_SLACK:
        raise NumericError(f"eigenvalue leaves Gershgorin enclosure by {excess:.3e}")
    vals = np.clip(vals, lo, hi)
    return Spectrum(eigenvalues=vals, eigenvectors=_fix_signs(vecs), tau=float(tau))


def spectrum_spread(spec: Spectrum) -> float:
    """Largest distance of any eigenvalue from 1."""
    return float(np.max(np.abs(spec.eigenvalues - 1.0)))


def laplacian_identity_residual(spec: Spectrum, g: Graph, r: int,
                                skip_below: float = 1e-8) -> np.ndarray:
    """Per-node residual of the eigen-equation written as a neighbor sum.

    For node ``i`` the residual is
    ``|sum_{j in N(i)} [1/deg_i - (deg_i deg_j)^{-1/2} u_j / u_i] - lam_r|``.
    Nodes with ``|u_i| < skip_below`` get NaN. Only defined for ``tau = 0``.
    """
    if spec.tau != 0.0:
        raise DomainError("the neighbor-sum identity is stated for tau = 0")
    if not 0 <= r < spec.n:
        raise DomainError(f"eigen index {r} out of range for n = {spec.n}")
    u = spec.eigenvectors[:, r]
    lam = spec.eigenvalues[r]
    deg = g.degrees.astype(np.float64)
    out = np.full(g.n, np.nan)
    for i in range(g.n):
        if abs(u[i]) < skip_below or deg[i] == 0:
            continue
        nb = g.neighbors(i)
        terms = 1.0 / deg[i] - u[nb] / (np.sqrt(deg[i] * deg[nb]) * u[i])
        out[i] = abs(terms.sum() - lam)
    return out
