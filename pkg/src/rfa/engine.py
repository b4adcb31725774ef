"""Training-free embedding by filtering random noise.

Starting from Gaussian noise ``Z0 ~ N(0, 1/d)``, each of ``K`` iterations
computes ``Z <- Norm(act(P Z))`` where ``P`` is the degree-corrected
propagator. Low-pass filtering keeps community (position) information,
high-pass filtering keeps local structural (identity) information.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, NumericError
from .graph import Graph, is_connected
from .spectral import FilterConfig, apply_propagator, build_propagator

logger = logging.getLogger(__name__)

ACTIVATIONS = ("tanh", "exp", "none")
NORMALIZATIONS = ("l2_row", "zscore_col", "none")
_NORM_ALIASES = {"l2": "l2_row", "zscore": "zscore_col", "z": "zscore_col"}


@dataclass(frozen=True)
class RfaConfig:
    dim: int = 64
    iters: int = 10
    filter: FilterConfig = field(default_factory=lambda: FilterConfig.low_pass(20.0))
    activation: str = "tanh"
    normalization: str = "zscore_col"
    seed: int = 0

    def __post_init__(self):
        norm = _NORM_ALIASES.get(self.normalization, self.normalization)
        object.__setattr__(self, "normalization", norm)
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")
        if int(self.iters) != self.iters or self.iters < 0:
            raise DomainError(f"iters must be a non-negative integer, got {self.iters}")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"activation must be one of {ACTIVATIONS}")
        if self.normalization not in NORMALIZATIONS:
            raise DomainError(f"normalization must be one of {NORMALIZATIONS}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RfaConfig:
        d = dict(d)
        d["filter"] = FilterConfig(**d["filter"])
        return cls(**d)


@dataclass(eq=False)
class EmbeddingMatrix:
    """Node embeddings, one row per node.

    Attributes:
        data: ``(n, d)`` float64 array.
        elapsed: Wall-clock seconds of noise generation plus the
            propagation loop (0 when not produced by :func:`rfa_embed`).
    """

    data: np.ndarray
    elapsed: float = 0.0

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


# (dim, tau, iters, activation, normalization, filter)
PRESETS = {
    "ppi": (256, 20, 10, "tanh", "zscore_col", "low"),
    "blogcatalog": (512, 0, 9, "tanh", "zscore_col", "low"),
    "flickr": (512, 1, 7, "tanh", "zscore_col", "low"),
    "youtube": (128, 10, 14, "tanh", "l2_row", "low"),
    "orkut": (64, 20, 8, "tanh", "zscore_col", "low"),
    "europe": (64, 20, 3, "exp", "zscore_col", "high"),
    "usa": (64, 20, 7, "exp", "none", "high"),
    "reality-call": (128, 20, 2, "exp", "none", "high"),
    "actor": (128, 20, 2, "exp", "none", "high"),
    "film": (256, 10, 12, "exp", "zscore_col", "high"),
}


def preset_config(name: str, seed: int = 0) -> RfaConfig:
    """Recommended settings for one of the benchmark datasets."""
    key = name.lower()
    if key not in PRESETS:
        raise DomainError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    dim, tau, iters, act, norm, filt = PRESETS[key]
    return RfaConfig(dim=dim, iters=iters, filter=FilterConfig.preset(filt, float(tau)),
                     activation=act, normalization=norm, seed=seed)


def init_noise(n: int, dim: int, seed: int = 0) -> np.ndarray:
    """I.i.d. ``N(0, 1/dim)`` matrix drawn in row-major order from a seeded PCG64 stream."""
    if n < 1 or dim < 1:
        raise DomainError("init_noise requires n >= 1 and dim >= 1")
    x = np.random.default_rng(seed).standard_normal((n, dim))
    x *= np.sqrt(1.0 / dim)
    return x


def _as_matrix(x) -> np.ndarray:
    x = np.array(x, dtype=np.float64, order="C", copy=True)
    if x.ndim == 1:
        return x[:, None]
    if x.ndim != 2:
        raise DomainError(f"expected a 1-D or 2-D array, got shape {x.shape}")
    return x


def _activate_inplace(x: np.ndarray, kind: str) -> None:
    if kind == "tanh":
        _kernels.tanh_inplace(x)
    elif kind == "exp":
        _kernels.exp_inplace(x, _kernels.EXP_CAP)
    elif kind != "none":
        raise DomainError(f"unknown activation {kind!r}")


def _normalize_inplace(x: np.ndarray, kind: str) -> None:
    kind = _NORM_ALIASES.get(kind, kind)
    if kind == "l2_row":
        _kernels.l2_rows_inplace(x)
    elif kind == "zscore_col":
        _kernels.zscore_cols_inplace(x)
    elif kind != "none":
        raise DomainError(f"unknown normalization {kind!r}")


def activate(x, kind: str) -> np.ndarray:
    """Elementwise ``tanh``, saturated ``exp`` (inputs capped at 30) or identity."""
    shape = np.shape(x)
    out = _as_matrix(x)
    _activate_inplace(out, kind)
    return out.reshape(shape)


def normalize(x, kind: str) -> np.ndarray:
    """Row-wise L2 or column-wise z-score normalization (returns a copy).

    Zero rows stay zero under ``l2_row``; constant columns become zero under
    ``zscore_col``, which uses the population standard deviation.
    """
    shape = np.shape(x)
    out = _as_matrix(x)
    _normalize_inplace(out, kind)
    return out.reshape(shape)


def rfa_embed(g: Graph, cfg: RfaConfig, check_connected: bool = True,
              callback=None) -> EmbeddingMatrix:
    """Embed the nodes of ``g``.

    Args:
        g: Input graph, expected to be connected.
        cfg: Embedding configuration.
        check_connected: Warn when ``g`` has more than one component.
        callback: Optional ``callback(k, z)`` invoked after every iteration
            with a read-only view of the current embedding.

    Returns:
        The final embedding; ``elapsed`` covers noise generation and the
        propagation loop only.

    Raises:
        NumericError: an iteration produced NaN or infinite entries.
    """
    if check_connected and not is_connected(g):
        warnings.warn("graph is not connected; consider extracting the largest "
                      "connected component first", RuntimeWarning, stacklevel=2)
    prop = build_propagator(g, cfg.filter)

    start = time.perf_counter()
    cur = init_noise(g.n, cfg.dim, cfg.seed)
    nxt = np.empty_like(cur)
    for k in range(1, cfg.iters + 1):
        apply_propagator(prop, cur, out=nxt)
        _activate_inplace(nxt, cfg.activation)
        _normalize_inplace(nxt, cfg.normalization)
        bad = _kernels.count_nonfinite(nxt)
        if bad:
            raise NumericError(f"iteration {k}: {bad} non-finite embedding entries")
        cur, nxt = nxt, cur
        if callback is not None:
            view = cur.view()
            view.flags.writeable = False
            callback(k, view)
    elapsed = time.perf_counter() - start
    del nxt
    logger.debug("rfa_embed n=%d d=%d K=%d took %.3fs", g.n, cfg.dim, cfg.iters, elapsed)
    return EmbeddingMatrix(data=cur, elapsed=elapsed)
