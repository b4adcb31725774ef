"""Synthetic graph generators.

All generators are pure functions of their arguments: the random ones draw
from ``numpy.random.default_rng(seed)`` in a fixed order.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .graph import INDEX_DTYPE, Graph


def _skip_sample(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Ascending indices in ``[0, total)``, each kept independently with prob ``p``.

    Uses geometric gaps between successive kept indices, so the cost is
    proportional to the number of kept indices rather than ``total``.
    """
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=INDEX_DTYPE)
    if p >= 1.0:
        return np.arange(total, dtype=INDEX_DTYPE)
    # chunk size depends only on (total, p) so the draw sequence is reproducible
    chunk = int(min(max(total * p * 1.05 + 64, 64), 1 << 22))
    out = []
    pos = -1
    while True:
        gaps = rng.geometric(p, size=chunk).astype(INDEX_DTYPE)
        idx = pos + np.cumsum(gaps)
        if idx[-1] >= total:
            out.append(idx[idx < total])
            break
        out.append(idx)
        pos = int(idx[-1])
    return np.concatenate(out)


def _triangle_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over ``{(i, j): 0 <= j < i}`` to ``(i, j)``."""
    i = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(INDEX_DTYPE)
    # one-step correction for float rounding at large k
    i -= (i * (i - 1) // 2 > k)
    i += ((i + 1) * i // 2 <= k)
    j = k - i * (i - 1) // 2
    return i, j


def gen_erdos_renyi(n: int, avg_degree: float, seed: int = 0) -> Graph:
    """Sample G(n, p) with ``p = avg_degree / (n - 1)`` in O(n + m) expected time.

    The raw sample is returned; it may be disconnected.
    """
    n = int(n)
    if n < 2:
        raise DomainError("gen_erdos_renyi requires n >= 2")
    if not 0.0 < avg_degree <= n - 1:
        raise DomainError(f"avg_degree must lie in (0, n-1], got {avg_degree}")
    p = avg_degree / (n - 1)
    rng = np.random.default_rng(seed)
    k = _skip_sample(n * (n - 1) // 2, p, rng)
    i, j = _triangle_pairs(k)
    # (j, i) with j < i, unique and sorted by construction
    return Graph._from_unique_pairs(j, i, n)


def gen_barbell(n: int, c: int) -> Graph:
    """Two ``n``-cliques joined by a path through ``c`` intermediate nodes.

    Layout: clique one is ``0..n-1`` with gateway ``n-1``; the path is
    ``n..n+c-1``; clique two is ``n+c..2n+c-1`` with gateway ``n+c``.
    """
    if n < 3 or c < 1:
        raise DomainError("gen_barbell requires n >= 3 and c >= 1")
    iu, ju = np.triu_indices(n, k=1)
    src = [iu, iu + n + c]
    dst = [ju, ju + n + c]
    chain = np.arange(n - 1, n + c + 1)
    src.append(chain[:-1])
    dst.append(chain[1:])
    return Graph.from_edges(np.concatenate(src), np.concatenate(dst), n=2 * n + c)


def gen_sbm(block_sizes, p_in: float, p_out: float, seed: int = 0):
    """Planted-partition stochastic block model.

    Nodes are laid out block by block. Returns ``(graph, labels)`` where
    ``labels[i]`` is the block of node ``i``.
    """
    sizes = [int(s) for s in block_sizes]
    if not sizes:
        raise DomainError("gen_sbm needs at least one block")
    if any(s < 1 for s in sizes):
        raise DomainError("block sizes must be >= 1")
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise DomainError("p_in and p_out must lie in [0, 1]")

    rng = np.random.default_rng(seed)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    src, dst = [], []
    for a, sa in enumerate(sizes):
        k = _skip_sample(sa * (sa - 1) // 2, p_in, rng)
        i, j = _triangle_pairs(k)
        src.append(j + offsets[a])
        dst.append(i + offsets[a])
        for b in range(a + 1, len(sizes)):
            sb = sizes[b]
            k = _skip_sample(sa * sb, p_out, rng)
            src.append(k // sb + offsets[a])
            dst.append(k % sb + offsets[b])
    n = int(offsets[-1])
    labels = np.repeat(np.arange(len(sizes), dtype=INDEX_DTYPE), sizes)
    g = Graph.from_edges(np.concatenate(src), np.concatenate(dst), n=n)
    return g, labels


def gen_role_ring(num_stars: int, leaves_per_star: int):
    """Star hubs on a ring, each with its own leaves.

    Hubs are ``0..num_stars-1``; the leaves of hub ``h`` follow in one
    contiguous run. Labels are 0 for hubs and 1 for leaves.
    """
    if num_stars < 3 or leaves_per_star < 1:
        raise DomainError("gen_role_ring requires num_stars >= 3 and leaves_per_star >= 1")
    hubs = np.arange(num_stars, dtype=INDEX_DTYPE)
    n = num_stars * (1 + leaves_per_star)
    leaves = np.arange(num_stars, n, dtype=INDEX_DTYPE)
    src = np.concatenate([hubs, np.repeat(hubs, leaves_per_star)])
    dst = np.concatenate([(hubs + 1) % num_stars, leaves])
    labels = np.ones(n, dtype=INDEX_DTYPE)
    labels[:num_stars] = 0
    return Graph.from_edges(src, dst, n=n), labels
