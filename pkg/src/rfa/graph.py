"""Undirected, unweighted sparse graphs in compressed-row form.

A :class:`Graph` is immutable once built. Every constructor funnels through
:meth:`Graph.from_edges`, which drops self-loops, removes duplicate edges and
stores each undirected edge in both directions with sorted neighbor lists.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, ParseError

logger = logging.getLogger(__name__)

INDEX_DTYPE = np.int64


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph stored as CSR adjacency.

    Attributes:
        n: Number of nodes; ids are ``0..n-1``.
        m: Number of undirected edges.
        indptr: Row pointer array of length ``n + 1``.
        indices: Concatenated ascending neighbor lists, length ``2m``.
        degrees: Per-node degree, ``indptr[1:] - indptr[:-1]``.
        original_ids: Node ids as they appeared in the source file, or
            ``None`` when the graph was generated in memory.
    """

    n: int
    m: int
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray
    original_ids: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, src, dst, n=None, original_ids=None) -> Graph:
        """Build a graph from endpoint arrays.

        Self-loops are dropped, duplicates (in either orientation) collapse
        to one undirected edge. ``n`` defaults to ``max id + 1``.
        """
        src = np.asarray(src, dtype=INDEX_DTYPE).ravel()
        dst = np.asarray(dst, dtype=INDEX_DTYPE).ravel()
        if src.shape != dst.shape:
            raise DomainError("edge endpoint arrays differ in length")
        if src.size and min(src.min(), dst.min()) < 0:
            raise DomainError("node ids must be non-negative")
        if n is None:
            n = int(max(src.max(), dst.max())) + 1 if src.size else 0
        n = int(n)
        if n < 1:
            raise DomainError("graph has no nodes")
        if src.size and max(src.max(), dst.max()) >= n:
            raise DomainError(f"edge endpoint out of range for n={n}")

        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        keep = lo != hi
        key = np.unique(lo[keep] * n + hi[keep])
        lo, hi = np.divmod(key, n)
        return cls._from_unique_pairs(lo, hi, n, original_ids)

    @classmethod
    def _from_unique_pairs(cls, lo, hi, n, original_ids=None) -> Graph:
        # lo < hi, no duplicates
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        order = np.lexsort((cols, rows))
        indices = np.ascontiguousarray(cols[order], dtype=INDEX_DTYPE)
        degrees = np.bincount(rows, minlength=n).astype(INDEX_DTYPE)
        indptr = np.zeros(n + 1, dtype=INDEX_DTYPE)
        np.cumsum(degrees, out=indptr[1:])
        if original_ids is not None:
            original_ids = np.asarray(original_ids)
            if original_ids.shape != (n,):
                raise DomainError("original_ids must have one entry per node")
        return cls(n=n, m=int(lo.size), indptr=indptr, indices=indices,
                   degrees=degrees, original_ids=original_ids)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Return an ``(m, 2)`` array of edges with ``u < v``, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n, dtype=INDEX_DTYPE), self.degrees)
        mask = rows < self.indices
        return np.column_stack([rows[mask], self.indices[mask]])

    def adjacency(self, dtype=np.float64) -> sp.csr_matrix:
        data = np.ones(self.indices.size, dtype=dtype)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def node_ids(self) -> np.ndarray:
        """Ids used for output: the original ids if known, else ``0..n-1``."""
        if self.original_ids is not None:
            return self.original_ids
        return np.arange(self.n, dtype=INDEX_DTYPE)

    def validate(self) -> None:
        """Check the structural invariants; raise :class:`DomainError` on violation."""
        if self.indptr.shape != (self.n + 1,) or self.indptr[0] != 0:
            raise DomainError("malformed indptr")
        if self.indptr[-1] != self.indices.size or self.indices.size != 2 * self.m:
            raise DomainError("degree sum does not equal 2m")
        if not np.array_equal(np.diff(self.indptr), self.degrees):
            raise DomainError("degrees disagree with neighbor list lengths")
        rows = np.repeat(np.arange(self.n, dtype=INDEX_DTYPE), self.degrees)
        if np.any(rows == self.indices):
            raise DomainError("self-loop present")
        # strictly increasing within each row => sorted and duplicate-free
        step = np.diff(self.indices)
        same_row = np.diff(rows) == 0
        if np.any(step[same_row] <= 0):
            raise DomainError("neighbor lists not strictly ascending")
        fwd = rows * self.n + self.indices
        rev = np.sort(self.indices * self.n + rows)
        if not np.array_equal(fwd, rev):
            raise DomainError("adjacency is not symmetric")


@dataclass(frozen=True, eq=False)
class ComponentMap:
    """Connected-component labelling plus the relabeling of the kept component.

    Attributes:
        component_id: Per-node component label of the source graph.
        sizes: Node count of each component, indexed by label.
        kept: Label of the extracted component.
        old_ids: Source-graph ids of the kept nodes, ascending; new id ``k``
            corresponds to ``old_ids[k]``.
        remap: Length-``n`` array mapping old id to new id, ``-1`` for
            nodes outside the kept component.
    """

    component_id: np.ndarray
    sizes: np.ndarray
    kept: int
    old_ids: np.ndarray
    remap: np.ndarray

    @property
    def num_components(self) -> int:
        return int(self.sizes.size)


def induced_subgraph(g: Graph, nodes) -> Graph:
    """Subgraph on ``nodes`` (any order); nodes are relabeled by ascending old id."""
    nodes = np.unique(np.asarray(nodes, dtype=INDEX_DTYPE))
    remap = np.full(g.n, -1, dtype=INDEX_DTYPE)
    remap[nodes] = np.arange(nodes.size, dtype=INDEX_DTYPE)
    e = g.edges()
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    lo, hi = remap[e[keep, 0]], remap[e[keep, 1]]
    orig = g.original_ids[nodes] if g.original_ids is not None else nodes
    return Graph._from_unique_pairs(lo, hi, nodes.size, original_ids=orig)


def largest_connected_component(g: Graph) -> tuple[Graph, ComponentMap]:
    """Extract the largest connected component.

    Ties between equally large components go to the one containing the
    smallest node id. A connected input is returned as-is with an identity
    remap.
    """
    ncomp, labels = connected_components(g.adjacency(), directed=False)
    labels = labels.astype(INDEX_DTYPE)
    sizes = np.bincount(labels, minlength=ncomp).astype(INDEX_DTYPE)
    first_seen = np.full(ncomp, g.n, dtype=INDEX_DTYPE)
    np.minimum.at(first_seen, labels, np.arange(g.n, dtype=INDEX_DTYPE))
    best = np.lexsort((first_seen, -sizes))[0]

    old_ids = np.flatnonzero(labels == best).astype(INDEX_DTYPE)
    remap = np.full(g.n, -1, dtype=INDEX_DTYPE)
    remap[old_ids] = np.arange(old_ids.size, dtype=INDEX_DTYPE)
    cmap = ComponentMap(component_id=labels, sizes=sizes, kept=int(best),
                        old_ids=old_ids, remap=remap)
    if ncomp == 1:
        return g, cmap
    return induced_subgraph(g, old_ids), cmap


def is_connected(g: Graph) -> bool:
    ncomp, _ = connected_components(g.adjacency(), directed=False)
    return ncomp == 1


def load_edge_list(path, base: int = 0, strict: bool = True,
                   compact: bool = True) -> Graph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` and blank lines are ignored; anything after a
    ``#`` on a line is a comment. Each remaining line must contain exactly two
    integer ids. ``base`` is the id of the first node (0 or 1).

    With ``compact=True`` the distinct ids are mapped to ``0..n-1`` in
    ascending order and the file ids are kept in ``Graph.original_ids``.
    With ``compact=False`` ids are used directly (after subtracting
    ``base``) and ids that never appear become isolated nodes.

    In non-strict mode malformed lines are skipped with a warning instead of
    raising :class:`ParseError`.
    """
    path = Path(path)
    src, dst = [], []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0]
            parts = line.split()
            if not parts:
                continue
            try:
                if len(parts) != 2:
                    raise ParseError(f"expected 2 ids, found {len(parts)} tokens",
                                     path, lineno)
                try:
                    u, v = int(parts[0]), int(parts[1])
                except ValueError:
                    raise ParseError(f"non-integer token in {line.strip()!r}",
                                     path, lineno) from None
                if u < base or v < base:
                    raise ParseError(f"negative node id (base {base})", path, lineno)
            except ParseError as exc:
                if strict:
                    raise
                logger.warning("skipping %s", exc)
                continue
            src.append(u)
            dst.append(v)
    if not src:
        raise DomainError(f"{path}: edge list is empty")

    src = np.asarray(src, dtype=INDEX_DTYPE)
    dst = np.asarray(dst, dtype=INDEX_DTYPE)
    if compact:
        ids, inv = np.unique(np.concatenate([src, dst]), return_inverse=True)
        return Graph.from_edges(inv[:src.size], inv[src.size:], n=ids.size,
                                original_ids=ids)
    return Graph.from_edges(src - base, dst - base)


def write_edge_list(g: Graph, path, use_original_ids: bool = False) -> None:
    e = g.edges()
    if use_original_ids:
        e = g.node_ids()[e]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.m}\n")
        np.savetxt(fh, e, fmt="%d")
