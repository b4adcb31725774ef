"""Readers and writers for labels, embeddings and result tables.

Formats:
    labels     one line per node, ``node_id label`` or, for multi-label
               data, ``node_id l1,l2,...`` (comma-separated, no spaces).
    csv        header ``node_id,v0,...,v{d-1}`` then one row per node;
               values use 17 significant digits so they round-trip exactly.
    bin        little-endian ``n (u64), d (u64)`` followed by ``n * d``
               float64 values in row-major order.
    results    CSV with header ``method,time_sec,metric``.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError
from .evaluation import MULTICLASS, MULTILABEL, LabelSet

_BIN_HEADER = struct.Struct("<QQ")


def read_labels(path) -> dict:
    """Map ``node_id -> tuple of label ints`` (one-element tuples for single labels)."""
    path = Path(path)
    out = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'node_id label[,label...]', got {line!r}",
                                 path, lineno)
            try:
                node = int(parts[0])
                labels = tuple(int(t) for t in parts[1].split(",") if t)
            except ValueError:
                raise ParseError(f"non-integer token in {line!r}", path, lineno) from None
            if node in out:
                raise ParseError(f"duplicate node id {node}", path, lineno)
            out[node] = labels
    if not out:
        raise DomainError(f"{path}: label file is empty")
    return out


def write_labels(path, ids, labels) -> None:
    """Write labels; ``labels[i]`` is an int or an iterable of ints."""
    with open(path, "w", encoding="utf-8") as fh:
        for node, lab in zip(ids, labels):
            if np.ndim(lab) == 0:
                fh.write(f"{int(node)} {int(lab)}\n")
            else:
                fh.write(f"{int(node)} {','.join(str(int(v)) for v in lab)}\n")


def align_labels(ids, label_map: dict, kind: str | None = None) -> LabelSet:
    """Build a :class:`LabelSet` whose row ``k`` belongs to node ``ids[k]``.

    ``kind`` defaults to multilabel if any node has more than one label.
    Multiclass data must label every node in ``ids``; multilabel data may
    leave nodes unlabeled. Label ids not present in ``ids`` are an error.
    """
    ids = [int(i) for i in ids]
    id_set = set(ids)
    extra = sorted(k for k in label_map if k not in id_set)
    if extra:
        raise DomainError(f"labels for unknown node ids (first: {extra[:5]})")
    if kind is None:
        kind = MULTILABEL if any(len(v) != 1 for v in label_map.values()) else MULTICLASS
    if kind == MULTICLASS:
        missing = [i for i in ids if i not in label_map]
        if missing:
            raise DomainError(f"nodes without a label (first: {missing[:5]})")
        if any(len(label_map[i]) != 1 for i in ids):
            raise DomainError("multiclass labels must have exactly one label per node")
        return LabelSet.multiclass([label_map[i][0] for i in ids])
    if kind == MULTILABEL:
        return LabelSet.multilabel([label_map.get(i, ()) for i in ids])
    raise DomainError(f"unknown label kind {kind!r}")


def write_embedding_csv(path, ids, z) -> None:
    z = np.asarray(z, dtype=np.float64)
    ids = np.asarray(ids)
    if ids.shape[0] != z.shape[0]:
        raise DomainError("one id per embedding row required")
    header = "node_id," + ",".join(f"v{k}" for k in range(z.shape[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        fmt = "%d" + ",%.17g" * z.shape[1] + "\n"
        for node, row in zip(ids.tolist(), z):
            fh.write(fmt % (node, *row))


def read_embedding_csv(path):
    """Return ``(ids, z)`` from a CSV written by :func:`write_embedding_csv`."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "node_id":
            raise ParseError("missing 'node_id,v0,...' header", path, 1)
        try:
            data = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise ParseError(str(exc), path) from None
    if data.shape[1] != len(header):
        raise ParseError(f"expected {len(header)} columns, got {data.shape[1]}", path)
    ids = data[:, 0].astype(np.int64)
    return ids, np.ascontiguousarray(data[:, 1:])


def write_embedding_bin(path, z) -> None:
    z = np.ascontiguousarray(z, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(z.shape[0], z.shape[1]))
        fh.write(z.tobytes(order="C"))


def read_embedding_bin(path) -> np.ndarray:
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(_BIN_HEADER.size)
        if len(head) != _BIN_HEADER.size:
            raise ParseError("truncated header", path)
        n, d = _BIN_HEADER.unpack(head)
        z = np.fromfile(fh, dtype="<f8")
    if z.size != n * d:
        raise ParseError(f"expected {n * d} values, found {z.size}", path)
    return z.reshape(n, d).astype(np.float64)


def read_results_table(path):
    """Read ``method,time_sec,metric`` rows into ``(methods, times, metrics)``."""
    path = Path(path)
    methods, times, metrics = [], [], []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"method", "time_sec", "metric"} <= set(reader.fieldnames):
            raise ParseError("header must contain method,time_sec,metric", path, 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                times.append(float(row["time_sec"]))
                metrics.append(float(row["metric"]))
            except (TypeError, ValueError):
                raise ParseError(f"bad number in row {row}", path, lineno) from None
            methods.append(row["method"])
    return methods, np.asarray(times), np.asarray(metrics)
