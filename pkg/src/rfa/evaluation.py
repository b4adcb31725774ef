"""Downstream node-classification protocol for embeddings.

Labeled nodes are split into train/test sets, a logistic-regression
classifier is trained on the training embeddings and scored on the test set
with micro- and macro-F1. The procedure is repeated over independently
seeded splits and summarized in an :class:`EvalReport`.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError

MULTICLASS = "multiclass"
MULTILABEL = "multilabel"


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Ground-truth labels for the nodes of a graph.

    For ``multiclass``, ``labels`` is an int array with one class id per
    node. For ``multilabel`` it is a boolean ``(n, C)`` indicator matrix;
    nodes with an all-false row are unlabeled and never enter a split.
    ``class_values`` maps class ids back to the values read from disk.
    """

    kind: str
    labels: np.ndarray
    num_classes: int
    class_values: tuple = ()

    def __post_init__(self):
        if self.kind == MULTICLASS:
            if self.labels.ndim != 1:
                raise DomainError("multiclass labels must be a 1-D array")
            if self.labels.size and (self.labels.min() < 0
                                     or self.labels.max() >= self.num_classes):
                raise DomainError("class ids must lie in 0..C-1")
        elif self.kind == MULTILABEL:
            if self.labels.ndim != 2 or self.labels.shape[1] != self.num_classes:
                raise DomainError("multilabel labels must be an (n, C) indicator matrix")
        else:
            raise DomainError(f"unknown label kind {self.kind!r}")

    @classmethod
    def multiclass(cls, values) -> LabelSet:
        """Build from arbitrary per-node class values (relabeled to ``0..C-1``)."""
        uniq, ids = np.unique(np.asarray(values), return_inverse=True)
        return cls(MULTICLASS, ids.astype(np.int64), int(uniq.size), tuple(uniq.tolist()))

    @classmethod
    def multilabel(cls, label_sets, num_classes=None) -> LabelSet:
        """Build from per-node iterables of label values; empty means unlabeled."""
        label_sets = [tuple(s) for s in label_sets]
        uniq = sorted({v for s in label_sets for v in s})
        if num_classes is not None and len(uniq) > num_classes:
            raise DomainError("more distinct labels than num_classes")
        index = {v: k for k, v in enumerate(uniq)}
        y = np.zeros((len(label_sets), num_classes or len(uniq)), dtype=bool)
        for i, s in enumerate(label_sets):
            for v in s:
                y[i, index[v]] = True
        return cls(MULTILABEL, y, y.shape[1], tuple(uniq))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def labeled(self) -> np.ndarray:
        if self.kind == MULTICLASS:
            return np.arange(self.n)
        return np.flatnonzero(self.labels.any(axis=1))

    def indicator(self, ids=None) -> np.ndarray:
        ids = np.arange(self.n) if ids is None else np.asarray(ids)
        if self.kind == MULTILABEL:
            return self.labels[ids]
        return _one_hot(self.labels[ids], self.num_classes)

    def subset(self, ids) -> LabelSet:
        ids = np.asarray(ids)
        return LabelSet(self.kind, self.labels[ids], self.num_classes, self.class_values)


def _one_hot(ids, num_classes) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    y = np.zeros((ids.size, num_classes), dtype=bool)
    y[np.arange(ids.size), ids] = True
    return y


def _train_count(ratio: float, count: int) -> int:
    # tolerance keeps e.g. 0.2 * 35 = 7.000000000000001 from rounding up
    k = math.ceil(ratio * count - 1e-9)
    return min(max(k, 1), count - 1)


def split(labelset: LabelSet, train_ratio: float, seed: int = 0):
    """Random train/test split of the labeled nodes.

    Multiclass splits are stratified: each class contributes
    ``ceil(train_ratio * count)`` training nodes (at least one node of each
    class stays in the test set). Multilabel splits are uniform.

    Returns:
        ``(train_ids, test_ids)``, both sorted ascending.
    """
    if not 0.0 < train_ratio < 1.0:
        raise DomainError(f"train_ratio must lie in (0, 1), got {train_ratio}")
    rng = np.random.default_rng(seed)
    labeled = labelset.labeled()
    if labelset.kind == MULTICLASS:
        counts = np.bincount(labelset.labels, minlength=labelset.num_classes)
        small = np.flatnonzero(counts < 2)
        if small.size:
            raise DomainError(f"classes {small.tolist()} have fewer than 2 labeled nodes")
        train = []
        for c in range(labelset.num_classes):
            members = np.flatnonzero(labelset.labels == c)
            picked = rng.permutation(members)[:_train_count(train_ratio, members.size)]
            train.append(picked)
        train = np.sort(np.concatenate(train))
    else:
        if labeled.size < 2:
            raise DomainError("need at least 2 labeled nodes")
        train = np.sort(rng.permutation(labeled)[:_train_count(train_ratio, labeled.size)])
    test = np.setdiff1d(labeled, train)
    return train, test


@dataclass(eq=False)
class Classifier:
    """Linear classifier: scores are ``x @ weights + bias``."""

    kind: str
    weights: np.ndarray
    bias: np.ndarray
    epochs: int = 0
    converged: bool = False

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DomainError(f"classifier expects {self.dim} features, got shape {x.shape}")
        return x @ self.weights + self.bias

    def predict_proba(self, x) -> np.ndarray:
        z = self.decision_function(x)
        if self.kind == MULTICLASS:
            z = z - z.max(axis=1, keepdims=True)
            e = np.exp(z)
            return e / e.sum(axis=1, keepdims=True)
        return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax_objective(x, y, reg):
    n = x.shape[0]

    def f(w, b, need_grad=True):
        z = x @ w + b
        z -= z.max(axis=1, keepdims=True)
        lse = np.log(np.exp(z).sum(axis=1))
        loss = (lse - z[y]).mean() + 0.5 * reg * np.sum(w * w)
        if not need_grad:
            return np.array([loss])
        p = np.exp(z - lse[:, None])
        p[y] -= 1.0
        p /= n
        return np.array([loss]), x.T @ p + reg * w, p.sum(axis=0)

    return f


def _binary_objective(x, y, reg):
    n = x.shape[0]
    sign = np.where(y, 1.0, -1.0)

    def f(w, b, need_grad=True):
        z = x @ w + b
        loss = np.logaddexp(0.0, -sign * z).mean(axis=0) + 0.5 * reg * np.sum(w * w, axis=0)
        if not need_grad:
            return loss
        # d/dz log(1 + exp(-s z)) = -s * sigmoid(-s z)
        r = -sign * 0.5 * (1.0 + np.tanh(-0.5 * sign * z)) / n
        return loss, x.T @ r + reg * w, r.sum(axis=0)

    return f


def _gradient_descent(f, w, b, groups, tol, max_epochs, armijo=1e-4, max_backtracks=60):
    """Full-batch gradient descent with per-group Armijo backtracking.

    ``groups`` is the number of independent sub-problems: 1 for softmax
    (one shared step size), C for one-vs-rest (one step per label column).
    """
    step = np.ones(groups)
    epochs = 0
    converged = False
    def col(a):
        return a if groups > 1 else np.atleast_1d(a.sum())

    for epochs in range(1, max_epochs + 1):
        loss, gw, gb = f(w, b)
        gnorm2 = col(np.sum(gw * gw, axis=0)) + col(gb * gb)
        active = np.sqrt(gnorm2) > tol
        if not np.any(active):
            converged = True
            epochs -= 1
            break
        pending = active.copy()
        t = step.copy()
        for _ in range(max_backtracks):
            tc = t if groups > 1 else t[0]
            trial_w = w - tc * gw
            trial_b = b - tc * gb
            trial = f(trial_w, trial_b, need_grad=False)
            ok = pending & (trial <= loss - armijo * t * gnorm2)
            if groups > 1:
                w[:, ok] = trial_w[:, ok]
                b[ok] = trial_b[ok]
            elif ok[0]:
                w, b = trial_w, trial_b
            step[ok] = np.minimum(t[ok] * 2.0, 1e6)
            pending &= ~ok
            if not np.any(pending):
                break
            t[pending] *= 0.5
        else:
            # no descent possible at machine precision
            step[pending] = t[pending]
    return w, b, epochs, converged


def fit_classifier(embeddings, labelset: LabelSet, train_ids, reg: float = 1e-4,
                   tol: float = 1e-5, max_epochs: int = 500) -> Classifier:
    """Train an L2-regularized logistic regression from zero initial weights.

    Multiclass labels get a softmax model; multilabel labels get one
    independent binary model per label (one-vs-rest).
    """
    x = np.asarray(embeddings, dtype=np.float64)
    train_ids = np.asarray(train_ids, dtype=np.int64)
    if train_ids.size == 0:
        raise DomainError("no training nodes")
    xt = x[train_ids]
    if not np.all(np.isfinite(xt)):
        raise DomainError("embeddings contain non-finite values")
    c = labelset.num_classes
    w = np.zeros((x.shape[1], c))
    b = np.zeros(c)
    if labelset.kind == MULTICLASS:
        yt = labelset.labels[train_ids]
        missing = np.setdiff1d(np.arange(c), yt)
        if missing.size:
            raise DomainError(f"classes {missing.tolist()} absent from the training set")
        f = _softmax_objective(xt, (np.arange(yt.size), yt), reg)
        w, b, epochs, conv = _gradient_descent(f, w, b, 1, tol, max_epochs)
    else:
        f = _binary_objective(xt, labelset.labels[train_ids], reg)
        w, b, epochs, conv = _gradient_descent(f, w, b, c, tol, max_epochs)
    return Classifier(labelset.kind, w, b, epochs, conv)


def select_labels(scores, kind: str, counts=None) -> np.ndarray:
    """Turn classifier scores into predictions.

    Multiclass: argmax per row, ties to the lowest class id (returns ids).
    Multilabel: the ``counts[i]`` highest-scoring labels of row ``i``, ties to
    the lower label id (returns a boolean indicator matrix).
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    if kind == MULTICLASS:
        return np.argmax(scores, axis=1)
    if counts is None:
        raise DomainError("multilabel prediction needs the per-node label counts")
    counts = np.asarray(counts, dtype=np.int64)
    order = np.argsort(-scores, axis=1, kind="stable")
    pred = np.zeros(scores.shape, dtype=bool)
    for i, k in enumerate(counts):
        pred[i, order[i, :k]] = True
    return pred


def predict(clf: Classifier, embeddings, test_ids, labelset: LabelSet) -> np.ndarray:
    """Predict test-node labels; multilabel uses each node's true label count."""
    if clf.kind != labelset.kind:
        raise DomainError("classifier and label set kinds differ")
    test_ids = np.asarray(test_ids, dtype=np.int64)
    scores = clf.decision_function(np.asarray(embeddings, dtype=np.float64)[test_ids])
    counts = None
    if labelset.kind == MULTILABEL:
        counts = labelset.labels[test_ids].sum(axis=1)
    return select_labels(scores, labelset.kind, counts)


def f1_scores(predictions, truth, kind: str, num_classes: int | None = None):
    """Micro- and macro-F1.

    Multiclass inputs are class-id arrays, multilabel inputs boolean
    indicator matrices. Labels absent from both truth and predictions are
    left out of the macro average.
    """
    if kind == MULTICLASS:
        predictions = np.asarray(predictions, dtype=np.int64)
        truth = np.asarray(truth, dtype=np.int64)
        if num_classes is None:
            num_classes = int(max(predictions.max(initial=-1), truth.max(initial=-1))) + 1
        p = _one_hot(predictions, num_classes)
        t = _one_hot(truth, num_classes)
    elif kind == MULTILABEL:
        p = np.asarray(predictions, dtype=bool)
        t = np.asarray(truth, dtype=bool)
    else:
        raise DomainError(f"unknown label kind {kind!r}")
    if p.shape != t.shape:
        raise DomainError("predictions and truth cover different nodes or labels")
    if t.shape[0] == 0:
        raise DomainError("empty test set")
    tp = np.sum(p & t, axis=0).astype(np.float64)
    fp = np.sum(p & ~t, axis=0).astype(np.float64)
    fn = np.sum(~p & t, axis=0).astype(np.float64)
    denom = 2 * tp.sum() + fp.sum() + fn.sum()
    micro = 2 * tp.sum() / denom if denom > 0 else 0.0
    present = (tp + fp + fn) > 0
    per_label = 2 * tp[present] / (2 * tp[present] + fp[present] + fn[present])
    macro = float(per_label.mean()) if per_label.size else 0.0
    return float(micro), macro


@dataclass
class Stat:
    mean: float
    std: float


@dataclass
class EvalReport:
    micro_f1: Stat
    macro_f1: Stat
    trials: int
    train_ratio: float
    inference_time_sec: float = 0.0
    per_trial: list = field(default_factory=list)

    def to_json(self, **kwargs) -> str:
        return json.dumps(asdict(self), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        d = dict(d)
        d["micro_f1"] = Stat(**d["micro_f1"])
        d["macro_f1"] = Stat(**d["macro_f1"])
        d["per_trial"] = [tuple(t) for t in d["per_trial"]]
        return cls(**d)


def trial_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _one_trial(x, labelset, train_ratio, seed, reg):
    train, test = split(labelset, train_ratio, seed)
    clf = fit_classifier(x, labelset, train, reg=reg)
    pred = predict(clf, x, test, labelset)
    return f1_scores(pred, labelset.labels[test], labelset.kind, labelset.num_classes)


def run_protocol(embeddings, labelset: LabelSet, trials: int = 10,
                 train_ratio: float = 0.2, seed: int = 0, reg: float = 1e-4,
                 inference_time: float = 0.0, n_jobs: int = 1) -> EvalReport:
    """Repeat split -> fit -> predict -> F1 over ``trials`` seeded splits.

    Per-trial seeds are spawned from ``seed``, so the report does not depend
    on ``n_jobs``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    x = np.asarray(embeddings, dtype=np.float64)
    if x.shape[0] != labelset.n:
        raise DomainError(f"{x.shape[0]} embedding rows but {labelset.n} labeled rows")
    seeds = trial_seeds(seed, trials)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(
                lambda s: _one_trial(x, labelset, train_ratio, s, reg), seeds))
    else:
        results = [_one_trial(x, labelset, train_ratio, s, reg) for s in seeds]
    arr = np.asarray(results)
    return EvalReport(
        micro_f1=Stat(float(arr[:, 0].mean()), float(arr[:, 0].std())),
        macro_f1=Stat(float(arr[:, 1].mean()), float(arr[:, 1].std())),
        trials=trials, train_ratio=train_ratio,
        inference_time_sec=float(inference_time),
        per_trial=[tuple(map(float, r)) for r in results],
    )


def ntos(times, qualities):
    """Normalized trade-off score per method.

    ``((t_max - t) / (t_max - t_min)) * ((q - q_min) / (q_max - q_min))``;
    1 for a method that is both fastest and best, 0 for the slowest or the
    worst. Accepts sequences (returns an array) or dicts keyed by method
    (returns a dict).
    """
    if isinstance(times, dict):
        if set(times) != set(qualities):
            raise DomainError("times and qualities name different methods")
        names = list(times)
        scores = ntos([times[k] for k in names], [qualities[k] for k in names])
        return dict(zip(names, scores.tolist()))
    t = np.asarray(times, dtype=np.float64)
    q = np.asarray(qualities, dtype=np.float64)
    if t.shape != q.shape or t.ndim != 1:
        raise DomainError("times and qualities must be equal-length sequences")
    if t.size < 2:
        raise DomainError("NToS needs at least two methods")
    if t.max() == t.min() or q.max() == q.min():
        raise DomainError("NToS undefined when all times or all qualities are equal")
    speed = (t.max() - t) / (t.max() - t.min())
    quality = (q - q.min()) / (q.max() - q.min())
    return speed * quality
