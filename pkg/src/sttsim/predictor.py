"""CART core predictor: Gini-split decision tree over profiled features.

The estimator follows the scikit-learn protocol (fit/predict, get_params/
set_params) so it drops into standard tooling, but the tree itself is built
here: greedy binary splits over midpoint thresholds, scored by weighted Gini
impurity, fully deterministic under fixed tie-breaking.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .config import System
from .constraints import Constraint
from .engine import PowerModel, exhaustive_sweep
from .features import FeatureVector
from .trace import Trace


def gini(class_counts) -> float:
    """Impurity 1 - sum(p_i^2) of a count vector."""
    counts = list(class_counts)
    if any(c < 0 for c in counts):
        raise ValueError(f"counts must be non-negative, got {counts}")
    total = sum(counts)
    if total <= 0:
        raise ValueError("counts sum to zero")
    return 1.0 - sum((c / total) ** 2 for c in counts)


class _Leaf:
    __slots__ = ("label", "counts")

    def __init__(self, label, counts):
        self.label = label
        self.counts = counts  # dict label -> training rows routed here


class _Split:
    __slots__ = ("feature", "threshold", "left", "right", "counts")

    def __init__(self, feature, threshold, left, right, counts):
        self.feature = feature  # column index
        self.threshold = threshold
        self.left = left  # x[feature] <= threshold
        self.right = right
        self.counts = counts


class CorePredictor:
    """Decision-tree classifier mapping feature vectors to core labels.

    Parameters mirror common tree estimators: `max_depth` bounds the tree,
    `min_samples_leaf` keeps degenerate splits out. `feature_names` names the
    input columns; `label_order` fixes the class universe and the tie-break
    order used by predictions and rankings (lower index wins ties).
    """

    def __init__(self, max_depth=5, min_samples_leaf=1, feature_names=None,
                 label_order=None):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.feature_names = feature_names
        self.label_order = label_order

    # -- sklearn parameter protocol -----------------------------------------

    def get_params(self, deep=True):
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "feature_names": self.feature_names,
            "label_order": self.label_order,
        }

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    # -- fitting -------------------------------------------------------------

    def fit(self, X, y):
        X, y = self._validate_training(X, y)
        order = list(self.label_order) if self.label_order else sorted(set(y))
        missing = set(y) - set(order)
        if missing:
            raise ValueError(f"labels {sorted(missing)} not in label_order")
        self.classes_ = tuple(order)
        self._rank = {lab: i for i, lab in enumerate(order)}
        self.n_features_in_ = len(X[0])
        self.feature_importances_ = [0.0] * self.n_features_in_
        self.root_ = self._build(X, y, list(range(len(y))), depth=0)
        return self

    def _validate_training(self, X, y):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        X = [[float(v) for v in row] for row in X]
        y = [str(lab) for lab in y]
        if not X:
            raise ValueError("training set is empty")
        if len(X) != len(y):
            raise ValueError(f"{len(X)} rows but {len(y)} labels")
        width = len(X[0])
        if width == 0:
            raise ValueError("rows have no features")
        if any(len(r) != width for r in X):
            raise ValueError("ragged feature rows")
        if self.feature_names is not None and len(self.feature_names) != width:
            raise ValueError(
                f"{len(self.feature_names)} feature names for {width} columns")
        return X, y

    def _counts(self, y, idx):
        counts: dict[str, int] = {}
        for i in idx:
            counts[y[i]] = counts.get(y[i], 0) + 1
        return counts

    def _majority(self, counts):
        return min(counts, key=lambda lab: (-counts[lab], self._rank[lab]))

    def _build(self, X, y, idx, depth):
        counts = self._counts(y, idx)
        if len(counts) == 1 or depth >= self.max_depth:
            return _Leaf(self._majority(counts), counts)
        split = self._best_split(X, y, idx, counts)
        if split is None:
            return _Leaf(self._majority(counts), counts)
        feature, threshold, gain = split
        self.feature_importances_[feature] += len(idx) * gain
        left_idx = [i for i in idx if X[i][feature] <= threshold]
        right_idx = [i for i in idx if X[i][feature] > threshold]
        return _Split(feature, threshold,
                      self._build(X, y, left_idx, depth + 1),
                      self._build(X, y, right_idx, depth + 1),
                      counts)

    def _best_split(self, X, y, idx, parent_counts):
        """Lowest weighted child Gini over all feature/midpoint candidates.

        Ties keep the first candidate scanned: lowest feature index, then
        lowest threshold, which pins the tree for identical inputs.
        """
        n = len(idx)
        parent = gini(parent_counts.values())
        labels = sorted(parent_counts, key=self._rank.__getitem__)
        pos = {lab: j for j, lab in enumerate(labels)}
        best = None  # (weighted_gini, feature, threshold, gain)
        for feature in range(self.n_features_in_):
            ordered = sorted(idx, key=lambda i: X[i][feature])
            left = [0] * len(labels)
            right = [parent_counts[lab] for lab in labels]
            n_left = 0
            for a, b in zip(ordered, ordered[1:]):
                j = pos[y[a]]
                left[j] += 1
                right[j] -= 1
                n_left += 1
                va, vb = X[a][feature], X[b][feature]
                if va == vb:
                    continue
                if n_left < self.min_samples_leaf or n - n_left < self.min_samples_leaf:
                    continue
                weighted = (n_left * gini(left) + (n - n_left) * gini(right)) / n
                if best is None or weighted < best[0] - 1e-15:
                    best = (weighted, feature, (va + vb) / 2.0, parent - weighted)
        if best is None or best[3] <= 1e-15:
            return None
        return best[1], best[2], best[3]

    # -- prediction ----------------------------------------------------------

    def _validate_row(self, x):
        if isinstance(x, FeatureVector):
            if self.feature_names is None:
                raise ValueError("estimator has no feature_names; pass a row")
            x = x.row(self.feature_names)
        row = [float(v) for v in x]
        if len(row) != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {len(row)}")
        return row

    def predict_one(self, x) -> str:
        row = self._validate_row(x)
        node = self.root_
        while isinstance(node, _Split):
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node.label

    def predict(self, X) -> list[str]:
        return [self.predict_one(x) for x in X]

    def rank_labels(self, x) -> list[str]:
        """All class labels, most plausible first.

        Starts with the reached leaf's classes by descending count, then
        walks back up adding each ancestor's other-branch classes by
        descending mass (nearest ancestors first); remaining classes follow
        in label order. The first element always equals predict_one(x).
        """
        row = self._validate_row(x)
        node = self.root_
        siblings = []
        while isinstance(node, _Split):
            if row[node.feature] <= node.threshold:
                siblings.append(node.right)
                node = node.left
            else:
                siblings.append(node.left)
                node = node.right
        ranking = sorted(node.counts,
                         key=lambda lab: (-node.counts[lab], self._rank[lab]))
        seen = set(ranking)
        for sib in reversed(siblings):
            counts = sib.counts
            for lab in sorted(counts, key=lambda L: (-counts[L], self._rank[L])):
                if lab not in seen:
                    ranking.append(lab)
                    seen.add(lab)
        for lab in self.classes_:
            if lab not in seen:
                ranking.append(lab)
                seen.add(lab)
        return ranking

    def leaf_count(self) -> int:
        def walk(node):
            if isinstance(node, _Leaf):
                return 1
            return walk(node.left) + walk(node.right)
        return walk(self.root_)

    def depth(self) -> int:
        def walk(node):
            if isinstance(node, _Leaf):
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(self.root_)


@dataclass(frozen=True)
class TrainingSet:
    """Labeled feature vectors plus the provenance needed to reuse them."""

    rows: tuple[tuple[FeatureVector, str], ...]
    constraint: Constraint
    label_order: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self):
        bad = {lab for _, lab in self.rows} - set(self.label_order)
        if bad:
            raise ValueError(f"labels {sorted(bad)} not in label_order")

    def matrix(self, feature_names=None):
        names = feature_names or self.constraint.feature_names
        X = [fv.row(names) for fv, _ in self.rows]
        y = [lab for _, lab in self.rows]
        return X, y

    @property
    def distinct_labels(self) -> int:
        return len({lab for _, lab in self.rows})


def train_tree(data: TrainingSet, max_depth: int = 5,
               min_samples_leaf: int = 1) -> CorePredictor:
    if not data.rows:
        raise ValueError("training set is empty")
    model = CorePredictor(max_depth=max_depth,
                          min_samples_leaf=min_samples_leaf,
                          feature_names=tuple(data.constraint.feature_names),
                          label_order=tuple(data.label_order))
    X, y = data.matrix()
    return model.fit(X, y)


def label_oracle(trace: Trace, system: System, power: PowerModel,
                 constraint: Constraint, limit: int | None = None) -> str:
    """Ground-truth best core: the exhaustive sweep's pick."""
    return exhaustive_sweep(trace, system, power, constraint, limit=limit).best_core


def select_features(data: TrainingSet, k: int,
                    candidate_names=None) -> tuple[str, ...]:
    """Top-k features by total Gini-impurity decrease in a tree trained on
    all candidates. Deterministic; k above the candidate count clamps with a
    warning."""
    if k < 1:
        raise ValueError("k must be >= 1")
    names = tuple(candidate_names or FeatureVector.names())
    if k > len(names):
        warnings.warn(f"k={k} exceeds {len(names)} available features; clamping")
        k = len(names)
    model = CorePredictor(max_depth=16, min_samples_leaf=1,
                          feature_names=names,
                          label_order=tuple(data.label_order))
    X, y = data.matrix(feature_names=names)
    model.fit(X, y)
    ranked = sorted(range(len(names)),
                    key=lambda i: (-model.feature_importances_[i], i))
    return tuple(names[i] for i in ranked[:k])


# -- model files -------------------------------------------------------------

FORMAT_TAG = "sttsim-tree"
FORMAT_VERSION = 1


def dump_tree(model: CorePredictor, constraint: Constraint) -> str:
    """Versioned plain-text serialization; exact round-trip via load_tree."""
    lines = [
        f"{FORMAT_TAG} v{FORMAT_VERSION}",
        f"constraint {constraint.kind}",
        f"hyper max_depth={model.max_depth} min_samples_leaf={model.min_samples_leaf}",
        "features " + " ".join(model.feature_names),
        "labels " + " ".join(model.classes_),
    ]

    def walk(node):
        if isinstance(node, _Leaf):
            counts = ",".join(f"{lab}={node.counts[lab]}"
                              for lab in sorted(node.counts,
                                                key=model._rank.__getitem__))
            lines.append(f"node leaf {node.label} {counts}")
        else:
            lines.append(
                f"node split {model.feature_names[node.feature]} {node.threshold!r}")
            walk(node.left)
            walk(node.right)

    walk(model.root_)
    return "\n".join(lines) + "\n"


def load_tree(text: str) -> tuple[CorePredictor, Constraint]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(f"{FORMAT_TAG} v"):
        raise ValueError("not a model file")
    version = lines[0].split("v", 1)[1]
    if int(version) != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {version}")
    header = {}
    body_at = len(lines)
    for i, ln in enumerate(lines[1:], start=1):
        key, _, rest = ln.partition(" ")
        if key == "node":
            body_at = i
            break
        header[key] = rest
    constraint = Constraint(header["constraint"])
    feature_names = tuple(header["features"].split())
    labels = tuple(header["labels"].split())
    hyper = dict(kv.split("=") for kv in header["hyper"].split())

    model = CorePredictor(max_depth=int(hyper["max_depth"]),
                          min_samples_leaf=int(hyper["min_samples_leaf"]),
                          feature_names=feature_names, label_order=labels)
    model.classes_ = labels
    model._rank = {lab: i for i, lab in enumerate(labels)}
    model.n_features_in_ = len(feature_names)
    model.feature_importances_ = [0.0] * len(feature_names)
    col = {name: i for i, name in enumerate(feature_names)}

    pos = body_at

    def parse_node():
        nonlocal pos
        if pos >= len(lines):
            raise ValueError("model file truncated")
        parts = lines[pos].split()
        pos += 1
        if parts[:2] == ["node", "leaf"]:
            label = parts[2]
            counts = {}
            for kv in parts[3].split(","):
                lab, _, c = kv.partition("=")
                counts[lab] = int(c)
            return _Leaf(label, counts)
        if parts[:2] == ["node", "split"]:
            feature, threshold = parts[2], float(parts[3])
            left = parse_node()
            right = parse_node()
            counts = {}
            for child in (left, right):
                for lab, c in child.counts.items():
                    counts[lab] = counts.get(lab, 0) + c
            return _Split(col[feature], threshold, left, right, counts)
        raise ValueError(f"bad node line: {lines[pos - 1]!r}")

    model.root_ = parse_node()
    if pos != len(lines):
        raise ValueError("trailing content after tree")
    return model, constraint


def save_model(model: CorePredictor, constraint: Constraint, path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_tree(model, constraint))


def load_model(path) -> tuple[CorePredictor, Constraint]:
    with open(path) as fh:
        return load_tree(fh.read())
