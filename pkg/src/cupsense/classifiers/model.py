from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..circuit import label_sort_key
from ..spectrum import FeatureKind
from ..features import (FeatureMatrix, StandardizationStats, standardize_array,
                        standardize_fit)
from . import forest as _forest
from . import mlp as _mlp
from .forest import ForestHyper, Tree
from .mlp import MlpHyper, Network

MODEL_FORMAT = "cupsense.model"
MODEL_VERSION = 1


@dataclass(eq=False)
class TrainedModel:
    kind: str                                   # "forest" or "mlp"
    classes: tuple
    col_meta: tuple
    hyper: dict
    stats: Optional[StandardizationStats] = None
    trees: list = field(default_factory=list)
    network: Optional[Network] = None
    meta: dict = field(default_factory=dict)    # feature config, split seed, ...

    @property
    def n_features(self) -> int:
        return len(self.col_meta)

    def _prepare(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X if self.stats is None else standardize_array(self.stats, X)

    def predict_proba(self, X) -> np.ndarray:
        X = self._prepare(X)
        if self.kind == "forest":
            return _forest.forest_vote_fractions(self.trees, X, len(self.classes))
        return _mlp.predict_proba(self.network, X)

    def predict_labels(self, X) -> list[str]:
        # argmax -> earliest class in ``classes`` on ties
        return [self.classes[i] for i in np.argmax(self.predict_proba(X), axis=1)]

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "format": MODEL_FORMAT, "version": MODEL_VERSION, "type": self.kind,
            "classes": list(self.classes),
            "columns": [[k.value, f] for k, f in self.col_meta],
            "hyper": self.hyper, "meta": self.meta,
            "stats": None if self.stats is None else self.stats.to_dict(),
        }
        if self.kind == "forest":
            d["trees"] = [t.to_dict() for t in self.trees]
        else:
            d["layers"] = [{"weights": W.tolist(), "biases": b.tolist()}
                           for W, b in zip(self.network.weights, self.network.biases)]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a model document")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        stats = None if d.get("stats") is None else StandardizationStats.from_dict(d["stats"])
        cols = tuple((FeatureKind(k), float(f)) for k, f in d["columns"])
        m = cls(d["type"], tuple(d["classes"]), cols, d["hyper"], stats, meta=d.get("meta", {}))
        if m.kind == "forest":
            m.trees = [Tree.from_dict(t) for t in d["trees"]]
        elif m.kind == "mlp":
            m.network = Network([np.asarray(l["weights"], dtype=float) for l in d["layers"]],
                                [np.asarray(l["biases"], dtype=float) for l in d["layers"]])
        else:
            raise ValueError(f"unknown model type {m.kind!r}")
        return m

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def class_order(labels) -> tuple:
    return tuple(sorted(set(labels), key=label_sort_key))


def _encode(labels, classes) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    return np.array([index[l] for l in labels], dtype=int)


def stratified_split_indices(labels, test_fraction: float, seed: int = 0):
    """Per-class shuffled split; each class keeps >= 1 row on both sides."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    labels = list(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in class_order(labels):
        rows = np.array([i for i, l in enumerate(labels) if l == c])
        if rows.size < 2:
            raise ValueError(f"class {c!r} has {rows.size} row(s); need at least 2 to split")
        n_test = int(np.floor(rows.size * test_fraction + 0.5))
        n_test = min(max(n_test, 1), rows.size - 1)
        rows = rng.permutation(rows)
        test.extend(rows[:n_test].tolist())
        train.extend(rows[n_test:].tolist())
    return np.array(sorted(train), dtype=int), np.array(sorted(test), dtype=int)


def stratified_split(fm: FeatureMatrix, test_fraction: float = 0.3, seed: int = 0):
    train, test = stratified_split_indices(fm.labels, test_fraction, seed)
    return fm.rows(train), fm.rows(test)


def _check_train(train: FeatureMatrix):
    if train.X.shape[0] == 0:
        raise ValueError("empty training set")
    classes = class_order(train.labels)
    if len(classes) < 2:
        raise ValueError("need at least two classes to train")
    return classes


def train_forest(train: FeatureMatrix, hyper: ForestHyper | None = None,
                 meta: dict | None = None) -> TrainedModel:
    hyper = hyper or ForestHyper()
    classes = _check_train(train)
    stats = standardize_fit(train) if hyper.standardize else None
    X = train.X if stats is None else standardize_array(stats, train.X)
    trees = _forest.fit_forest(X, _encode(train.labels, classes), len(classes), hyper)
    hd = hyper.to_dict()
    hd["features_per_split"] = hyper.resolved_features(X.shape[1])
    return TrainedModel("forest", classes, train.col_meta, hd, stats, trees=trees,
                        meta=dict(meta or {}))


def train_mlp(train: FeatureMatrix, hyper: MlpHyper | None = None,
              meta: dict | None = None, history: list | None = None) -> TrainedModel:
    hyper = hyper or MlpHyper()
    classes = _check_train(train)
    stats = standardize_fit(train)
    X = standardize_array(stats, train.X)
    net = _mlp.train_network(X, _encode(train.labels, classes), len(classes), hyper, history)
    return TrainedModel("mlp", classes, train.col_meta, hyper.to_dict(), stats, network=net,
                        meta=dict(meta or {}))


def predict(m: TrainedModel, x) -> tuple[str, np.ndarray]:
    """Label and class-probability vector for a single feature row."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature row")
    p = m.predict_proba(x[None, :])[0]
    return m.classes[int(np.argmax(p))], p


def mlp_loss_gradients(m: TrainedModel, X, labels):
    """Mean cross-entropy gradients of ``m`` on raw (unstandardized) rows."""
    X = m._prepare(X)
    _, dW, db = _mlp.loss_gradients(m.network, X, _encode(labels, m.classes))
    return dW, db


@dataclass
class EvalReport:
    classes: tuple
    accuracy: float
    confusion: np.ndarray      # rows: true class, cols: predicted class
    precision: np.ndarray
    recall: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "classes": list(self.classes),
                "confusion": self.confusion.astype(int).tolist(),
                "precision": self.precision.tolist(), "recall": self.recall.tolist(),
                "meta": self.meta}


def report_from_predictions(classes, true_labels, predicted_labels, meta=None) -> EvalReport:
    if len(true_labels) == 0:
        raise ValueError("empty test set")
    classes = tuple(classes)
    unknown = sorted(set(true_labels) - set(classes), key=label_sort_key)
    if unknown:
        raise ValueError(f"test labels not known to the model: {unknown}")
    cm = np.zeros((len(classes), len(classes)), dtype=int)
    t = _encode(true_labels, classes)
    p = _encode(predicted_labels, classes)
    np.add.at(cm, (t, p), 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.nan_to_num(np.diag(cm) / cm.sum(axis=0))
        recall = np.nan_to_num(np.diag(cm) / cm.sum(axis=1))
    return EvalReport(classes, float(np.trace(cm) / cm.sum()), cm, precision, recall,
                      dict(meta or {}))


def evaluate(m: TrainedModel, test: FeatureMatrix) -> EvalReport:
    if test.X.shape[0] == 0:
        raise ValueError("empty test set")
    meta = {"model": m.kind, "hyper": m.hyper, **m.meta}
    return report_from_predictions(m.classes, test.labels, m.predict_labels(test.X), meta)
