"""Macro-F1/accuracy, hold-out and k-fold protocols, and grid search."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from sklearn.base import clone

from .corpus import Dataset, augment_minority, make_folds, split_holdout

__all__ = [
    "ConfusionCounts",
    "EvalReport",
    "CvReport",
    "GridResult",
    "EvaluationError",
    "confusion",
    "macro_f1",
    "accuracy",
    "evaluate",
    "holdout",
    "cross_validate",
    "grid_search",
    "DEFAULT_GRIDS",
    "expand_grid",
]


class EvaluationError(RuntimeError):
    """A trainer failed inside an evaluation protocol."""


@dataclass(frozen=True)
class ConfusionCounts:
    classes: tuple
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    def __getitem__(self, label):
        i = self.classes.index(label)
        return {"tp": int(self.tp[i]), "fp": int(self.fp[i]),
                "fn": int(self.fn[i]), "tn": int(self.tn[i])}


@dataclass(frozen=True)
class EvalReport:
    macro_f1: float
    accuracy: float
    per_class_f1: dict
    n: int


@dataclass(frozen=True)
class CvReport:
    per_fold: list
    mean_macro_f1: float
    mean_accuracy: float
    estimators: Optional[list] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class GridResult:
    best_config: dict
    best_score: float
    all: list


def confusion(y_true, y_pred, classes) -> ConfusionCounts:
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    if not y_true:
        raise ValueError("no labels to compare")
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    for lab in set(y_true) | set(y_pred):
        if lab not in index:
            raise ValueError(f"label {lab!r} is not in the class list {classes}")
    t = np.array([index[v] for v in y_true])
    p = np.array([index[v] for v in y_pred])
    k = len(classes)
    tp = np.bincount(t[t == p], minlength=k)
    fp = np.bincount(p, minlength=k) - tp
    fn = np.bincount(t, minlength=k) - tp
    tn = len(t) - tp - fp - fn
    return ConfusionCounts(classes, tp, fp, fn, tn)


def _ratio(num, den):
    return num / den if den else 0.0


def per_class_f1(c: ConfusionCounts) -> dict:
    out = {}
    for i, label in enumerate(c.classes):
        precision = _ratio(c.tp[i], c.tp[i] + c.fp[i])
        recall = _ratio(c.tp[i], c.tp[i] + c.fn[i])
        out[label] = _ratio(2 * precision * recall, precision + recall)
    return out


def macro_f1(c: ConfusionCounts) -> float:
    """Unweighted mean F1 over every listed class; 0/0 counts as 0."""
    scores = per_class_f1(c)
    return float(sum(scores.values()) / len(scores))


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError("length mismatch")
    if not y_true:
        raise ValueError("accuracy of an empty prediction set is undefined")
    return sum(a == b for a, b in zip(y_true, y_pred)) / len(y_true)


def evaluate(y_true, y_pred, classes) -> EvalReport:
    c = confusion(y_true, y_pred, classes)
    return EvalReport(macro_f1(c), accuracy(y_true, y_pred), per_class_f1(c), len(list(y_true)))


def _fit_and_score(estimator, train: Dataset, val: Dataset, augment, seed):
    if augment is not None:
        train = augment_minority(train, augment, seed)
    fitted = clone(estimator).fit(train.texts(), train.labels())
    pred = [str(v) for v in fitted.predict(val.texts())]
    return fitted, evaluate(val.labels(), pred, val.classes)


def holdout(estimator, ds: Dataset, train_fraction=0.8, seed=0,
            augment: Optional[float] = None) -> EvalReport:
    """Stratified single split; augmentation (a target ratio) touches train only."""
    train, val = split_holdout(ds, train_fraction, seed)
    return _fit_and_score(estimator, train, val, augment, seed)[1]


def cross_validate(estimator, ds: Dataset, k: int = 5, seed: int = 0,
                   augment: Optional[float] = None, return_estimators=False) -> CvReport:
    """Stratified k-fold cross-validation of an unfitted estimator.

    ``estimator`` maps raw tweet texts to labels (e.g. a pipeline that
    builds its own vocabulary); it is cloned per fold, so nothing fitted on
    one rotation carries into the next and validation text never reaches
    ``fit``. ``augment`` is a minority target ratio applied to the training
    folds only.
    """
    plan = make_folds(ds, k, seed)
    reports, fitted_all = [], []
    for fold in range(k):
        train_idx, val_idx = plan.split(fold)
        try:
            fitted, report = _fit_and_score(
                estimator, ds.subset(train_idx), ds.subset(val_idx), augment, seed + fold
            )
        except Exception as exc:
            raise EvaluationError(f"fold {fold + 1}/{k} failed: {exc}") from exc
        reports.append(report)
        if return_estimators:
            fitted_all.append(fitted)
    return CvReport(
        reports,
        float(np.mean([r.macro_f1 for r in reports])),
        float(np.mean([r.accuracy for r in reports])),
        fitted_all if return_estimators else None,
    )


def grid_search(factory: Callable[[dict], object], grid: Sequence[Mapping], ds: Dataset,
                k: int = 5, seed: int = 0, augment: Optional[float] = None) -> GridResult:
    """Cross-validate every config on the same folds; the first best wins."""
    grid = [dict(cfg) for cfg in grid]
    if not grid:
        raise ValueError("parameter grid is empty")
    scores = []
    for cfg in grid:
        try:
            report = cross_validate(factory(cfg), ds, k, seed, augment)
        except Exception as exc:
            raise EvaluationError(f"config {cfg} failed: {exc}") from exc
        scores.append((cfg, report.mean_macro_f1))
    best = max(range(len(scores)), key=lambda i: (scores[i][1], -i))
    return GridResult(scores[best][0], scores[best][1], scores)


def expand_grid(axes: Mapping[str, Sequence]) -> list:
    """Cartesian product of list-valued entries; the first key varies slowest."""
    configs = [{}]
    for key, values in axes.items():
        configs = [dict(cfg, **{key: v}) for cfg in configs for v in values]
    return configs


DEFAULT_GRIDS = {
    "cnn": {"learning_rate": [0.1, 0.5], "dropout_rate": [0.3, 0.5], "n_filters": [32, 64]},
    "lstm": {"learning_rate": [0.5, 1.0], "epochs": [10, 20]},
    "gru": {"learning_rate": [0.5, 1.0], "epochs": [10, 20]},
    "logreg": {"l2": [1e-4, 1e-2]},
    "svm": {"c": [0.1, 1.0, 10.0]},
    "forest": {"n_trees": [50, 100], "max_depth": [10, None]},
}
