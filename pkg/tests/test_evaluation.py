import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.metrics import accuracy_score, f1_score

from offdetect.corpus import Dataset, Example
from offdetect.evaluation import (
    DEFAULT_GRIDS,
    EvaluationError,
    accuracy,
    confusion,
    cross_validate,
    evaluate,
    expand_grid,
    grid_search,
    holdout,
    macro_f1,
    per_class_f1,
)
from offdetect.pipeline import build_pipeline, hyperparameter_names


class Constant(ClassifierMixin, BaseEstimator):
    def __init__(self, label="OFF"):
        self.label = label

    def fit(self, X, y):
        self.classes_ = np.unique(y)
        return self

    def predict(self, X):
        return np.array([self.label] * len(X))


class Majority(ClassifierMixin, BaseEstimator):
    def fit(self, X, y):
        values, counts = np.unique(y, return_counts=True)
        self.label_ = values[counts.argmax()]
        return self

    def predict(self, X):
        return np.array([self.label_] * len(X))


class Exploding(Constant):
    def fit(self, X, y):
        raise RuntimeError("boom")


def dataset(labels):
    return Dataset(tuple(Example(f"e{i}", f"text {i}", lab, None, None)
                         for i, lab in enumerate(labels)), "A")


def test_confusion_fixture():
    c = confusion(["OFF", "NOT", "OFF", "NOT"], ["OFF", "OFF", "OFF", "NOT"], ("OFF", "NOT"))
    assert c["OFF"] == {"tp": 2, "fp": 1, "fn": 0, "tn": 1}
    assert c["NOT"] == {"tp": 1, "fp": 0, "fn": 1, "tn": 2}
    f1 = per_class_f1(c)
    assert f1["OFF"] == pytest.approx(0.8) and f1["NOT"] == pytest.approx(2 / 3)


def test_single_example_confusion():
    c = confusion(["OFF"], ["NOT"], ("OFF", "NOT"))
    assert c["OFF"]["fn"] == 1 and c["NOT"]["fp"] == 1
    assert c["OFF"]["tp"] == c["NOT"]["tp"] == 0


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion(["OFF"], ["OFF", "NOT"], ("OFF", "NOT"))
    with pytest.raises(ValueError):
        confusion(["OFF"], ["MEH"], ("OFF", "NOT"))
    with pytest.raises(ValueError):
        accuracy([], [])


def test_missing_class_drags_macro_down():
    c = confusion(["A", "B", "C"], ["A", "B", "B"], ("A", "B", "C"))
    assert per_class_f1(c)["C"] == 0.0
    assert macro_f1(c) < 1.0


def test_absent_class_counts_as_zero():
    c = confusion(["OFF", "OFF"], ["OFF", "OFF"], ("OFF", "NOT"))
    assert macro_f1(c) == 0.5


def test_accuracy_values():
    assert accuracy(list("abcd"), list("abce")) == 0.75
    assert accuracy(list("ab"), list("ab")) == 1.0
    assert accuracy(list("ab"), list("ba")) == 0.0


labels = st.sampled_from(["IND", "GRP", "OTH"])


@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=40))
def test_metrics_match_sklearn(pairs):
    y_true = [t for t, _ in pairs]
    y_pred = [p for _, p in pairs]
    classes = ("IND", "GRP", "OTH")
    report = evaluate(y_true, y_pred, classes)
    want = f1_score(y_true, y_pred, labels=list(classes), average="macro", zero_division=0)
    assert abs(report.macro_f1 - want) <= 1e-12
    assert report.accuracy == accuracy_score(y_true, y_pred)
    assert 0.0 <= report.macro_f1 <= 1.0


def test_constant_predictor_cv():
    ds = dataset(["OFF", "NOT"] * 50)
    report = cross_validate(Constant(), ds, k=5, seed=0)
    assert len(report.per_fold) == 5
    assert all(r.n == 20 and r.accuracy == 0.5 for r in report.per_fold)
    assert report.mean_accuracy == 0.5
    assert abs(report.mean_macro_f1 - np.mean([r.macro_f1 for r in report.per_fold])) <= 1e-12


def test_cv_failure_names_the_fold():
    with pytest.raises(EvaluationError, match="fold 1/3"):
        cross_validate(Exploding(), dataset(["OFF", "NOT"] * 6), k=3)


def test_cv_clones_per_fold():
    report = cross_validate(Majority(), dataset(["OFF"] * 8 + ["NOT"] * 4), k=4,
                            return_estimators=True)
    assert len({id(e) for e in report.estimators}) == 4


def test_holdout_report():
    ds = dataset(["OFF"] * 30 + ["NOT"] * 70)
    report = holdout(Majority(), ds, 0.8, seed=1)
    assert report.n == 20 and report.accuracy == pytest.approx(0.7)


def test_grid_search_prefers_higher_mean():
    ds = dataset(["OFF"] * 10 + ["NOT"] * 30)
    factories = {"constant": lambda: Constant("OFF"), "majority": Majority}
    result = grid_search(lambda cfg: factories[cfg["kind"]](), [{"kind": "constant"},
                                                                 {"kind": "majority"}], ds, k=5)
    # per fold 2 OFF / 6 NOT. constant OFF: F1(OFF)=4/10 -> 0.2; majority NOT: F1(NOT)=12/14 -> 3/7
    assert result.best_config == {"kind": "majority"}
    assert result.best_score == pytest.approx(3 / 7)
    assert result.all[0][1] == pytest.approx(0.2)
    assert result.best_score == max(score for _, score in result.all)


def test_grid_search_ties_and_errors():
    ds = dataset(["OFF", "NOT"] * 10)
    result = grid_search(lambda cfg: Majority(), [{"id": 1}, {"id": 2}], ds, k=2)
    assert result.best_config == {"id": 1}
    single = grid_search(lambda cfg: Majority(), [{"id": 9}], ds, k=2)
    assert single.best_config == {"id": 9}
    with pytest.raises(ValueError):
        grid_search(lambda cfg: Majority(), [], ds, k=2)
    with pytest.raises(EvaluationError, match="'id': 3"):
        grid_search(lambda cfg: Exploding(), [{"id": 3}], ds, k=2)


def test_expand_grid_order():
    grid = expand_grid({"a": [1, 2], "b": ["x", "y"]})
    assert grid == [{"a": 1, "b": "x"}, {"a": 1, "b": "y"}, {"a": 2, "b": "x"},
                    {"a": 2, "b": "y"}]


def test_default_grids_use_known_hyperparameters():
    for kind, grid in DEFAULT_GRIDS.items():
        assert set(grid) <= set(hyperparameter_names(kind))


def test_augmentation_touches_training_folds_only():
    examples = [Example(f"t{i}", f"targeted {i}", "OFF", "TIN", None) for i in range(16)]
    examples += [Example(f"u{i}", f"untargeted {i}", "OFF", "UNT", None) for i in range(4)]
    ds = Dataset(tuple(examples), "B")
    report = cross_validate(build_pipeline("logreg", epochs=2), ds, k=4, augment=1.0,
                            return_estimators=True)
    assert sum(r.n for r in report.per_fold) == len(ds)
    for est in report.estimators:
        terms = est.named_steps["features"].model_.n_docs
        assert terms == 12 + 12  # 12 TIN training rows balanced by synthetic UNT rows
