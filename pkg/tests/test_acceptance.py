"""One test per acceptance criterion (some criteria have several parts).

Criteria 8 and 9 need the public OLID training file. Point
``OFFDETECT_OLID_TRAIN`` at ``olid-training-v1.0.tsv`` (or place it at
``data/olid-training-v1.0.tsv`` in the repository) to run them; without it
criterion 8 runs its synthetic-corpus fallback and criterion 9 is skipped.
"""

import io
import os
import time
from pathlib import Path

import numpy as np
import pytest
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.pipeline import Pipeline

from oracles import tfidf_bruteforce
from offdetect.classical import DecisionTree, train_linear_svm, train_logreg
from offdetect.cli import main
from offdetect.config import RunConfig
from offdetect.corpus import (
    Dataset,
    Example,
    load_olid_tsv,
    make_folds,
    make_synthetic_dataset,
)
from offdetect.evaluation import confusion, cross_validate, holdout, macro_f1
from offdetect.features import fit_tfidf, transform_tfidf
from offdetect.neural import CNNClassifier, grad_check
from offdetect.persistence import load_model, save_model
from offdetect.pipeline import MODEL_KINDS, build_pipeline
from offdetect.porter import stem_porter
from offdetect.preprocess import OOV_INDEX, SequenceEncoder, TweetPreprocessor

HERE = Path(__file__).parent


def olid_path():
    candidates = [os.environ.get("OFFDETECT_OLID_TRAIN"),
                  HERE.parent / "data" / "olid-training-v1.0.tsv"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


needs_olid = pytest.mark.skipif(olid_path() is None, reason="OLID training file not available")


class Majority(ClassifierMixin, BaseEstimator):
    def fit(self, X, y):
        values, counts = np.unique(y, return_counts=True)
        self.label_ = values[counts.argmax()]
        return self

    def predict(self, X):
        return np.array([self.label_] * len(X))


# 1. gradient oracle

def test_criterion_1_gradient_oracle():
    start = time.perf_counter()
    errors = {(kind, seed): grad_check(kind, seed=seed, step=1e-5)
              for kind in ("cnn", "lstm", "gru") for seed in (0, 1, 2)}
    elapsed = time.perf_counter() - start
    worst = max(errors, key=errors.get)
    assert errors[worst] < 1e-5, f"{worst}: relative error {errors[worst]:.3e}"
    assert elapsed < 60.0


# 2. TF-IDF oracle equivalence

def test_criterion_2_tfidf_oracle():
    rng = np.random.default_rng(2024)
    vocab = [f"tok{i}" for i in range(50)]
    lists = [[vocab[j] for j in rng.integers(50, size=rng.integers(0, 21))] for _ in range(200)]
    model = fit_tfidf(lists)
    names = {col: term for term, col in model.terms.items()}
    probes = lists + [[vocab[j] for j in rng.integers(50, size=rng.integers(0, 21))]
                      for _ in range(200)]
    for tokens in probes:
        got = {names[c]: v for c, v in transform_tfidf(model, tokens).as_dict().items()}
        want = tfidf_bruteforce(lists, tokens)
        assert got.keys() == want.keys()
        for term, value in want.items():
            assert abs(got[term] - value) <= 1e-12


# 3. Porter stemmer suite

def test_criterion_3_porter_suite():
    lines = (HERE / "data" / "porter_100.tsv").read_text(encoding="utf-8").splitlines()
    pairs = [line.split("\t") for line in lines if line and not line.startswith("#")]
    assert len(pairs) == 100
    wrong = [(w, s, stem_porter(w)) for w, s in pairs if stem_porter(w) != s]
    assert not wrong, f"{100 - len(wrong)}/100 correct; first mismatches {wrong[:5]}"


# 4. metric fixtures

def test_criterion_4_metric_fixtures():
    classes = ("OFF", "NOT")
    hand = macro_f1(confusion(["OFF", "NOT", "OFF", "NOT"], ["OFF", "OFF", "OFF", "NOT"], classes))
    assert abs(hand - 0.7333333333333333) <= 1e-12
    truth = ["OFF", "NOT", "NOT", "OFF", "NOT"]
    assert macro_f1(confusion(truth, truth, classes)) == 1.0
    flipped = ["NOT" if t == "OFF" else "OFF" for t in truth]
    assert macro_f1(confusion(truth, flipped, classes)) == 0.0


# 5. toy learnability

def _timed(fn):
    start = time.perf_counter()
    value = fn()
    assert time.perf_counter() - start < 10.0
    return value


def _clusters():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal((5, 5), 0.5, size=(5, 2)), rng.normal((-5, -5), 0.5, size=(5, 2))])
    return X, np.repeat([0, 1], 5)


def test_criterion_5_linear_models_on_clusters():
    X, y = _clusters()
    for train in (train_logreg, train_linear_svm):
        model = _timed(lambda: train(X, y))
        assert (model.predict(X) == y).mean() == 1.0


def test_criterion_5_tree_on_xor():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    tree = _timed(lambda: DecisionTree(max_depth=2).fit(X, y))
    assert (tree.predict(X) == y).mean() == 1.0


def test_criterion_5_cnn_marker_task():
    rng = np.random.default_rng(0)
    X = rng.integers(2, 12, size=(20, 6))
    y = np.arange(20) % 2
    X[y == 1, rng.integers(6, size=10)] = 12  # class 1 <=> marker token 12 present
    est = _timed(lambda: CNNClassifier(epochs=30, batch_size=4, random_state=0).fit(X, y))
    assert (est.predict(X) == y).mean() == 1.0


# 6. leakage sentinel

class RecordingEncoder(SequenceEncoder):
    """SequenceEncoder that logs every transform call."""

    calls = []

    def transform(self, X):
        out = super().transform(X)
        RecordingEncoder.calls.append((self.vocabulary_, list(X), out))
        return out


def test_criterion_6_leakage_sentinel():
    base = make_synthetic_dataset(n=60, seed=3)
    sentinel = "qqsentinelqq"
    examples = list(base.examples)
    target = 17
    ex = examples[target]
    examples[target] = Example(ex.id, ex.raw_text + " " + sentinel, ex.label_a, None, None)
    ds = Dataset(tuple(examples), "A")
    plan = make_folds(ds, 5, seed=0)
    held_out_in = [f for f in range(5) if target in plan.split(f)[1]]
    assert len(held_out_in) == 1

    RecordingEncoder.calls = []
    pipe = Pipeline([("prep", TweetPreprocessor()), ("features", RecordingEncoder()),
                     ("clf", CNNClassifier(embed_dim=8, n_filters=4, epochs=1))])
    report = cross_validate(pipe, ds, k=5, seed=0, return_estimators=True)
    for fold, est in enumerate(report.estimators):
        vocab = est.named_steps["features"].vocabulary_
        assert (sentinel in vocab.word_to_index) == (fold != held_out_in[0])

    checked = 0
    for vocab, tokens, out in RecordingEncoder.calls:
        for row, toks in enumerate(tokens):
            if sentinel in toks and sentinel not in vocab.word_to_index:
                assert out[row, toks.index(sentinel)] == OOV_INDEX
                checked += 1
    assert checked == 1  # exactly the evaluation of the fold that holds the sentinel


# 7. determinism

def _cli(*argv):
    out = io.StringIO()
    assert main([str(a) for a in argv], out=out) == 0
    return out.getvalue()


def test_criterion_7_cli_reports_are_byte_identical(tmp_path, fixture50):
    grid = tmp_path / "grid.cfg"
    grid.write_text("learning_rate = 0.5, 1.0\nepochs = 2\nembed_dim = 8\nhidden_size = 6\n")
    small = tmp_path / "cnn.cfg"
    small.write_text("epochs = 3\nembed_dim = 8\nn_filters = 4\n")
    runs = []
    for i in range(2):
        cv_report, grid_report = tmp_path / f"cv{i}.txt", tmp_path / f"grid{i}.txt"
        cv_out = _cli("cv", "--task", "a", "--model", "cnn", "--data", fixture50, "--config", small,
                      "--k", 5, "--seed", 11, "--report", cv_report)
        grid_out = _cli("gridsearch", "--task", "a", "--model", "gru", "--data", fixture50,
                        "--config", grid, "--k", 3, "--seed", 11, "--report", grid_report)
        runs.append((cv_out, grid_out, cv_report.read_bytes(), grid_report.read_bytes()))
    assert runs[0] == runs[1]


@pytest.mark.parametrize("kind", sorted(MODEL_KINDS))
def test_criterion_7_save_load_round_trip(kind, fixture50):
    ds = load_olid_tsv(fixture50, "A")
    assert len(ds) == 50
    hyper = {"forest": {"n_trees": 10}}.get(kind, {"epochs": 3})
    cfg = RunConfig("a", kind, "stem", 4, hyper)
    pipe = build_pipeline(kind, "stem", 4, **hyper).fit(ds.texts(), ds.labels())
    back, _ = load_model(save_model(pipe, cfg))
    assert np.array_equal(pipe.predict(ds.texts()), back.predict(ds.texts()))


# 8. published-score reproduction on OLID, or the synthetic fallback

def _olid_cv(kind):
    ds = load_olid_tsv(olid_path(), "A")
    assert len(ds) == 13240
    return cross_validate(build_pipeline(kind, seed=0), ds, k=5, seed=0).mean_macro_f1


@needs_olid
def test_criterion_8_olid_cnn_task_a():
    assert 0.50 <= _olid_cv("cnn") <= 0.65


@needs_olid
def test_criterion_8_olid_lstm_task_a():
    assert 0.55 <= _olid_cv("lstm") <= 0.68


@pytest.mark.skipif(olid_path() is not None, reason="OLID data present; real-data checks apply")
def test_criterion_8_synthetic_fallback():
    ds = make_synthetic_dataset(n=2000, seed=0)
    assert len(ds) == 2000
    cnn = cross_validate(build_pipeline("cnn", seed=0), ds, k=5, seed=0).mean_macro_f1
    baseline = cross_validate(Majority(), ds, k=5, seed=0).mean_macro_f1
    assert cnn >= baseline + 0.15, f"cnn {cnn:.4f} vs majority {baseline:.4f}"


# 9. baseline beating on OLID

@needs_olid
@pytest.mark.parametrize("kind", sorted(MODEL_KINDS))
def test_criterion_9_task_a_beats_baseline(kind):
    ds = load_olid_tsv(olid_path(), "A")
    assert holdout(build_pipeline(kind, seed=0), ds, 0.8, seed=0).macro_f1 > 0.4189


@needs_olid
@pytest.mark.parametrize("kind", sorted(MODEL_KINDS))
def test_criterion_9_task_b_with_augmentation(kind):
    ds = load_olid_tsv(olid_path(), "B")
    assert holdout(build_pipeline(kind, seed=0), ds, 0.8, seed=0, augment=1.0).macro_f1 > 0.4702
