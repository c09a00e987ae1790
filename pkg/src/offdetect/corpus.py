"""OLID-format tweet data: loading, stratified splits, folds and augmentation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "TASK_LABELS",
    "Example",
    "Dataset",
    "FoldPlan",
    "CorpusError",
    "load_olid_tsv",
    "write_olid_tsv",
    "split_holdout",
    "make_folds",
    "augment_minority",
    "make_synthetic_dataset",
]

TASK_LABELS = {
    "A": ("OFF", "NOT"),
    "B": ("TIN", "UNT"),
    "C": ("IND", "GRP", "OTH"),
}
_LABEL_FIELD = {"A": "label_a", "B": "label_b", "C": "label_c"}
_HEADER = ["id", "tweet", "subtask_a", "subtask_b", "subtask_c"]
AUG_PREFIX = "AUG-"


class CorpusError(ValueError):
    """Malformed or unusable tweet data."""


@dataclass(frozen=True)
class Example:
    id: str
    raw_text: str
    label_a: Optional[str] = None
    label_b: Optional[str] = None
    label_c: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("example id must be non-empty")
        for task, attr in _LABEL_FIELD.items():
            value = getattr(self, attr)
            if value is not None and value not in TASK_LABELS[task]:
                raise CorpusError(f"unknown subtask_{task.lower()} label {value!r}")
        if self.label_b is not None and self.label_a != "OFF":
            raise CorpusError(f"{self.id}: subtask_b label requires subtask_a = OFF")
        if self.label_c is not None and self.label_b != "TIN":
            raise CorpusError(f"{self.id}: subtask_c label requires subtask_b = TIN")

    def label(self, task: str) -> Optional[str]:
        return getattr(self, _LABEL_FIELD[task])


@dataclass(frozen=True)
class Dataset:
    examples: tuple
    task: str

    def __post_init__(self):
        if self.task not in TASK_LABELS:
            raise CorpusError(f"unknown task {self.task!r}")
        object.__setattr__(self, "examples", tuple(self.examples))
        ids = [ex.id for ex in self.examples]
        if len(set(ids)) != len(ids):
            raise CorpusError("example ids must be unique within a dataset")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def classes(self) -> tuple:
        return TASK_LABELS[self.task]

    @property
    def is_labeled(self) -> bool:
        return all(ex.label(self.task) is not None for ex in self.examples)

    def texts(self) -> list:
        return [ex.raw_text for ex in self.examples]

    def labels(self) -> list:
        return [ex.label(self.task) for ex in self.examples]

    def ids(self) -> list:
        return [ex.id for ex in self.examples]

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.examples[i] for i in indices), self.task)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray = field(repr=False)

    def fold_sizes(self) -> list:
        return np.bincount(self.assignments, minlength=self.k).tolist()

    def split(self, fold: int):
        """Return (train_indices, validation_indices) for one rotation."""
        val = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, val


def _parse_label(value):
    value = value.strip()
    return None if value in ("NULL", "") else value


def load_olid_tsv(path, task: str, labeled: bool = True) -> Dataset:
    """Read an OLID TSV file.

    With ``labeled=True`` only rows carrying a label for ``task`` are kept.
    Unlabeled test files (``id<TAB>tweet``) are read with ``labeled=False``.
    """
    task = task.upper()
    if task not in TASK_LABELS:
        raise CorpusError(f"unknown task {task!r}")
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            raise CorpusError(f"{path}: empty file")
        n_cols = len(header)
        if n_cols not in (2, 5) or header[:2] != _HEADER[:2]:
            raise CorpusError(f"{path}:1: unexpected header {header!r}")
        if labeled and n_cols != 5:
            raise CorpusError(f"{path}: labeled data needs the 5-column OLID header")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise CorpusError(
                    f"{path}:{line_no}: expected {n_cols} columns, found {len(row)}"
                )
            labels = [None, None, None]
            if n_cols == 5:
                labels = [_parse_label(v) for v in row[2:]]
            try:
                ex = Example(row[0], row[1], *labels)
            except CorpusError as exc:
                raise CorpusError(f"{path}:{line_no}: {exc}") from None
            if labeled and ex.label(task) is None:
                continue
            examples.append(ex)
    return Dataset(tuple(examples), task)


def write_olid_tsv(ds: Dataset, path, labeled: bool = True) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        header = _HEADER if labeled else _HEADER[:2]
        fh.write("\t".join(header) + "\n")
        for ex in ds:
            row = [ex.id, ex.raw_text]
            if labeled:
                row += [v if v is not None else "NULL" for v in (ex.label_a, ex.label_b, ex.label_c)]
            fh.write("\t".join(row) + "\n")


def _class_indices(ds: Dataset):
    if not ds.is_labeled:
        raise CorpusError(f"dataset is not fully labeled for task {ds.task}")
    labels = ds.labels()
    return {c: [i for i, lab in enumerate(labels) if lab == c] for c in ds.classes}


def split_holdout(ds: Dataset, train_fraction: float, seed: int):
    """Stratified train/validation split; both outputs keep dataset order."""
    if not 0.0 < train_fraction < 1.0:
        raise CorpusError("train_fraction must lie in (0, 1)")
    by_class = {c: idx for c, idx in _class_indices(ds).items() if idx}
    for c, idx in by_class.items():
        if len(idx) < 2:
            raise CorpusError(f"class {c} has fewer than 2 examples; cannot stratify")

    # largest-remainder allocation keeps the total at round(fraction * n)
    target = int(math.floor(train_fraction * len(ds) + 0.5))
    exact = {c: train_fraction * len(idx) for c, idx in by_class.items()}
    quota = {c: int(math.floor(v)) for c, v in exact.items()}
    leftover = target - sum(quota.values())
    for c in sorted(exact, key=lambda c: -(exact[c] - quota[c]))[: max(leftover, 0)]:
        quota[c] += 1

    rng = np.random.default_rng(seed)
    train = []
    for c, idx in by_class.items():
        perm = rng.permutation(len(idx))
        train.extend(idx[j] for j in perm[: quota[c]])
    train_set = set(train)
    train_idx = sorted(train_set)
    val_idx = [i for i in range(len(ds)) if i not in train_set]
    return ds.subset(train_idx), ds.subset(val_idx)


def make_folds(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Stratified fold assignment.

    Class members are shuffled and dealt round-robin, the deal continuing
    across classes, so fold sizes and per-fold class counts differ by at
    most one.
    """
    if k < 2:
        raise CorpusError("k must be at least 2")
    if k > len(ds):
        raise CorpusError(f"k={k} exceeds dataset size {len(ds)}")
    rng = np.random.default_rng(seed)
    order = []
    for idx in _class_indices(ds).values():
        order.extend(idx[j] for j in rng.permutation(len(idx)))
    assignments = np.empty(len(ds), dtype=np.int64)
    assignments[order] = np.arange(len(order)) % k
    return FoldPlan(k, assignments)


def _synthetic_labels(task, label):
    if task == "A":
        return {"label_a": label}
    if task == "B":
        return {"label_a": "OFF", "label_b": label}
    return {"label_a": "OFF", "label_b": "TIN", "label_c": label}


def augment_minority(ds: Dataset, target_ratio: float = 1.0, seed: int = 0) -> Dataset:
    """Append random tweets of the minority class until it reaches
    ``target_ratio`` times the majority count.

    Each synthetic tweet takes its length from a uniformly chosen minority
    tweet and its words uniformly (with replacement) from the pooled
    whitespace tokens of all minority tweets.
    """
    if not 0.0 < target_ratio <= 1.0:
        raise CorpusError("target_ratio must lie in (0, 1]")
    by_class = _class_indices(ds)
    counts = {c: len(idx) for c, idx in by_class.items()}
    minority = min(counts.values())
    majority = max(counts.values())
    if minority == 0:
        empty = [c for c, n in counts.items() if n == 0]
        raise CorpusError(f"minority class {empty[0]} has no examples")
    n_new = math.ceil(target_ratio * majority - 1e-9) - minority
    if n_new <= 0:
        return ds
    smallest = [c for c, n in counts.items() if n == minority]
    if len(smallest) > 1:
        raise CorpusError(f"no unique minority class: {smallest} tie at {minority}")
    cls = smallest[0]

    texts = [ds.examples[i].raw_text.split() for i in by_class[cls]]
    lengths = np.array([len(t) for t in texts])
    pool = [w for t in texts for w in t]
    if not pool:
        raise CorpusError(f"minority class {cls} has no words to sample")

    rng = np.random.default_rng(seed)
    taken = set(ds.ids())
    synthetic = []
    serial = 0
    for _ in range(n_new):
        length = int(lengths[rng.integers(len(lengths))])
        words = [pool[j] for j in rng.integers(len(pool), size=length)]
        while f"{AUG_PREFIX}{serial}" in taken:
            serial += 1
        ex_id = f"{AUG_PREFIX}{serial}"
        serial += 1
        synthetic.append(Example(ex_id, " ".join(words), **_synthetic_labels(ds.task, cls)))
    return Dataset(ds.examples + tuple(synthetic), ds.task)


def make_synthetic_dataset(
    n: int = 2000,
    seed: int = 0,
    offensive_share: float = 0.33,
    signal: float = 0.8,
    noise: float = 0.05,
) -> Dataset:
    """Generate an OLID-like Task A corpus with a planted offensive lexicon.

    Offensive tweets contain a lexicon word with probability ``signal``;
    non-offensive ones with probability ``noise``. Tweets also carry user
    mentions, hashtags, digits and emoji so the cleaning step is exercised.
    """
    rng = np.random.default_rng(seed)
    letters = np.array(list("abcdefghijklmnopqrstuvwxyz"))

    def word(lo, hi):
        return "".join(letters[rng.integers(26, size=int(rng.integers(lo, hi)))])

    neutral = sorted({word(3, 8) for _ in range(500)})
    lexicon = sorted({word(4, 7) + "x" for _ in range(30)} - set(neutral))
    decorations = ["@USER", "#news", "2019", "&amp;", "\U0001F4A9", "!!", "URL"]

    examples = []
    for i in range(n):
        off = rng.random() < offensive_share
        words = [neutral[j] for j in rng.integers(len(neutral), size=int(rng.integers(4, 18)))]
        if rng.random() < (signal if off else noise):
            for _ in range(int(rng.integers(1, 3))):
                pos = int(rng.integers(len(words) + 1))
                slur = lexicon[int(rng.integers(len(lexicon)))]
                words.insert(pos, slur.upper() if rng.random() < 0.2 else slur)
        if rng.random() < 0.5:
            words.insert(0, decorations[0])
        if rng.random() < 0.3:
            words.append(decorations[int(rng.integers(1, len(decorations)))])
        examples.append(Example(f"S{i:05d}", " ".join(words), "OFF" if off else "NOT"))
    return Dataset(tuple(examples), "A")
