"""Versioned binary model artifacts.

Layout (little-endian)::

    b"OFNS" | u32 format_version | u32 n_sections
    then per section: u16 name_len | name | u64 payload_len | payload

Sections: ``config`` (UTF-8 ``key = value`` text), ``vocab`` (one
vocabulary word or TF-IDF term per line, in index/column order),
``exceptions`` (optional verb table), and ``params``: u32 count, then per
array u16 name_len | name | u8 ndim | u64 dims... | float64 data.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .classical.tree import DecisionTreeModel
from .config import ConfigError, RunConfig
from .features import TfidfModel
from .neural.networks import NETWORKS
from .pipeline import NEURAL_KINDS, build_pipeline
from .preprocess import Vocabulary

__all__ = ["MAGIC", "FORMAT_VERSION", "ArtifactError", "save_model", "load_model",
           "write_atomic"]

MAGIC = b"OFNS"
FORMAT_VERSION = 1
_TREE_FIELDS = ("feature", "threshold", "left", "right", "counts")


class ArtifactError(ValueError):
    pass


def _pack_arrays(arrays: dict) -> bytes:
    out = [struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw)) + raw)
        out.append(struct.pack("<B", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.append(arr.tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes, what: str):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n):
        if n < 0 or self.pos + n > len(self.data):
            raise ArtifactError(
                f"truncated {self.what}: need {n} bytes at offset {self.pos}, "
                f"{len(self.data) - self.pos} left"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _unpack_arrays(payload: bytes) -> dict:
    r = _Reader(payload, "params section")
    (count,) = r.unpack("<I")
    arrays = {}
    for _ in range(count):
        (n,) = r.unpack("<H")
        name = r.take(n).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}Q")
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        arrays[name] = np.frombuffer(r.take(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
    if r.pos != len(payload):
        raise ArtifactError("params section has trailing bytes")
    return arrays


def _model_arrays(kind, clf) -> dict:
    if kind in NEURAL_KINDS:
        return {f"net.{k}": v for k, v in clf.network_.params.items()}
    if kind == "forest":
        arrays = {}
        for i, tree in enumerate(clf.trees_):
            for f in _TREE_FIELDS:
                arrays[f"tree.{i}.{f}"] = getattr(tree, f)
        return arrays
    return {"coef": clf.coef_, "intercept": clf.intercept_}


def save_model(pipeline, config: RunConfig) -> bytes:
    """Serialize a fitted pipeline built by :func:`build_pipeline`."""
    kind = config.model
    prep, features, clf = (pipeline.named_steps[s] for s in ("prep", "features", "clf"))
    meta = config.to_text()
    meta += "classes = " + "\t".join(str(c) for c in clf.classes_) + "\n"
    arrays = {}
    if kind in NEURAL_KINDS:
        words = features.vocabulary_.words
        meta += f"max_len = {features.max_len_}\n"
    else:
        tfidf = features.model_
        words = list(tfidf.terms)
        meta += f"n_docs = {tfidf.n_docs}\n"
        meta += f"n_features = {clf.n_features_in_ if hasattr(clf, 'n_features_in_') else tfidf.n_features}\n"
        arrays["tfidf.df"] = tfidf.df
        arrays["tfidf.idf"] = tfidf.idf
    arrays.update(_model_arrays(kind, clf))

    sections = [
        ("config", meta.encode("utf-8")),
        ("vocab", "".join(w + "\n" for w in words).encode("utf-8")),
    ]
    if prep.exceptions is not None:
        table = "".join(f"{k}\t{v}\n" for k, v in prep.exceptions.items())
        sections.append(("exceptions", table.encode("utf-8")))
    sections.append(("params", _pack_arrays(arrays)))

    out = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(sections))]
    for name, payload in sections:
        raw = name.encode("ascii")
        out.append(struct.pack("<H", len(raw)) + raw + struct.pack("<Q", len(payload)) + payload)
    return b"".join(out)


def _read_sections(data: bytes) -> dict:
    r = _Reader(data, "artifact header")
    if r.take(4) != MAGIC:
        raise ArtifactError("not a model artifact (bad magic bytes)")
    version, n_sections = r.unpack("<II")
    if version > FORMAT_VERSION:
        raise ArtifactError(
            f"artifact format version {version} is newer than supported version {FORMAT_VERSION}"
        )
    if version != FORMAT_VERSION:
        raise ArtifactError(f"unsupported artifact format version {version}")
    if n_sections > len(data):
        raise ArtifactError(f"corrupted section count {n_sections}")
    sections = {}
    for _ in range(n_sections):
        (n,) = r.unpack("<H")
        name = r.take(n).decode("ascii", errors="replace")
        (length,) = r.unpack("<Q")
        r.what = f"section {name!r}"
        sections[name] = r.take(length)
        r.what = "artifact header"
    if r.pos != len(data):
        raise ArtifactError("artifact has trailing bytes after the last section")
    for required in ("config", "vocab", "params"):
        if required not in sections:
            raise ArtifactError(f"artifact lacks the {required!r} section")
    return sections


def load_model(data: bytes):
    """Return ``(pipeline, RunConfig)`` from :func:`save_model` bytes."""
    sections = _read_sections(data)
    try:
        text = sections["config"].decode("utf-8")
        words = sections["vocab"].decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise ArtifactError(f"corrupted text section: {exc}") from None
    extra = {}
    for line in text.splitlines():
        key, _, value = line.partition("=")
        extra[key.strip()] = value.strip()
    try:
        config = RunConfig.from_text(text)
    except (ConfigError, ValueError) as exc:
        raise ArtifactError(f"bad stored configuration: {exc}") from None
    arrays = _unpack_arrays(sections["params"])
    exceptions = None
    if "exceptions" in sections:
        exceptions = dict(
            line.split("\t", 1) for line in sections["exceptions"].decode("utf-8").splitlines()
        )

    pipeline = build_pipeline(config.model, config.preprocess_mode, config.seed,
                              config.drop_hashtag_body, exceptions, **config.hyperparameters)
    features, clf = pipeline.named_steps["features"], pipeline.named_steps["clf"]
    clf.classes_ = np.array(extra["classes"].split("\t"))
    kind = config.model
    try:
        if kind in NEURAL_KINDS:
            features.vocabulary_ = Vocabulary(words)
            features.max_len_ = int(extra["max_len"])
            params = {k[4:]: v for k, v in arrays.items() if k.startswith("net.")}
            clf.network_ = NETWORKS[kind](params)
            return pipeline, config
        n_docs = int(extra["n_docs"])
        features.model_ = TfidfModel(
            {t: i for i, t in enumerate(words)},
            arrays["tfidf.df"].astype(np.int64), n_docs, arrays["tfidf.idf"],
        )
        if kind == "forest":
            n_trees = len({k.split(".")[1] for k in arrays if k.startswith("tree.")})
            clf.trees_ = []
            for i in range(n_trees):
                f = {name: arrays[f"tree.{i}.{name}"] for name in _TREE_FIELDS}
                clf.trees_.append(DecisionTreeModel(
                    f["feature"].astype(np.int64), f["threshold"], f["left"].astype(np.int64),
                    f["right"].astype(np.int64), f["counts"],
                ))
            clf.n_features_in_ = int(extra["n_features"])
        else:
            clf.coef_, clf.intercept_ = arrays["coef"], arrays["intercept"]
    except KeyError as exc:
        raise ArtifactError(f"artifact is missing {exc.args[0]!r}") from None
    return pipeline, config


def write_atomic(path, data) -> None:
    """Write bytes or text to ``path`` via a temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
