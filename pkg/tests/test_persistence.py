import struct

import numpy as np
import pytest

from offdetect.config import ConfigError, RunConfig, parse_value, read_config_file
from offdetect.corpus import make_synthetic_dataset
from offdetect.persistence import (
    FORMAT_VERSION,
    MAGIC,
    ArtifactError,
    load_model,
    save_model,
    write_atomic,
)
from offdetect.pipeline import build_pipeline

SMALL = {
    "logreg": {"epochs": 3},
    "svm": {"epochs": 3},
    "forest": {"n_trees": 3, "max_depth": 4},
    "cnn": {"epochs": 2, "embed_dim": 6, "n_filters": 3},
    "lstm": {"epochs": 2, "embed_dim": 6, "hidden_size": 4},
    "gru": {"epochs": 2, "embed_dim": 6, "hidden_size": 4},
}


@pytest.fixture(scope="module")
def data():
    return make_synthetic_dataset(n=60, seed=2)


def fitted(kind, data, mode="stem"):
    cfg = RunConfig("a", kind, mode, 5, SMALL[kind])
    pipe = build_pipeline(kind, mode, 5, **SMALL[kind]).fit(data.texts(), data.labels())
    return pipe, cfg


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_round_trip(kind, data):
    pipe, cfg = fitted(kind, data)
    blob = save_model(pipe, cfg)
    assert blob[:4] == MAGIC
    back, cfg2 = load_model(blob)
    assert cfg2 == cfg
    texts = data.texts() + ["completely unseen words here", ""]
    assert np.array_equal(pipe.predict(texts), back.predict(texts))
    assert save_model(back, cfg2) == blob  # every parameter bit survives


def test_tfidf_state_survives(data):
    pipe, cfg = fitted("logreg", data)
    back, _ = load_model(save_model(pipe, cfg))
    a = pipe.named_steps["features"].model_
    b = back.named_steps["features"].model_
    assert a.terms == b.terms and np.array_equal(a.idf, b.idf) and a.n_docs == b.n_docs


@pytest.fixture(scope="module")
def blob(data):
    pipe, cfg = fitted("logreg", data)
    return save_model(pipe, cfg)


def test_bad_magic(blob):
    with pytest.raises(ArtifactError, match="magic"):
        load_model(b"ABCD" + blob[4:])


def test_newer_version_refused(blob):
    newer = blob[:4] + struct.pack("<I", FORMAT_VERSION + 1) + blob[8:]
    with pytest.raises(ArtifactError, match="newer"):
        load_model(newer)


@pytest.mark.parametrize("cut", [3, 10, 40, -1])
def test_truncation(blob, cut):
    with pytest.raises(ArtifactError):
        load_model(blob[:cut])


def test_corrupted_length_fields(blob):
    # first section: u16 name length, name, u64 payload length
    (name_len,) = struct.unpack_from("<H", blob, 12)
    offset = 14 + name_len
    for bogus in (2**40, 0, 7):
        bad = blob[:offset] + struct.pack("<Q", bogus) + blob[offset + 8:]
        with pytest.raises(ArtifactError):
            load_model(bad)
    with pytest.raises(ArtifactError):
        load_model(blob[:8] + struct.pack("<I", 10**9) + blob[12:])


def test_trailing_bytes(blob):
    with pytest.raises(ArtifactError):
        load_model(blob + b"\0")


def test_write_atomic_leaves_no_temp_files(tmp_path):
    path = tmp_path / "out.bin"
    write_atomic(path, b"abc")
    write_atomic(path, "text")
    assert path.read_text() == "text"
    assert [p.name for p in tmp_path.iterdir()] == ["out.bin"]


def test_parse_value():
    assert parse_value("none") is None
    assert parse_value("true") is True
    assert parse_value("3") == 3 and isinstance(parse_value("3"), int)
    assert parse_value("0.5") == 0.5
    assert parse_value("2 3 4") == (2, 3, 4)
    assert parse_value("stem") == "stem"


def test_config_file(tmp_path):
    path = tmp_path / "grid.cfg"
    path.write_text("# grid\nlearning_rate = 0.1, 0.5  # two values\nkernel_sizes = 2 3 4\n")
    assert read_config_file(path) == {"learning_rate": [0.1, 0.5], "kernel_sizes": [(2, 3, 4)]}
    path.write_text("a = 1\na = 2\n")
    with pytest.raises(ConfigError, match=":2:"):
        read_config_file(path)
    path.write_text("just words\n")
    with pytest.raises(ConfigError):
        read_config_file(path)


def test_run_config_validation_and_text_round_trip():
    cfg = RunConfig("A", "cnn", "lemma", 3, {"kernel_sizes": (2, 3), "learning_rate": 0.25},
                    augment=True, target_ratio=0.5)
    assert cfg.task == "a" and cfg.augment_ratio == 0.5
    assert RunConfig.from_text(cfg.to_text()) == cfg
    with pytest.raises(ConfigError):
        RunConfig("a", "cnn", hyperparameters={"hidden_size": 3})
    with pytest.raises(ConfigError):
        RunConfig("d", "cnn")
    with pytest.raises(ConfigError):
        RunConfig.from_entries("a", "svm", 0, {"c": [0.1, 1.0]})
