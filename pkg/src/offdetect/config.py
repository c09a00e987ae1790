"""Run configuration and the ``key = value`` config file format.

Lines are ``key = value``; ``#`` starts a comment. A comma separates
alternatives (grid search only); tuple values such as kernel sizes are
written space-separated, e.g. ``kernel_sizes = 2 3 4, 3 4 5``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .pipeline import MODEL_KINDS, hyperparameter_names
from .preprocess import MODES

__all__ = ["ConfigError", "RunConfig", "read_config_file", "parse_value", "format_value"]

RUN_KEYS = ("preprocess_mode", "augment", "target_ratio", "drop_hashtag_body")
TASKS = ("a", "b", "c")


class ConfigError(ValueError):
    pass


def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("none", "null"):
        return None
    if low in ("true", "false"):
        return low == "true"
    parts = text.split()
    if len(parts) > 1:
        return tuple(parse_value(p) for p in parts)
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return " ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_config_file(path) -> dict:
    """Map each key to its list of alternative values, in file order."""
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            if key in entries:
                raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
            alternatives = [v for v in value.split(",")]
            if any(not v.strip() for v in alternatives):
                raise ConfigError(f"{path}:{line_no}: empty value for {key!r}")
            entries[key] = [parse_value(v) for v in alternatives]
    return entries


@dataclass
class RunConfig:
    task: str
    model: str
    preprocess_mode: str = "none"
    seed: int = 0
    hyperparameters: dict = field(default_factory=dict)
    augment: bool = False
    target_ratio: float = 1.0
    drop_hashtag_body: bool = False

    def __post_init__(self):
        self.task = str(self.task).lower()
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {sorted(MODEL_KINDS)}")
        if self.preprocess_mode not in MODES:
            raise ConfigError(f"unknown preprocess_mode {self.preprocess_mode!r}")
        if not 0.0 < float(self.target_ratio) <= 1.0:
            raise ConfigError("target_ratio must lie in (0, 1]")
        known = hyperparameter_names(self.model)
        unknown = sorted(set(self.hyperparameters) - set(known))
        if unknown:
            raise ConfigError(f"unknown hyperparameters for {self.model}: {unknown}; known: {known}")

    @property
    def augment_ratio(self):
        return float(self.target_ratio) if self.augment else None

    @classmethod
    def from_entries(cls, task, model, seed, entries: dict, **overrides) -> "RunConfig":
        """Build from single-valued config entries; list values are refused."""
        single = {}
        for key, values in entries.items():
            if len(values) != 1:
                raise ConfigError(f"{key!r} lists {len(values)} values; only gridsearch takes lists")
            single[key] = values[0]
        run = {k: single.pop(k) for k in RUN_KEYS if k in single}
        run.update({k: v for k, v in overrides.items() if v is not None})
        return cls(task, model, seed=seed, hyperparameters=single, **run)

    def to_text(self) -> str:
        lines = [
            f"task = {self.task}",
            f"model = {self.model}",
            f"preprocess_mode = {self.preprocess_mode}",
            f"seed = {self.seed}",
            f"augment = {format_value(self.augment)}",
            f"target_ratio = {format_value(float(self.target_ratio))}",
            f"drop_hashtag_body = {format_value(self.drop_hashtag_body)}",
        ]
        for key in sorted(self.hyperparameters):
            lines.append(f"hyper.{key} = {format_value(self.hyperparameters[key])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values, hyper = {}, {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key.startswith("hyper."):
                hyper[key[6:]] = parse_value(value)
            else:
                values[key] = value
        try:
            return cls(
                values["task"], values["model"], values["preprocess_mode"], int(values["seed"]),
                hyper, parse_value(values["augment"]), float(values["target_ratio"]),
                parse_value(values["drop_hashtag_body"]),
            )
        except KeyError as exc:
            raise ConfigError(f"stored configuration lacks {exc.args[0]!r}") from None
