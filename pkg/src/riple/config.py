"""Run configuration: defaults, named presets, ``key = value`` files and
flag overrides (flags win over the file, the file over the defaults)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .evaluation import SplitSpec, SyntheticTemplate
from .pipeline import ALGORITHMS, RiPLE


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # data and output
    data: str = "."
    output: str = "out"
    # rating predictor
    algorithm: str = "BMF"
    n_factors: int = 5
    reg: float = 0.02
    learning_rate: float = 0.1
    n_epochs: int = 100
    n_neighbors: int = 20
    # ranking
    kgw: float = 0.8
    beta: float = 0.1
    cold_start_threshold: int = 3
    seed: int = 0
    # synthetic experiments
    n_users: int = 400
    n_questions: int = 1100
    n_answers: int = 22000
    n_topics: int = 10
    alpha: float = 0.1
    max_topics_per_question: int = 1
    replicates: int = 5
    split: str = "kfold"
    folds: int = 5
    cold_start_fraction: float = 0.1
    tune: bool = True

    def __post_init__(self):
        checks = [
            (self.algorithm in ALGORITHMS, f"algorithm must be one of {', '.join(ALGORITHMS)}"),
            (self.n_factors >= 0, "n_factors must be >= 0"),
            (self.n_factors >= 1 or self.algorithm == "BMF", "n_factors must be >= 1"),
            (self.reg >= 0, "reg must be >= 0"),
            (self.learning_rate >= 0, "learning_rate must be >= 0"),
            (self.n_epochs >= 1, "n_epochs must be >= 1"),
            (self.n_neighbors >= 1, "n_neighbors must be >= 1"),
            (0 <= self.kgw <= 1, "kgw must lie in [0, 1]"),
            (self.beta >= 0, "beta must be >= 0"),
            (self.cold_start_threshold >= 0, "cold_start_threshold must be >= 0"),
            (min(self.n_users, self.n_questions, self.n_topics) >= 1,
             "n_users, n_questions and n_topics must be >= 1"),
            (0 <= self.n_answers <= self.n_users * self.n_questions,
             "n_answers must lie in [0, n_users * n_questions]"),
            (self.alpha > 0, "alpha must be > 0"),
            (1 <= self.max_topics_per_question <= self.n_topics,
             "max_topics_per_question must lie in [1, n_topics]"),
            (self.replicates >= 1, "replicates must be >= 1"),
            (self.split in ("kfold", "ratio"), "split must be kfold or ratio"),
            (self.folds >= 2, "folds must be >= 2"),
            (0 <= self.cold_start_fraction <= 1, "cold_start_fraction must lie in [0, 1]"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def model(self):
        return RiPLE(algorithm=self.algorithm, n_factors=self.n_factors, reg=self.reg,
                     learning_rate=self.learning_rate, n_epochs=self.n_epochs,
                     n_neighbors=self.n_neighbors, kgw=self.kgw, beta=self.beta,
                     cold_start_threshold=self.cold_start_threshold, random_state=self.seed)

    def template(self):
        return SyntheticTemplate(self.n_users, self.n_questions, self.n_answers, self.n_topics,
                                 self.alpha, self.max_topics_per_question)

    def split_spec(self):
        return SplitSpec(scheme=self.split, k=self.folds, seed=self.seed)

    def param_grid(self):
        """Grid for experiments: ``None`` means the default, ``{}`` no tuning.
        Plain ``train`` runs always use the configured values."""
        return None if self.tune else {}

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    def digest(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()


PRESETS = {
    "synthetic-default": {"algorithm": "BMF", "learning_rate": 0.1, "n_factors": 5, "kgw": 0.8,
                          "beta": 0.1, "alpha": 0.1, "n_topics": 10},
    "historical": {"algorithm": "BMF", "learning_rate": 0.002, "n_factors": 2, "n_epochs": 300,
                   "kgw": 0.8, "beta": 0.51},
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, text):
    kind = _TYPES[key]
    try:
        if kind == "bool":
            lowered = text.strip().lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return lowered in ("true", "1", "yes")
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {kind}") from None
    return text.strip()


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines; ``#`` starts a comment.  Unknown or
    repeated keys are errors."""
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{n}: expected key = value")
        if key not in _TYPES:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{n}: {key} set twice")
        values[key] = _convert(key, value.strip())
    return values


def load_config(path=None, preset=None, overrides=None):
    """Defaults, then ``preset``, then the file at ``path``, then ``overrides``
    (entries that are ``None`` are ignored)."""
    values = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
        values.update(PRESETS[preset])
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8"), str(path)))
    for key, value in (overrides or {}).items():
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            values[key] = value
    return replace(RunConfig(), **values)
