"""Run configuration: one JSON document driving every CLI command.

A config file may set any subset of the fields; everything omitted takes
its default, and the fully resolved document is what commands echo to
their effective-config sidecar. Unknown keys are rejected at every level
so a typo cannot silently fall back to a default.
"""

import json
from dataclasses import dataclass, field

from .data import CorpusSpec
from .errors import ConfigError, DataError, DomainError
from .gan import TrainConfig

DEFAULT_SPLIT = (0.8, 0.1, 0.1)
_SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class Paths:
    """Output locations, resolved relative to the working directory."""

    corpus_dir: str = "corpus"
    checkpoint: str = "model.ckpt"
    report_dir: str = "reports"

    def to_dict(self):
        return {"corpus_dir": self.corpus_dir, "checkpoint": self.checkpoint,
                "report_dir": self.report_dir}

    @classmethod
    def from_dict(cls, raw: dict) -> "Paths":
        unknown = sorted(set(raw) - {"corpus_dir", "checkpoint", "report_dir"})
        if unknown:
            raise ConfigError(f"unknown paths keys: {', '.join(unknown)}")
        for key, value in raw.items():
            if not isinstance(value, str) or not value:
                raise ConfigError(
                    f"paths.{key} must be a non-empty string, got {value!r}")
        return cls(**raw)


@dataclass(frozen=True)
class RunConfig:
    """Corpus recipe, training hyperparameters, split, and output paths."""

    corpus: CorpusSpec = field(default_factory=CorpusSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: tuple = DEFAULT_SPLIT
    paths: Paths = field(default_factory=Paths)

    def __post_init__(self):
        try:
            fractions = tuple(float(f) for f in self.split)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"split fractions must be numbers: {err}") from err
        if len(fractions) != 3:
            raise ConfigError(
                f"split must give train/val/test fractions, got "
                f"{len(fractions)} values")
        if any(f < 0.0 for f in fractions):
            raise ConfigError(f"split fractions must be >= 0, got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ConfigError(
                f"split fractions must sum to 1, got {sum(fractions)}")
        object.__setattr__(self, "split", fractions)

    def to_dict(self):
        return {
            "corpus": self.corpus.to_dict(),
            "train": self.train.to_dict(),
            "split": dict(zip(_SPLIT_NAMES, self.split)),
            "paths": self.paths.to_dict(),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError(
                f"run config must be a JSON object, got {type(raw).__name__}")
        unknown = sorted(set(raw) - {"corpus", "train", "split", "paths"})
        if unknown:
            raise ConfigError(f"unknown run config keys: {', '.join(unknown)}")
        kwargs = {}
        if "corpus" in raw:
            # CorpusSpec reports problems as data errors; inside a config
            # file they are configuration errors
            try:
                kwargs["corpus"] = CorpusSpec.from_dict(raw["corpus"])
            except (DataError, DomainError) as err:
                raise ConfigError(f"corpus: {err}") from err
        if "train" in raw:
            kwargs["train"] = TrainConfig.from_dict(raw["train"])
        if "split" in raw:
            kwargs["split"] = _split_from_dict(raw["split"])
        if "paths" in raw:
            kwargs["paths"] = Paths.from_dict(raw["paths"])
        return cls(**kwargs)

    def with_seed(self, seed: int) -> "RunConfig":
        """Same run with both the corpus and training seeds replaced."""
        corpus = CorpusSpec.from_dict({**self.corpus.to_dict(), "seed": seed})
        train = TrainConfig.from_dict({**self.train.to_dict(), "seed": seed})
        return RunConfig(corpus, train, self.split, self.paths)

    def effective_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _split_from_dict(raw) -> tuple:
    if not isinstance(raw, dict):
        raise ConfigError(
            f"split must be an object with train/val/test, got {raw!r}")
    unknown = sorted(set(raw) - set(_SPLIT_NAMES))
    if unknown:
        raise ConfigError(f"unknown split keys: {', '.join(unknown)}")
    return tuple(raw.get(name, DEFAULT_SPLIT[i])
                 for i, name in enumerate(_SPLIT_NAMES))


def load_run_config(path) -> RunConfig:
    """Parse and validate the JSON config at path."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    return RunConfig.from_dict(raw)
