"""Run configuration: one JSON document with a section per stage."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .embedder import TrainConfig
from .inference import InferenceConfig
from .labeler import LabelerConfig
from .segmenter import SegmenterConfig


class ConfigError(ValueError):
    pass


@dataclass
class FeatureConfig:
    min_count: int = 2
    window: int = 3
    brown_path: str | None = None

    def validate(self) -> None:
        if self.min_count < 1 or self.window < 0:
            raise ConfigError("features: need min_count >= 1 and window >= 0")


@dataclass
class PathsConfig:
    corpus: str | None = None        # training corpus
    test_corpus: str | None = None
    kb_dir: str | None = None        # entities.tsv, relations.tsv, hierarchy.tsv
    gold: str | None = None
    out_dir: str = "runs"


_SECTIONS = {
    "segmenter": SegmenterConfig,
    "labeler": LabelerConfig,
    "features": FeatureConfig,
    "train": TrainConfig,
    "inference": InferenceConfig,
    "paths": PathsConfig,
}


@dataclass
class RunConfig:
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    labeler: LabelerConfig = field(default_factory=LabelerConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        self._sync_seed()

    def _sync_seed(self) -> None:
        # one seed drives every stochastic stage
        self.segmenter.seed = self.labeler.seed = self.train.seed = self.seed

    def with_seed(self, seed: int) -> "RunConfig":
        cfg = RunConfig.from_dict(self.to_dict())
        cfg.seed = seed
        cfg._sync_seed()
        return cfg

    def validate(self) -> None:
        self.train.validate()
        self.features.validate()
        if self.labeler.none_ratio < 0:
            raise ConfigError("labeler: none_ratio must be non-negative")
        if self.segmenter.max_len < 1:
            raise ConfigError("segmenter: max_len must be >= 1")

    def to_dict(self) -> dict:
        return {**{name: asdict(getattr(self, name)) for name in _SECTIONS}, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - set(_SECTIONS) - {"seed"}
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        kw = {}
        for name, klass in _SECTIONS.items():
            sec = d.get(name, {}) or {}
            names = {f.name for f in fields(klass)}
            bad = set(sec) - names
            if bad:
                raise ConfigError(f"{name}: unknown key(s) {', '.join(sorted(bad))}")
            kw[name] = klass(**sec)
        seed = d.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        return cls(**kw, seed=seed)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ConfigError(f"{path}: {exc}") from None

    def hash(self) -> str:
        """First 8 hex digits of the SHA-256 of the canonical JSON (paths excluded)."""
        d = self.to_dict()
        d.pop("paths")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:8]

    def override(self, dotted: str, value: str) -> None:
        """Set ``section.key`` from a string, converted to the field's current type."""
        if "." not in dotted:
            if dotted != "seed":
                raise ConfigError(f"override {dotted!r}: expected section.key")
            self.seed = int(value)
            self._sync_seed()
            return
        sec, key = dotted.split(".", 1)
        if sec not in _SECTIONS:
            raise ConfigError(f"override {dotted!r}: unknown section")
        obj = getattr(self, sec)
        if key not in {f.name for f in fields(obj)}:
            raise ConfigError(f"override {dotted!r}: unknown key")
        setattr(obj, key, _coerce(value, getattr(obj, key)))


def _coerce(value: str, current):
    if value.lower() in ("none", "null"):
        return None
    if isinstance(current, bool):
        if value.lower() not in ("true", "false", "1", "0"):
            raise ConfigError(f"expected a boolean, got {value!r}")
        return value.lower() in ("true", "1")
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    if current is None:
        for conv in (int, float):
            try:
                return conv(value)
            except ValueError:
                pass
    return value


__all__ = ["RunConfig", "FeatureConfig", "PathsConfig", "ConfigError"]
