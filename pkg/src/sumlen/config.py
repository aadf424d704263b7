"""Experiment configuration: one structured YAML file drives every pipeline
step, with command-line flags overriding individual values. Every dataset
path named in a config must exist when the config is loaded, and the seed is
recorded in every artifact manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import yaml

from .backend import BACKEND_KINDS, DecodingConfig, TrainingConfig
from .corpus import FORMATS, SPLITS
from .metrics import RougeConfig
from .summarizer import LENGTH_SOURCES, SummarizerMode
from .templates import PredictorVariant

_TOP_LEVEL_KEYS = {
    "dataset",
    "backend",
    "predictor",
    "summarizer",
    "length_source",
    "fixed_length",
    "decoding",
    "training",
    "rouge",
    "embedder",
    "output_dir",
    "seed",
    "workers",
}


class ConfigError(ValueError):
    """The experiment config is malformed or names missing files."""


@dataclass(frozen=True)
class DatasetConfig:
    format: str = "dialogsum"
    train: Path | None = None
    val: Path | None = None
    test: Path | None = None

    def path_for(self, split: str) -> Path:
        path = getattr(self, split, None)
        if path is None:
            raise ConfigError(f"config does not name a {split!r} dataset file")
        return path

    def configured_splits(self) -> list[str]:
        return [s for s in SPLITS if getattr(self, s) is not None]


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "toy"
    settings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EmbedderConfig:
    kind: str = "hash"
    dim: int = 32


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = DatasetConfig()
    backend: BackendConfig = BackendConfig()
    predictor_variant: PredictorVariant = PredictorVariant.MULTI_PLUS
    summarizer: SummarizerMode = SummarizerMode()
    length_source: str = "none"
    fixed_length: int | None = None
    decoding: DecodingConfig = DecodingConfig()
    training: TrainingConfig = TrainingConfig()
    rouge: RougeConfig = RougeConfig()
    embedder: EmbedderConfig = EmbedderConfig()
    output_dir: Path = Path("runs/default")
    seed: int = 13
    workers: int = 1

    def step_dir(self, name: str) -> Path:
        return self.output_dir / name

    def snapshot(self) -> dict:
        """Fully-resolved, JSON-serializable view recorded in manifests."""
        return {
            "dataset": {
                "format": self.dataset.format,
                "train": _path_str(self.dataset.train),
                "val": _path_str(self.dataset.val),
                "test": _path_str(self.dataset.test),
            },
            "backend": {"kind": self.backend.kind, "settings": self.backend.settings},
            "predictor": {"variant": self.predictor_variant.value},
            "summarizer": {
                "length_aware": self.summarizer.length_aware,
                "multitask": self.summarizer.multitask,
            },
            "length_source": self.length_source,
            "fixed_length": self.fixed_length,
            "decoding": {
                "beam_width": self.decoding.beam_width,
                "max_new_words": self.decoding.max_new_words,
                "min_new_words": self.decoding.min_new_words,
                "seed": self.decoding.seed,
            },
            "training": {
                "epochs": self.training.epochs,
                "learning_rate": self.training.learning_rate,
                "batch_size": self.training.batch_size,
                "seed": self.training.seed,
            },
            "rouge": {
                "n_values": list(self.rouge.n_values),
                "use_lcs": self.rouge.use_lcs,
                "lowercase": self.rouge.lowercase,
                "token_rule": self.rouge.token_rule,
                "multi_ref": self.rouge.multi_ref,
            },
            "embedder": {"kind": self.embedder.kind, "dim": self.embedder.dim},
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "workers": self.workers,
        }


def _path_str(path: Path | None) -> str | None:
    return None if path is None else str(path)


def _opt_path(value, base: Path) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    return path


def _section(data: Mapping, key: str) -> dict:
    value = data.get(key) or {}
    if not isinstance(value, Mapping):
        raise ConfigError(f"config section {key!r} must be a mapping")
    return dict(value)


def config_from_dict(data: Mapping, base_dir: Path = Path(".")) -> ExperimentConfig:
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    ds = _section(data, "dataset")
    fmt = ds.get("format", "dialogsum")
    if fmt not in FORMATS:
        raise ConfigError(f"unknown dataset format {fmt!r}; expected one of {FORMATS}")
    dataset = DatasetConfig(
        format=fmt,
        train=_opt_path(ds.get("train"), base_dir),
        val=_opt_path(ds.get("val"), base_dir),
        test=_opt_path(ds.get("test"), base_dir),
    )
    for split in dataset.configured_splits():
        path = dataset.path_for(split)
        if not path.exists():
            raise ConfigError(f"dataset {split} file does not exist: {path}")

    be = _section(data, "backend")
    kind = be.get("kind", "toy")
    if kind not in BACKEND_KINDS:
        raise ConfigError(f"unknown backend kind {kind!r}; expected one of {BACKEND_KINDS}")
    backend = BackendConfig(kind=kind, settings=dict(be.get("settings") or {}))

    pred = _section(data, "predictor")
    try:
        variant = PredictorVariant(pred.get("variant", "multi_plus"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    summ = _section(data, "summarizer")
    mode = SummarizerMode(
        length_aware=bool(summ.get("length_aware", False)),
        multitask=bool(summ.get("multitask", False)),
    )

    length_source = data.get("length_source", "none")
    if length_source not in LENGTH_SOURCES:
        raise ConfigError(
            f"unknown length source {length_source!r}; expected one of {LENGTH_SOURCES}"
        )

    try:
        decoding = DecodingConfig(**_section(data, "decoding"))
        training = TrainingConfig(**_section(data, "training"))
        rouge_section = _section(data, "rouge")
        if "n_values" in rouge_section:
            rouge_section["n_values"] = tuple(rouge_section["n_values"])
        rouge_cfg = RougeConfig(**rouge_section)
        embedder = EmbedderConfig(**_section(data, "embedder"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    fixed_length = data.get("fixed_length")
    output_dir = _opt_path(data.get("output_dir", "runs/default"), base_dir)
    return ExperimentConfig(
        dataset=dataset,
        backend=backend,
        predictor_variant=variant,
        summarizer=mode,
        length_source=length_source,
        fixed_length=None if fixed_length is None else int(fixed_length),
        decoding=decoding,
        training=training,
        rouge=rouge_cfg,
        embedder=embedder,
        output_dir=output_dir,
        seed=int(data.get("seed", 13)),
        workers=int(data.get("workers", 1)),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Load a YAML config; relative paths resolve against the config's parent."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, base_dir=path.parent)


def override(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    """Apply non-None flag overrides onto a loaded config."""
    filtered = {k: v for k, v in changes.items() if v is not None}
    return replace(cfg, **filtered) if filtered else cfg
