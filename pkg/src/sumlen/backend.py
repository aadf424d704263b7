"""Pluggable seq2seq engines plus deterministic test doubles.

Real fine-tuning lives behind the ``pretrained`` adapter (optional extra);
the two oracle engines and the toy memorizer let the whole pipeline run and
be verified without any model weights. Trained handles are immutable:
``fine_tune`` returns a new handle and concurrent ``generate`` calls on one
handle never interfere.
"""

from __future__ import annotations

import json
import logging
import re
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import asdict, dataclass
from functools import cached_property
from math import sqrt
from pathlib import Path
from typing import Mapping, Sequence

from ._version import __version__
from .jsonio import write_json
from .templates import TEMPLATE_VERSION, parse_generated

logger = logging.getLogger(__name__)

BACKEND_KINDS = ("toy", "oracle", "pretrained")
ORACLE_RULES = ("length_obedient", "lookup")

_MANIFEST_FILE = "manifest.json"
_STATE_FILE = "state.json"

_FILLER_WORDS = ("alpha", "bravo", "charlie", "delta", "echo", "foxtrot")
_DIALOGUE_ANCHOR = re.compile(r"Dialogue\s*:\s*")


class BackendError(RuntimeError):
    """A backend operation failed or was invoked on the wrong kind."""


@dataclass(frozen=True)
class TrainPair:
    """One supervised (input text, output text) example."""

    source: str
    target: str

    def __post_init__(self) -> None:
        if not self.source:
            raise ValueError("TrainPair.source must be non-empty")
        if not self.target:
            raise ValueError("TrainPair.target must be non-empty")


@dataclass(frozen=True)
class DecodingConfig:
    """Decoding settings, recorded in every run manifest. The defaults are
    conventional summarization choices, not values taken from any study."""

    beam_width: int = 4
    max_new_words: int = 100
    min_new_words: int = 1
    seed: int = 13

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError("beam_width must be positive")
        if self.max_new_words < 1:
            raise ValueError("max_new_words must be positive")
        if not 0 <= self.min_new_words <= self.max_new_words:
            raise ValueError("min_new_words must lie in [0, max_new_words]")


@dataclass(frozen=True)
class TrainingConfig:
    """Fine-tuning settings; defaults are documented choices."""

    epochs: int = 1
    learning_rate: float = 5e-5
    batch_size: int = 8
    seed: int = 13

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def _cap_words(text: str, max_words: int) -> str:
    """Return text unchanged when within the word cap, else the first
    max_words words joined by single spaces."""
    words = text.split()
    if len(words) <= max_words:
        return text
    return " ".join(words[:max_words])


class Seq2SeqBackend(ABC):
    """Text-to-text engine. Generation is deterministic for a fixed
    (handle state, input, DecodingConfig)."""

    kind: str = "abstract"

    def fine_tune(
        self, pairs: Sequence[TrainPair], hyper: TrainingConfig = TrainingConfig()
    ) -> "Seq2SeqBackend":
        raise BackendError(f"backend kind {self.kind!r} is not trainable")

    @abstractmethod
    def generate(self, input_text: str, cfg: DecodingConfig = DecodingConfig()) -> str:
        ...

    @abstractmethod
    def save_state(self, directory: Path) -> dict:
        """Return the JSON state for the manifest; may write blobs under
        ``directory``."""


@dataclass(frozen=True)
class ToyBackend(Seq2SeqBackend):
    """Trainable memorizer: reproduces the target for a known source and
    falls back to the nearest source by token-count cosine otherwise.

    Duplicate sources keep the last target seen. Training converges in one
    epoch by construction, which is enough to exercise every downstream
    contract (memorization, parsing, fallbacks) without model weights.
    """

    pairs: tuple[TrainPair, ...] = ()

    kind = "toy"

    def fine_tune(self, pairs, hyper=TrainingConfig()):
        if not pairs:
            raise BackendError("fine_tune requires at least one training pair")
        trained = ToyBackend(pairs=tuple(pairs))
        for epoch in range(1, hyper.epochs + 1):
            wrong = sum(1 for p in pairs if trained._recall(p.source) != p.target)
            logger.info(
                "toy fine-tune epoch %d/%d: exact-match loss %.4f",
                epoch, hyper.epochs, wrong / len(pairs),
            )
        return trained

    @cached_property
    def _by_source(self) -> dict[str, str]:
        return {p.source: p.target for p in self.pairs}

    @cached_property
    def _vectors(self) -> tuple[tuple[Counter, float], ...]:
        out = []
        for p in self.pairs:
            counts = Counter(p.source.split())
            out.append((counts, sqrt(sum(v * v for v in counts.values()))))
        return tuple(out)

    def _recall(self, source: str) -> str:
        exact = self._by_source.get(source)
        if exact is not None:
            return exact
        if not self.pairs:
            return ""
        probe = Counter(source.split())
        probe_norm = sqrt(sum(v * v for v in probe.values()))
        best_index, best_sim = 0, -1.0
        for i, (counts, norm) in enumerate(self._vectors):
            if probe_norm == 0.0 or norm == 0.0:
                sim = 0.0
            else:
                dot = sum(count * probe[token] for token, count in counts.items())
                sim = dot / (norm * probe_norm)
            if sim > best_sim:
                best_index, best_sim = i, sim
        return self.pairs[best_index].target

    def generate(self, input_text, cfg=DecodingConfig()):
        return _cap_words(self._recall(input_text), cfg.max_new_words)

    def save_state(self, directory):
        return {"pairs": [[p.source, p.target] for p in self.pairs]}

    @classmethod
    def load_state(cls, state: Mapping, directory: Path) -> "ToyBackend":
        return cls(pairs=tuple(TrainPair(s, t) for s, t in state["pairs"]))


@dataclass(frozen=True)
class LengthObedientBackend(Seq2SeqBackend):
    """Oracle that emits exactly the number of words requested by the budget
    anchor in its input (capped by the decoding word limit).

    Words are drawn from the dialogue portion of the input so outputs overlap
    the source; a fixed filler vocabulary is cycled when no dialogue is found.
    Inputs without a budget anchor get ``default_len`` words.
    """

    default_len: int = 10

    kind = "oracle"
    rule = "length_obedient"

    def generate(self, input_text, cfg=DecodingConfig()):
        parsed = parse_generated("length_only", input_text)
        requested = parsed.length if parsed.ok else self.default_len
        n = min(requested, cfg.max_new_words)
        match = _DIALOGUE_ANCHOR.search(input_text)
        words = input_text[match.end():].split() if match else []
        if not words:
            words = list(_FILLER_WORDS)
        return " ".join(words[i % len(words)] for i in range(n))

    def save_state(self, directory):
        return {"rule": self.rule, "default_len": self.default_len}

    @classmethod
    def load_state(cls, state: Mapping, directory: Path) -> "LengthObedientBackend":
        return cls(default_len=int(state["default_len"]))


@dataclass(frozen=True)
class LookupBackend(Seq2SeqBackend):
    """Oracle mapping known texts (matched as substrings of the input, longest
    key first) to canned outputs. Keyed by dialogue text in practice, since
    rendered prompts embed the dialogue but not its id."""

    table: tuple[tuple[str, str], ...] = ()
    default_output: str = ""

    kind = "oracle"
    rule = "lookup"

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str], default_output: str = "") -> "LookupBackend":
        items = sorted(mapping.items(), key=lambda kv: (-len(kv[0]), kv[0]))
        return cls(table=tuple(items), default_output=default_output)

    def generate(self, input_text, cfg=DecodingConfig()):
        for key, output in self.table:
            if key and key in input_text:
                return _cap_words(output, cfg.max_new_words)
        return _cap_words(self.default_output, cfg.max_new_words)

    def save_state(self, directory):
        return {
            "rule": self.rule,
            "table": [[k, v] for k, v in self.table],
            "default_output": self.default_output,
        }

    @classmethod
    def load_state(cls, state: Mapping, directory: Path) -> "LookupBackend":
        return cls(
            table=tuple((k, v) for k, v in state["table"]),
            default_output=state["default_output"],
        )


def build_backend(kind: str, settings: Mapping | None = None) -> Seq2SeqBackend:
    """Construct a backend from configuration values."""
    settings = dict(settings or {})
    if kind == "toy":
        return ToyBackend()
    if kind == "oracle":
        rule = settings.get("rule", "length_obedient")
        if rule == "length_obedient":
            return LengthObedientBackend(default_len=int(settings.get("default_len", 10)))
        if rule == "lookup":
            return LookupBackend.from_mapping(
                settings.get("table", {}), settings.get("default_output", "")
            )
        raise BackendError(f"unknown oracle rule {rule!r}; expected one of {ORACLE_RULES}")
    if kind == "pretrained":
        from .hf_backend import PretrainedBackend, PretrainedSettings

        return PretrainedBackend(PretrainedSettings(**settings))
    raise BackendError(f"unknown backend kind {kind!r}; expected one of {BACKEND_KINDS}")


def persist(
    backend: Seq2SeqBackend,
    directory: str | Path,
    training: TrainingConfig | None = None,
) -> Path:
    """Write a self-describing backend directory (manifest + state)."""
    if isinstance(backend, ToyBackend) and not backend.pairs:
        raise BackendError("refusing to persist an untrained toy backend")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    state = backend.save_state(directory)
    manifest = {
        "kind": backend.kind,
        "template_version": TEMPLATE_VERSION,
        "version": __version__,
        "state_file": _STATE_FILE,
        "training": None if training is None else asdict(training),
    }
    write_json(directory / _MANIFEST_FILE, manifest)
    write_json(directory / _STATE_FILE, state)
    return directory


def restore(directory: str | Path) -> Seq2SeqBackend:
    """Rebuild a backend from a directory written by :func:`persist`."""
    directory = Path(directory)
    manifest_path = directory / _MANIFEST_FILE
    if not manifest_path.exists():
        raise BackendError(f"no backend manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        state = json.loads(
            (directory / manifest["state_file"]).read_text(encoding="utf-8")
        )
        kind = manifest["kind"]
        if kind == "toy":
            return ToyBackend.load_state(state, directory)
        if kind == "oracle":
            rule = state.get("rule")
            if rule == "length_obedient":
                return LengthObedientBackend.load_state(state, directory)
            if rule == "lookup":
                return LookupBackend.load_state(state, directory)
            raise BackendError(f"unknown oracle rule {rule!r} in {directory}")
        if kind == "pretrained":
            from .hf_backend import PretrainedBackend

            return PretrainedBackend.load_state(state, directory)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise BackendError(f"corrupt backend directory {directory}: {exc}") from exc
    raise BackendError(f"unknown backend kind {kind!r} in {directory}")
