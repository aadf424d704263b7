"""Input/target text formats for length predictors and summarizers, with
inverse parsing of generated text.

All formats are fixed strings: clauses end with a period, numeric fields are
prefixed with ``#``, and a single space separates clauses. The parser is the
inverse of the renderers and is whitespace-tolerant around the anchors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .corpus import Dialogue, Example, surface_features

TEMPLATE_VERSION = "1"

BUDGET_SOURCES = ("gold", "pseudo", "user")
PARSE_MODES = ("length_only", "length_plus_summary", "summary_only")

_LENGTH_ANCHOR = re.compile(r"Summary\s+length\s*:\s*#\s*(\d+)")
_SUMMARY_ANCHOR = re.compile(r"Summary\s*:\s*")


class PredictorVariant(str, Enum):
    """The five input/output layouts of the length-predictor family."""

    SURFACE = "surface"
    SINGLE = "single"
    SINGLE_PLUS = "single_plus"
    MULTI = "multi"
    MULTI_PLUS = "multi_plus"

    @property
    def multitask(self) -> bool:
        """True for variants whose target carries the summary text alongside
        its length (multi shares single's input; multi_plus shares
        single_plus's)."""
        return self in (PredictorVariant.MULTI, PredictorVariant.MULTI_PLUS)

    @property
    def uses_surface(self) -> bool:
        return self in (
            PredictorVariant.SURFACE,
            PredictorVariant.SINGLE_PLUS,
            PredictorVariant.MULTI_PLUS,
        )

    @property
    def uses_dialogue(self) -> bool:
        return self is not PredictorVariant.SURFACE


@dataclass(frozen=True)
class LengthBudget:
    """A desired summary length in words, with its provenance."""

    value: int
    source: str

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or not 1 <= self.value <= 1000:
            raise ValueError(f"length budget must be an integer in [1, 1000], got {self.value!r}")
        if self.source not in BUDGET_SOURCES:
            raise ValueError(f"unknown budget source {self.source!r}; expected one of {BUDGET_SOURCES}")


def render_surface(dialogue: Dialogue) -> str:
    feats = surface_features(dialogue)
    return (
        f"Length of dialogue: #{feats.dialogue_word_count}. "
        f"Number of utterance: #{feats.utterance_count}."
    )


def render_dialogue(dialogue: Dialogue) -> str:
    return f"Dialogue: {dialogue.raw_text}."


def render_predictor_input(variant: PredictorVariant, dialogue: Dialogue) -> str:
    parts = []
    if variant.uses_surface:
        parts.append(render_surface(dialogue))
    if variant.uses_dialogue:
        parts.append(render_dialogue(dialogue))
    return " ".join(parts)


def _ref_for(example: Example, ref_index: int):
    if not 0 <= ref_index < len(example.refs):
        raise IndexError(
            f"reference index {ref_index} out of range for example "
            f"{example.id!r} with {len(example.refs)} references"
        )
    return example.refs[ref_index]


def render_predictor_target(variant: PredictorVariant, example: Example, ref_index: int) -> str:
    ref = _ref_for(example, ref_index)
    if variant.multitask:
        return f"Summary length: #{ref.word_len}. Summary: {ref.text}"
    return f"Summary length: #{ref.word_len}."


def render_la_input(budget: LengthBudget, dialogue: Dialogue) -> str:
    return f"Summary length: #{budget.value}. {render_dialogue(dialogue)}"


def render_la_target(multitask: bool, example: Example, ref_index: int) -> str:
    ref = _ref_for(example, ref_index)
    if multitask:
        return f"Summary length: #{ref.word_len}. Summary: {ref.text}"
    return ref.text


@dataclass(frozen=True)
class ParsedGeneration:
    """Outcome of parsing generated text. Parsing never raises on arbitrary
    input; a failed parse keeps the raw text so callers can apply fallbacks."""

    length: int | None
    summary: str | None
    ok: bool
    raw: str


def parse_generated(mode: str, text: str) -> ParsedGeneration:
    """Invert the rendered formats.

    length_only reads the first integer after the length anchor;
    length_plus_summary additionally requires a summary anchor and returns
    everything after it; summary_only passes the text through.
    """
    if mode not in PARSE_MODES:
        raise ValueError(f"unknown parse mode {mode!r}; expected one of {PARSE_MODES}")
    if mode == "summary_only":
        return ParsedGeneration(length=None, summary=text, ok=True, raw=text)
    match = _LENGTH_ANCHOR.search(text)
    if match is None:
        return ParsedGeneration(length=None, summary=None, ok=False, raw=text)
    length = int(match.group(1))
    if mode == "length_only":
        return ParsedGeneration(length=length, summary=None, ok=True, raw=text)
    tail = _SUMMARY_ANCHOR.search(text, match.end())
    if tail is None:
        return ParsedGeneration(length=length, summary=None, ok=False, raw=text)
    return ParsedGeneration(length=length, summary=text[tail.end():], ok=True, raw=text)
