"""Loading, validation, and statistics for dialogue summarization corpora.

A corpus file is line-delimited UTF-8 JSON, one record per dialogue:

    {"id": "train_3", "dialogue": "...", "summary": "..."}

Multi-reference records (the DialogSum-style test split) carry
``summary1``/``summary2``/``summary3`` instead of ``summary``. Turns inside
``dialogue`` are separated by newlines and written ``<speaker>: <body>``;
a line without a colon is kept as a tag-only turn. Unknown record fields
are preserved on the example and survive a save/load round trip.

Summary length, everywhere in this package, means the number of
whitespace-separated words.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

TURN_DELIMITER = "\n"
SPLITS = ("train", "val", "test")
FORMATS = ("dialogsum", "samsum")

_MULTI_REF_FIELDS = ("summary1", "summary2", "summary3")


class CorpusFormatError(ValueError):
    """A corpus file or record does not match the expected layout."""


def word_count(text: str) -> int:
    """Count maximal non-whitespace runs; the corpus-wide notion of length."""
    return len(text.split())


@dataclass(frozen=True)
class Utterance:
    """One dialogue turn. ``tagged`` is False when the source line carried no
    ``speaker:`` delimiter, in which case ``speaker`` holds the whole line."""

    speaker: str
    text: str
    tagged: bool = True


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Utterance, ...]
    raw_text: str

    @classmethod
    def from_raw(cls, id: str, raw_text: str) -> "Dialogue":
        """Parse the newline-delimited turn structure out of ``raw_text``.

        The parse is lossless: :meth:`flatten` reproduces ``raw_text`` exactly.
        """
        if not raw_text:
            raise CorpusFormatError(f"dialogue {id!r}: empty dialogue text")
        turns = []
        for i, line in enumerate(raw_text.split(TURN_DELIMITER), start=1):
            if not line:
                raise CorpusFormatError(f"dialogue {id!r}: empty turn at position {i}")
            speaker, colon, body = line.partition(":")
            if not colon:
                turns.append(Utterance(speaker=line, text="", tagged=False))
                continue
            if not speaker:
                raise CorpusFormatError(f"dialogue {id!r}: turn {i} has an empty speaker tag")
            turns.append(Utterance(speaker=speaker, text=body))
        return cls(id=id, turns=tuple(turns), raw_text=raw_text)

    def flatten(self) -> str:
        """Reassemble the turns; equals ``raw_text`` for parsed dialogues."""
        lines = [t.speaker + ":" + t.text if t.tagged else t.speaker for t in self.turns]
        return TURN_DELIMITER.join(lines)


@dataclass(frozen=True)
class SummaryRef:
    annotator_id: int
    text: str
    word_len: int

    @classmethod
    def from_text(cls, annotator_id: int, text: str) -> "SummaryRef":
        return cls(annotator_id=annotator_id, text=text, word_len=word_count(text))


@dataclass(frozen=True)
class Example:
    dialogue: Dialogue
    refs: tuple[SummaryRef, ...]
    split: str
    extras: Mapping[str, object] = field(default_factory=dict)

    @property
    def id(self) -> str:
        return self.dialogue.id


@dataclass(frozen=True)
class SurfaceFeatures:
    dialogue_word_count: int
    utterance_count: int


def surface_features(dialogue: Dialogue) -> SurfaceFeatures:
    """Whitespace word count of the flattened dialogue (speaker tags count)
    and the number of turns."""
    return SurfaceFeatures(
        dialogue_word_count=word_count(dialogue.raw_text),
        utterance_count=len(dialogue.turns),
    )


def _expected_ref_count(format: str, split: str) -> int:
    if format == "dialogsum" and split == "test":
        return 3
    return 1


def _example_from_record(record: dict, split: str, expected_refs: int, where: str) -> Example:
    # "fname" is accepted as an id alias so published DialogSum-style files
    # load unmodified.
    if "id" in record:
        id_field = "id"
    elif "fname" in record:
        id_field = "fname"
    else:
        raise CorpusFormatError(f"{where}: missing required field 'id'")
    dialogue_text = record.get("dialogue")
    if dialogue_text is None:
        raise CorpusFormatError(f"{where}: missing required field 'dialogue'")
    if not isinstance(dialogue_text, str):
        raise CorpusFormatError(f"{where}: field 'dialogue' is not a string")

    has_multi = any(f in record for f in _MULTI_REF_FIELDS)
    if "summary" in record and has_multi:
        raise CorpusFormatError(f"{where}: both 'summary' and 'summary1..3' present")
    if "summary" in record:
        ref_texts = [record["summary"]]
        consumed = {id_field, "dialogue", "summary"}
    elif has_multi:
        for fieldname in _MULTI_REF_FIELDS:
            if fieldname not in record:
                raise CorpusFormatError(f"{where}: missing required field '{fieldname}'")
        ref_texts = [record[f] for f in _MULTI_REF_FIELDS]
        consumed = {id_field, "dialogue", *_MULTI_REF_FIELDS}
    else:
        raise CorpusFormatError(f"{where}: missing required field 'summary'")

    if len(ref_texts) != expected_refs:
        raise CorpusFormatError(
            f"{where}: expected {expected_refs} reference summaries for this "
            f"format/split, found {len(ref_texts)}"
        )
    refs = []
    for i, text in enumerate(ref_texts, start=1):
        if not isinstance(text, str) or not text.strip():
            raise CorpusFormatError(f"{where}: reference summary {i} is empty")
        refs.append(SummaryRef.from_text(i, text))

    try:
        dialogue = Dialogue.from_raw(str(record[id_field]), dialogue_text)
    except CorpusFormatError as exc:
        raise CorpusFormatError(f"{where}: {exc}") from exc
    extras = {k: v for k, v in record.items() if k not in consumed}
    return Example(dialogue=dialogue, refs=tuple(refs), split=split, extras=extras)


def load_corpus(path: str | Path, format: str, split: str) -> list[Example]:
    """Load one split of a line-delimited corpus file.

    Raises:
        CorpusFormatError: naming the offending line or field on malformed
            input, and when the file holds zero records.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown corpus format {format!r}; expected one of {FORMATS}")
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}; expected one of {SPLITS}")
    path = Path(path)
    expected_refs = _expected_ref_count(format, split)
    examples: list[Example] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{where}: malformed record: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"{where}: record is not a JSON object")
            examples.append(_example_from_record(record, split, expected_refs, where))
    if not examples:
        raise CorpusFormatError(f"{path}: no records found")
    return examples


def save_corpus(examples: Sequence[Example], path: str | Path) -> Path:
    """Write examples back to the line-delimited record layout."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            record: dict[str, object] = {"id": ex.id, "dialogue": ex.dialogue.raw_text}
            if len(ex.refs) == 1:
                record["summary"] = ex.refs[0].text
            else:
                for ref in ex.refs:
                    record[f"summary{ref.annotator_id}"] = ref.text
            for key in sorted(ex.extras):
                record[key] = ex.extras[key]
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def compression_rate(examples: Sequence[Example]) -> float:
    """Total summary words over total dialogue words, summed across
    example-reference pairs (a multi-reference dialogue counts once per
    reference)."""
    if not examples:
        raise ValueError("compression_rate requires a non-empty corpus")
    summary_words = 0
    dialogue_words = 0
    for ex in examples:
        d_words = word_count(ex.dialogue.raw_text)
        for ref in ex.refs:
            summary_words += ref.word_len
            dialogue_words += d_words
    if dialogue_words == 0:
        raise ValueError("corpus has no dialogue words")
    return summary_words / dialogue_words


def split_stats(examples: Sequence[Example]) -> dict:
    """Counts and compression for one split.

    Dialogue-level and summary-level sizes are both reported because the two
    counting conventions disagree for multi-reference splits.
    """
    return {
        "dialogues": len(examples),
        "summaries": sum(len(ex.refs) for ex in examples),
        "compression_rate": compression_rate(examples),
    }
