"""Shared fixtures: synthetic corpora and optional real dataset discovery."""

from __future__ import annotations

import os
import random
from pathlib import Path

import pytest

from sumlen.corpus import Dialogue, Example, SummaryRef, save_corpus

DATA_ENV = "SUMLEN_DATA_DIR"

_WORDS = (
    "the picnic party meeting report plan lunch call project trip game visit "
    "weather friend ticket garden coffee market school doctor music movie book "
    "train library dinner birthday office weekend morning evening"
).split()


def make_dialogue(id: str, turns: list[tuple[str, str]]) -> Dialogue:
    raw = "\n".join(f"{speaker}: {body}" for speaker, body in turns)
    return Dialogue.from_raw(id, raw)


def make_example(
    id: str,
    turns: list[tuple[str, str]],
    summaries: list[str],
    split: str = "train",
) -> Example:
    refs = tuple(SummaryRef.from_text(i, text) for i, text in enumerate(summaries, start=1))
    return Example(dialogue=make_dialogue(id, turns), refs=refs, split=split)


def random_sentence(rng: random.Random, n_words: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n_words))


def synthetic_examples(
    n: int, n_refs: int = 1, split: str = "train", seed: int = 0
) -> list[Example]:
    rng = random.Random(seed)
    examples = []
    for i in range(n):
        n_turns = rng.randint(2, 5)
        turns = [
            (f"#Person{(t % 2) + 1}#", random_sentence(rng, rng.randint(4, 12)))
            for t in range(n_turns)
        ]
        summaries = [random_sentence(rng, rng.randint(5, 25)) for _ in range(n_refs)]
        examples.append(make_example(f"{split}_{i}", turns, summaries, split))
    return examples


def write_corpus_file(examples, path: Path) -> Path:
    save_corpus(examples, path)
    return path


@pytest.fixture
def tiny_example() -> Example:
    return make_example(
        "ex0",
        [("#Person1#", "shall we plan the picnic for saturday"),
         ("#Person2#", "yes the weather report says sun all day")],
        ["They plan a picnic for saturday."],
    )


@pytest.fixture
def multi_ref_example() -> Example:
    return make_example(
        "ex1",
        [("#Person1#", "can you send the project report today"),
         ("#Person2#", "sure it will be ready after lunch")],
        [
            "The report will be sent after lunch.",
            "A project report is promised for today after lunch.",
            "The report comes after lunch.",
        ],
        split="test",
    )


def _data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, Path(__file__).resolve().parent.parent / "data"))


def dataset_path_or_skip(filename: str) -> Path:
    path = _data_dir() / filename
    if not path.exists():
        pytest.skip(
            f"dataset file {path} not available; set ${DATA_ENV} or place files under ./data"
        )
    return path
