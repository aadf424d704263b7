"""Summary-length predictors: training, inference, evaluation, and pseudo
length emission for the length-aware summarizer.

A predictor is a text-to-text model that reads a rendered dialogue prompt and
writes a rendered length (plus, for the multitask variants, the summary).
The length is emitted as text and parsed back, keeping the backend interface
uniform; unparsable generations fall back to the rounded mean reference
length of the training corpus.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .backend import (
    DecodingConfig,
    Seq2SeqBackend,
    TrainingConfig,
    TrainPair,
    persist,
    restore,
)
from .corpus import Dialogue, Example
from .jsonio import read_json, read_jsonl, write_json, write_jsonl
from .templates import (
    LengthBudget,
    PredictorVariant,
    parse_generated,
    render_predictor_input,
    render_predictor_target,
)

logger = logging.getLogger(__name__)

MIN_PREDICTED = 1
MAX_PREDICTED = 200

# Variant with the lowest validation length error per corpus format; used as
# the default when emitting pseudo lengths.
DEFAULT_VARIANT_BY_FORMAT = {
    "dialogsum": PredictorVariant.MULTI_PLUS,
    "samsum": PredictorVariant.SINGLE_PLUS,
}

_PREDICTOR_FILE = "predictor.json"
_BACKEND_SUBDIR = "backend"


@dataclass(frozen=True)
class LengthPrediction:
    example_id: str
    predicted: int
    fallback_used: bool


@dataclass(frozen=True)
class LengthPredictor:
    """A trained backend bound to its input variant and fallback constant."""

    backend: Seq2SeqBackend
    variant: PredictorVariant
    fallback_len: int


def _clamp(value: int) -> int:
    return max(MIN_PREDICTED, min(MAX_PREDICTED, value))


def predictor_pairs(variant: PredictorVariant, examples: Sequence[Example]) -> list[TrainPair]:
    """One training pair per (example, reference)."""
    return [
        TrainPair(
            source=render_predictor_input(variant, ex.dialogue),
            target=render_predictor_target(variant, ex, i),
        )
        for ex in examples
        for i in range(len(ex.refs))
    ]


def mean_reference_length(examples: Sequence[Example]) -> float:
    lengths = [ref.word_len for ex in examples for ref in ex.refs]
    if not lengths:
        raise ValueError("corpus has no reference summaries")
    return sum(lengths) / len(lengths)


def train_predictor(
    variant: PredictorVariant,
    train_set: Sequence[Example],
    backend: Seq2SeqBackend,
    hyper: TrainingConfig = TrainingConfig(),
) -> LengthPredictor:
    if not train_set:
        raise ValueError("train_predictor requires a non-empty training set")
    trained = backend.fine_tune(predictor_pairs(variant, train_set), hyper)
    fallback = _clamp(round(mean_reference_length(train_set)))
    return LengthPredictor(backend=trained, variant=variant, fallback_len=fallback)


def predict_length(
    predictor: LengthPredictor,
    dialogue: Dialogue,
    cfg: DecodingConfig = DecodingConfig(),
) -> LengthPrediction:
    """Generate and parse a length, clamped to [1, 200]; fall back to the
    training-set mean on parse failure."""
    text = predictor.backend.generate(
        render_predictor_input(predictor.variant, dialogue), cfg
    )
    mode = "length_plus_summary" if predictor.variant.multitask else "length_only"
    parsed = parse_generated(mode, text)
    if parsed.ok and parsed.length is not None:
        return LengthPrediction(dialogue.id, _clamp(parsed.length), fallback_used=False)
    return LengthPrediction(dialogue.id, predictor.fallback_len, fallback_used=True)


def predict_corpus(
    predictor: LengthPredictor,
    examples: Sequence[Example],
    cfg: DecodingConfig = DecodingConfig(),
) -> list[LengthPrediction]:
    return [predict_length(predictor, ex.dialogue, cfg) for ex in examples]


def evaluate_predictor(
    predictions: Sequence[LengthPrediction], test_set: Sequence[Example]
) -> float:
    """Mean over examples of the mean absolute difference between the
    predicted length and each reference length."""
    if not test_set:
        raise ValueError("evaluate_predictor requires a non-empty test set")
    by_id: dict[str, LengthPrediction] = {}
    for pred in predictions:
        if pred.example_id in by_id:
            raise ValueError(f"duplicate prediction for example {pred.example_id!r}")
        by_id[pred.example_id] = pred
    test_ids = {ex.id for ex in test_set}
    if set(by_id) != test_ids:
        missing = sorted(test_ids - set(by_id))[:3]
        unexpected = sorted(set(by_id) - test_ids)[:3]
        raise ValueError(
            f"prediction/example id mismatch (missing={missing}, unexpected={unexpected})"
        )
    per_example = [
        sum(abs(by_id[ex.id].predicted - ref.word_len) for ref in ex.refs) / len(ex.refs)
        for ex in test_set
    ]
    return sum(per_example) / len(per_example)


def emit_pseudo_lengths(
    predictor: LengthPredictor,
    examples: Sequence[Example],
    cfg: DecodingConfig = DecodingConfig(),
) -> dict[str, LengthBudget]:
    """One pseudo budget per example, deterministic under a fixed config."""
    return {
        pred.example_id: LengthBudget(value=pred.predicted, source="pseudo")
        for pred in predict_corpus(predictor, examples, cfg)
    }


def save_predictions(predictions: Sequence[LengthPrediction], path: str | Path) -> Path:
    return write_jsonl(
        path,
        [
            {
                "example_id": p.example_id,
                "predicted": p.predicted,
                "fallback_used": p.fallback_used,
            }
            for p in predictions
        ],
    )


def load_predictions(path: str | Path) -> list[LengthPrediction]:
    return [
        LengthPrediction(
            example_id=rec["example_id"],
            predicted=int(rec["predicted"]),
            fallback_used=bool(rec["fallback_used"]),
        )
        for rec in read_jsonl(path)
    ]


def load_pseudo_budgets(path: str | Path) -> dict[str, LengthBudget]:
    return {
        p.example_id: LengthBudget(value=p.predicted, source="pseudo")
        for p in load_predictions(path)
    }


def save_predictor(
    predictor: LengthPredictor,
    directory: str | Path,
    training: TrainingConfig | None = None,
) -> Path:
    directory = Path(directory)
    persist(predictor.backend, directory / _BACKEND_SUBDIR, training)
    write_json(
        directory / _PREDICTOR_FILE,
        {"variant": predictor.variant.value, "fallback_len": predictor.fallback_len},
    )
    return directory


def load_predictor(directory: str | Path) -> LengthPredictor:
    directory = Path(directory)
    meta_path = directory / _PREDICTOR_FILE
    if not meta_path.exists():
        raise FileNotFoundError(f"no predictor metadata at {meta_path}")
    meta = read_json(meta_path)
    return LengthPredictor(
        backend=restore(directory / _BACKEND_SUBDIR),
        variant=PredictorVariant(meta["variant"]),
        fallback_len=int(meta["fallback_len"]),
    )
