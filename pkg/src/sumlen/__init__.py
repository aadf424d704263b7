"""Toolkit for studying, predicting, and controlling dialogue summary lengths.

The pipeline: load a DialogSum/SAMSum-style corpus, measure length behavior
against multi-reference human summaries, train templated summary-length
predictors, and drive a pluggable seq2seq backend as a length-aware
summarizer whose obedience to a word budget is measurable.
"""

from ._version import __version__
from .backend import (
    BackendError,
    DecodingConfig,
    LengthObedientBackend,
    LookupBackend,
    Seq2SeqBackend,
    ToyBackend,
    TrainingConfig,
    TrainPair,
    build_backend,
    persist,
    restore,
)
from .corpus import (
    CorpusFormatError,
    Dialogue,
    Example,
    SummaryRef,
    SurfaceFeatures,
    Utterance,
    compression_rate,
    load_corpus,
    save_corpus,
    surface_features,
    word_count,
)
from .metrics import (
    CorrelationTriple,
    HashEmbedder,
    InterHumanReport,
    RankingMatrix,
    RougeConfig,
    ScoreTriple,
    TokenEmbedder,
    abs_len_diff,
    aggregate_rankings,
    bertscore,
    correlations,
    evaluate_generations,
    inter_human,
    length_correlation,
    rouge,
)
from .predictor import (
    LengthPrediction,
    LengthPredictor,
    emit_pseudo_lengths,
    evaluate_predictor,
    predict_length,
    train_predictor,
)
from .summarizer import (
    GenerationRecord,
    SummarizerMode,
    build_pairs,
    length_sweep,
    summarize,
    summarize_corpus,
    train_summarizer,
)
from .templates import (
    LengthBudget,
    ParsedGeneration,
    PredictorVariant,
    parse_generated,
    render_la_input,
    render_la_target,
    render_predictor_input,
    render_predictor_target,
)

__all__ = [
    "__version__",
    "BackendError",
    "CorpusFormatError",
    "CorrelationTriple",
    "DecodingConfig",
    "Dialogue",
    "Example",
    "GenerationRecord",
    "HashEmbedder",
    "InterHumanReport",
    "LengthBudget",
    "LengthObedientBackend",
    "LengthPrediction",
    "LengthPredictor",
    "LookupBackend",
    "ParsedGeneration",
    "PredictorVariant",
    "RankingMatrix",
    "RougeConfig",
    "ScoreTriple",
    "Seq2SeqBackend",
    "SummarizerMode",
    "SummaryRef",
    "SurfaceFeatures",
    "TokenEmbedder",
    "ToyBackend",
    "TrainPair",
    "TrainingConfig",
    "Utterance",
    "abs_len_diff",
    "aggregate_rankings",
    "bertscore",
    "build_backend",
    "build_pairs",
    "compression_rate",
    "correlations",
    "emit_pseudo_lengths",
    "evaluate_generations",
    "evaluate_predictor",
    "inter_human",
    "length_correlation",
    "length_sweep",
    "load_corpus",
    "parse_generated",
    "persist",
    "predict_length",
    "render_la_input",
    "render_la_target",
    "render_predictor_input",
    "render_predictor_target",
    "restore",
    "rouge",
    "save_corpus",
    "summarize",
    "summarize_corpus",
    "surface_features",
    "train_predictor",
    "train_summarizer",
    "word_count",
]
