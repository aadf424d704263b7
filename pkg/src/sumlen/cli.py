"""Command-line pipeline for the dialogue summary-length toolkit.

Steps communicate only through files under the configured output directory,
so heavyweight backend runs can happen on other machines. Every step writes
a manifest with the config snapshot, seed, and package version; reruns with
identical config and deterministic backends are byte-identical.
"""

from __future__ import annotations

import functools
import logging
import os
import sys
from pathlib import Path

import click

from ._version import __version__
from .backend import BackendError, build_backend, persist, restore
from .config import ConfigError, ExperimentConfig, load_config, override
from .corpus import CorpusFormatError, load_corpus, split_stats
from .jsonio import read_json, write_json
from .metrics import (
    HashEmbedder,
    TOKENIZATION_NOTE,
    bertscore_generations,
    evaluate_generations,
    inter_human,
    length_correlation,
)
from .predictor import (
    evaluate_predictor,
    load_predictor,
    predict_corpus,
    save_predictions,
    save_predictor,
    train_predictor,
)
from .reports import (
    combined_tables,
    correlation_markdown,
    correlation_row,
    bertscore_markdown,
    bertscore_row,
    rouge_markdown,
    rouge_row,
    stats_markdown,
    stats_rows,
    write_csv,
    _CORR_HEADER,
    _ROUGE_HEADER,
    _STATS_HEADER,
    words,
)
from . import reports
from .summarizer import (
    SummarizerMode,
    length_sweep,
    load_generations,
    save_generations,
    summarize_corpus,
    train_summarizer,
)
from .predictor import load_pseudo_budgets

logger = logging.getLogger(__name__)

CACHE_DIR_ENV = "SUMLEN_CACHE_DIR"

_CONFIG_OPTION = click.option(
    "--config", "-c", "config_path", required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Experiment config file (YAML).",
)


def _step(fn):
    """Translate domain errors into a named-cause nonzero exit."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, CorpusFormatError, BackendError, ValueError, OSError) as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc

    return wrapper


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_DIR_ENV, Path.home() / ".cache" / "sumlen"))


def _load_cfg(config_path: Path, **overrides) -> ExperimentConfig:
    return override(load_config(config_path), **overrides)


def _write_manifest(step_dir: Path, subcommand: str, cfg: ExperimentConfig,
                    inputs: dict | None = None, outputs: list[str] | None = None) -> None:
    write_json(
        step_dir / "manifest.json",
        {
            "subcommand": subcommand,
            "config": cfg.snapshot(),
            "seed": cfg.seed,
            "package_version": __version__,
            "inputs": inputs or {},
            "outputs": sorted(outputs or []),
        },
    )


def _load_split(cfg: ExperimentConfig, split: str):
    path = cfg.dataset.path_for(split)
    return load_corpus(path, cfg.dataset.format, split)


def _triple_dict(triple) -> dict:
    return {"precision": triple.precision, "recall": triple.recall, "f1": triple.f1}


def _corr_dict(corr) -> dict:
    return {
        "pearson_r": corr.pearson_r,
        "spearman_rho": corr.spearman_rho,
        "kendall_tau": corr.kendall_tau,
    }


def _system_label(cfg: ExperimentConfig) -> str:
    return f"{cfg.summarizer.label}({cfg.length_source})"


def _build_embedder(cfg: ExperimentConfig):
    if cfg.embedder.kind == "hash":
        return HashEmbedder(dim=cfg.embedder.dim)
    raise ConfigError(
        f"no built-in embedder of kind {cfg.embedder.kind!r}; plug a TokenEmbedder via the API"
    )


def _resolve_summarizer(cfg: ExperimentConfig, summarizer_dir: Path | None):
    """A trained handle from disk when available; oracle backends may be
    built straight from config since they are their configuration."""
    directory = summarizer_dir or cfg.step_dir("summarizer")
    meta_path = directory / "summarizer.json"
    if meta_path.exists():
        meta = read_json(meta_path)
        stored = SummarizerMode(
            length_aware=bool(meta["length_aware"]), multitask=bool(meta["multitask"])
        )
        if stored != cfg.summarizer:
            raise ConfigError(
                f"summarizer at {directory} was trained with mode {stored.label!r} "
                f"but the config asks for {cfg.summarizer.label!r}"
            )
        return restore(directory / "backend"), str(directory)
    if cfg.backend.kind == "oracle":
        return build_backend(cfg.backend.kind, cfg.backend.settings), "config"
    raise BackendError(
        f"no trained summarizer at {directory}; run 'summarizer train' first "
        "(oracle backends alone may be used without training)"
    )


@click.group()
@click.option("--verbose", is_flag=True, help="Log at DEBUG level.")
@click.version_option(version=__version__, prog_name="sumlen")
def main(verbose: bool) -> None:
    """Measure, predict, and control dialogue summary lengths."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


# --------------------------------------------------------------------------
# data


@main.group()
def data() -> None:
    """Corpus loading and statistics."""


@data.command("stats")
@_CONFIG_OPTION
@click.option("--splits", default=None, help="Comma-separated subset of train,val,test.")
@_step
def data_stats(config_path: Path, splits: str | None) -> None:
    """Counts per split and compression rate, as JSON, CSV, and markdown."""
    cfg = _load_cfg(config_path)
    wanted = splits.split(",") if splits else cfg.dataset.configured_splits()
    if not wanted:
        raise ConfigError("config names no dataset files")
    per_split = {}
    combined = []
    for split in wanted:
        examples = _load_split(cfg, split.strip())
        per_split[split.strip()] = split_stats(examples)
        combined.extend(examples)
    stats = {
        "format": cfg.dataset.format,
        "splits": per_split,
        "overall": split_stats(combined),
    }
    step_dir = cfg.step_dir("data_stats")
    write_json(step_dir / "stats.json", stats)
    md = stats_markdown(stats)
    (step_dir / "stats.md").write_text(md, encoding="utf-8")
    write_csv(step_dir / "stats.csv", _STATS_HEADER, stats_rows(stats))
    _write_manifest(step_dir, "data stats", cfg,
                    inputs={"splits": sorted(per_split)},
                    outputs=["stats.json", "stats.md", "stats.csv"])
    click.echo(md)


# --------------------------------------------------------------------------
# predictor


@main.group()
def predictor() -> None:
    """Summary-length predictors."""


@predictor.command("train")
@_CONFIG_OPTION
@click.option("--split", default="train", type=click.Choice(["train", "val", "test"]))
@_step
def predictor_train(config_path: Path, split: str) -> None:
    """Fine-tune the configured predictor variant."""
    cfg = _load_cfg(config_path)
    examples = _load_split(cfg, split)
    backend = build_backend(cfg.backend.kind, cfg.backend.settings)
    trained = train_predictor(cfg.predictor_variant, examples, backend, cfg.training)
    step_dir = cfg.step_dir("predictor")
    save_predictor(trained, step_dir, cfg.training)
    _write_manifest(step_dir, "predictor train", cfg,
                    inputs={"split": split, "examples": len(examples)},
                    outputs=["predictor.json", "backend/manifest.json", "backend/state.json"])
    click.echo(
        f"trained {cfg.predictor_variant.value} predictor on {len(examples)} examples "
        f"(fallback length {trained.fallback_len}) -> {step_dir}"
    )


@predictor.command("eval")
@_CONFIG_OPTION
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@click.option("--predictor-dir", type=click.Path(path_type=Path), default=None,
              help="Trained predictor directory (default: <output_dir>/predictor).")
@_step
def predictor_eval(config_path: Path, split: str, predictor_dir: Path | None) -> None:
    """Mean absolute length difference of the predictor on a split."""
    cfg = _load_cfg(config_path)
    directory = predictor_dir or cfg.step_dir("predictor")
    trained = load_predictor(directory)
    examples = _load_split(cfg, split)
    predictions = predict_corpus(trained, examples, cfg.decoding)
    delta = evaluate_predictor(predictions, examples)
    report = {
        "variant": trained.variant.value,
        "split": split,
        "n_examples": len(examples),
        "length_delta": delta,
        "fallback_rate": sum(p.fallback_used for p in predictions) / len(predictions),
        "inter_human_length_delta": None,
    }
    if all(len(ex.refs) >= 2 for ex in examples):
        report["inter_human_length_delta"] = inter_human(examples, cfg.rouge).length_delta
    step_dir = cfg.step_dir("predictor_eval")
    save_predictions(predictions, step_dir / "predictions.jsonl")
    write_json(step_dir / "report.json", report)
    _write_manifest(step_dir, "predictor eval", cfg,
                    inputs={"split": split, "predictor_dir": str(directory)},
                    outputs=["predictions.jsonl", "report.json"])
    click.echo(f"{trained.variant.value} on {split}: length delta {delta:.2f}")


@predictor.command("emit")
@_CONFIG_OPTION
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@click.option("--predictor-dir", type=click.Path(path_type=Path), default=None)
@_step
def predictor_emit(config_path: Path, split: str, predictor_dir: Path | None) -> None:
    """Write pseudo lengths for a split, one record per example."""
    cfg = _load_cfg(config_path)
    directory = predictor_dir or cfg.step_dir("predictor")
    trained = load_predictor(directory)
    examples = _load_split(cfg, split)
    predictions = predict_corpus(trained, examples, cfg.decoding)
    step_dir = cfg.step_dir("pseudo_lengths")
    save_predictions(predictions, step_dir / "pseudo_lengths.jsonl")
    _write_manifest(step_dir, "predictor emit", cfg,
                    inputs={"split": split, "predictor_dir": str(directory)},
                    outputs=["pseudo_lengths.jsonl"])
    click.echo(f"wrote {len(predictions)} pseudo lengths -> {step_dir / 'pseudo_lengths.jsonl'}")


# --------------------------------------------------------------------------
# summarizer


@main.group()
def summarizer() -> None:
    """Baseline and length-aware summarizers."""


@summarizer.command("train")
@_CONFIG_OPTION
@click.option("--split", default="train", type=click.Choice(["train", "val", "test"]))
@_step
def summarizer_train(config_path: Path, split: str) -> None:
    """Fine-tune the configured summarizer mode (training budgets are gold)."""
    cfg = _load_cfg(config_path)
    examples = _load_split(cfg, split)
    backend = build_backend(cfg.backend.kind, cfg.backend.settings)
    trained = train_summarizer(cfg.summarizer, examples, backend, cfg.training)
    step_dir = cfg.step_dir("summarizer")
    persist(trained, step_dir / "backend", cfg.training)
    write_json(step_dir / "summarizer.json",
               {"length_aware": cfg.summarizer.length_aware,
                "multitask": cfg.summarizer.multitask})
    _write_manifest(step_dir, "summarizer train", cfg,
                    inputs={"split": split, "examples": len(examples)},
                    outputs=["summarizer.json", "backend/manifest.json", "backend/state.json"])
    click.echo(f"trained {cfg.summarizer.label} summarizer on {len(examples)} examples -> {step_dir}")


@summarizer.command("infer")
@_CONFIG_OPTION
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@click.option("--summarizer-dir", type=click.Path(path_type=Path), default=None)
@click.option("--pseudo-lengths", "pseudo_path", type=click.Path(path_type=Path), default=None,
              help="Pseudo-length file (default: <output_dir>/pseudo_lengths/pseudo_lengths.jsonl).")
@click.option("--workers", type=int, default=None, help="Parallel generation workers.")
@_step
def summarizer_infer(config_path: Path, split: str, summarizer_dir: Path | None,
                     pseudo_path: Path | None, workers: int | None) -> None:
    """Generate summaries for a split under the configured length source."""
    cfg = _load_cfg(config_path, workers=workers)
    handle, source_desc = _resolve_summarizer(cfg, summarizer_dir)
    examples = _load_split(cfg, split)
    budgets = None
    inputs = {"split": split, "summarizer": source_desc}
    if cfg.length_source == "pseudo":
        path = pseudo_path or cfg.step_dir("pseudo_lengths") / "pseudo_lengths.jsonl"
        if not path.exists():
            raise ConfigError(f"missing pseudo-length file {path}; run 'predictor emit' first")
        budgets = load_pseudo_budgets(path)
        inputs["pseudo_lengths"] = str(path)
    records = summarize_corpus(
        handle, cfg.summarizer, examples, cfg.length_source,
        budgets=budgets, fixed_len=cfg.fixed_length, cfg=cfg.decoding, workers=cfg.workers,
    )
    step_dir = cfg.step_dir("generations")
    save_generations(records, step_dir / "generations.jsonl")
    _write_manifest(step_dir, "summarizer infer", cfg, inputs=inputs,
                    outputs=["generations.jsonl"])
    click.echo(f"wrote {len(records)} generations -> {step_dir / 'generations.jsonl'}")


@summarizer.command("sweep")
@_CONFIG_OPTION
@click.option("--lengths", required=True, help="Comma-separated word budgets, e.g. 5,10,15.")
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@click.option("--summarizer-dir", type=click.Path(path_type=Path), default=None)
@click.option("--example-id", default=None, help="Sweep only this dialogue.")
@click.option("--limit", type=int, default=None, help="Sweep only the first N dialogues.")
@_step
def summarizer_sweep(config_path: Path, lengths: str, split: str,
                     summarizer_dir: Path | None, example_id: str | None,
                     limit: int | None) -> None:
    """Controllability probe: one generation per requested budget per dialogue."""
    cfg = _load_cfg(config_path)
    if not cfg.summarizer.length_aware:
        raise ConfigError("the sweep needs a length-aware summarizer mode")
    try:
        budgets = [int(part) for part in lengths.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid --lengths value {lengths!r}: {exc}") from exc
    if not budgets:
        raise ConfigError("--lengths names no budgets")
    handle, source_desc = _resolve_summarizer(cfg, summarizer_dir)
    examples = _load_split(cfg, split)
    if example_id is not None:
        examples = [ex for ex in examples if ex.id == example_id]
        if not examples:
            raise ConfigError(f"no example with id {example_id!r} in {split}")
    if limit is not None:
        examples = examples[:limit]
    records = []
    for ex in examples:
        records.extend(
            length_sweep(handle, ex.dialogue, budgets, cfg.decoding, cfg.summarizer.multitask)
        )
    step_dir = cfg.step_dir("sweep")
    save_generations(records, step_dir / "sweep.jsonl")
    _write_manifest(step_dir, "summarizer sweep", cfg,
                    inputs={"split": split, "summarizer": source_desc,
                            "lengths": sorted(budgets), "dialogues": len(examples)},
                    outputs=["sweep.jsonl"])
    click.echo(f"wrote {len(records)} sweep generations -> {step_dir / 'sweep.jsonl'}")


# --------------------------------------------------------------------------
# eval


@main.group(name="eval")
def eval_group() -> None:
    """Score generation records against the corpus."""


def _load_eval_inputs(cfg: ExperimentConfig, split: str, generations: Path | None):
    path = generations or cfg.step_dir("generations") / "generations.jsonl"
    if not path.exists():
        raise ConfigError(f"missing generations file {path}; run 'summarizer infer' first")
    return load_generations(path), _load_split(cfg, split), path


@eval_group.command("rouge")
@_CONFIG_OPTION
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@click.option("--generations", type=click.Path(path_type=Path), default=None)
@_step
def eval_rouge(config_path: Path, split: str, generations: Path | None) -> None:
    """ROUGE-1/2/L precision, recall, F1 plus absolute length difference."""
    cfg = _load_cfg(config_path)
    records, examples, gen_path = _load_eval_inputs(cfg, split, generations)
    result = evaluate_generations(records, examples, cfg.rouge)
    report = {
        "system": _system_label(cfg),
        "split": split,
        "n_examples": result.n_examples,
        "n_records": result.n_records,
        "rouge": {name: _triple_dict(t) for name, t in result.rouge.items()},
        "length_delta": result.length_delta,
        "notes": TOKENIZATION_NOTE,
    }
    step_dir = cfg.step_dir("eval_rouge")
    write_json(step_dir / "report.json", report)
    row = rouge_row(report["system"], report["rouge"], report["length_delta"])
    md = rouge_markdown(f"ROUGE on {split}", [row])
    (step_dir / "report.md").write_text(md, encoding="utf-8")
    write_csv(step_dir / "report.csv", _ROUGE_HEADER, [row])
    _write_manifest(step_dir, "eval rouge", cfg,
                    inputs={"split": split, "generations": str(gen_path)},
                    outputs=["report.json", "report.md", "report.csv"])
    click.echo(md)


@eval_group.command("bertscore")
@_CONFIG_OPTION
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@click.option("--generations", type=click.Path(path_type=Path), default=None)
@_step
def eval_bertscore(config_path: Path, split: str, generations: Path | None) -> None:
    """Embedding-based greedy-matching score with the configured embedder."""
    cfg = _load_cfg(config_path)
    records, examples, gen_path = _load_eval_inputs(cfg, split, generations)
    triple = bertscore_generations(records, examples, _build_embedder(cfg), cfg.rouge.lowercase)
    report = {
        "system": _system_label(cfg),
        "split": split,
        "n_records": len(records),
        "bertscore": _triple_dict(triple),
        "embedder": {"kind": cfg.embedder.kind, "dim": cfg.embedder.dim},
    }
    step_dir = cfg.step_dir("eval_bertscore")
    write_json(step_dir / "report.json", report)
    row = bertscore_row(report["system"], report["bertscore"])
    md = bertscore_markdown(f"BERTScore on {split}", [row])
    (step_dir / "report.md").write_text(md, encoding="utf-8")
    write_csv(step_dir / "report.csv", ["system", "precision", "recall", "f1"], [row])
    _write_manifest(step_dir, "eval bertscore", cfg,
                    inputs={"split": split, "generations": str(gen_path)},
                    outputs=["report.json", "report.md", "report.csv"])
    click.echo(md)


@eval_group.command("correlation")
@_CONFIG_OPTION
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@click.option("--generations", type=click.Path(path_type=Path), default=None)
@_step
def eval_correlation(config_path: Path, split: str, generations: Path | None) -> None:
    """Correlation of output lengths with reference lengths, averaged over annotators."""
    cfg = _load_cfg(config_path)
    records, examples, gen_path = _load_eval_inputs(cfg, split, generations)
    corr = length_correlation(records, examples)
    report = {
        "system": _system_label(cfg),
        "split": split,
        "n_records": len(records),
        "length_correlation": _corr_dict(corr),
    }
    step_dir = cfg.step_dir("eval_correlation")
    write_json(step_dir / "report.json", report)
    row = correlation_row(report["system"], report["length_correlation"])
    md = correlation_markdown(f"Length correlation on {split}", [row])
    (step_dir / "report.md").write_text(md, encoding="utf-8")
    write_csv(step_dir / "report.csv", _CORR_HEADER, [row])
    _write_manifest(step_dir, "eval correlation", cfg,
                    inputs={"split": split, "generations": str(gen_path)},
                    outputs=["report.json", "report.md", "report.csv"])
    click.echo(md)


# --------------------------------------------------------------------------
# analyze


@main.group()
def analyze() -> None:
    """Corpus-level analyses."""


@analyze.command("inter-human")
@_CONFIG_OPTION
@click.option("--split", default="test", type=click.Choice(["train", "val", "test"]))
@_step
def analyze_inter_human(config_path: Path, split: str) -> None:
    """Pairwise annotator agreement on a multi-reference split."""
    cfg = _load_cfg(config_path)
    examples = _load_split(cfg, split)
    result = inter_human(examples, cfg.rouge)
    report = {
        "system": "inter-human",
        "split": split,
        "n_examples": result.n_examples,
        "n_annotators": result.n_annotators,
        "rouge": {name: _triple_dict(t) for name, t in result.rouge.items()},
        "length_delta": result.length_delta,
        "length_correlation": _corr_dict(result.length_correlation),
        "notes": TOKENIZATION_NOTE,
    }
    step_dir = cfg.step_dir("inter_human")
    write_json(step_dir / "report.json", report)
    r_row = rouge_row("inter-human", report["rouge"], report["length_delta"])
    c_row = correlation_row("inter-human", report["length_correlation"])
    md = (
        rouge_markdown(f"Inter-human agreement on {split}", [r_row])
        + "\n"
        + correlation_markdown("Length correlations", [c_row])
        + f"\nNote: {TOKENIZATION_NOTE}.\n"
    )
    (step_dir / "report.md").write_text(md, encoding="utf-8")
    write_csv(step_dir / "report.csv", _ROUGE_HEADER, [r_row])
    _write_manifest(step_dir, "analyze inter-human", cfg,
                    inputs={"split": split, "examples": len(examples)},
                    outputs=["report.json", "report.md", "report.csv"])
    click.echo(md)


# --------------------------------------------------------------------------
# report


@main.group()
def report() -> None:
    """Combine step artifacts into result tables."""


_REPORT_SOURCES = {
    "data_stats": "data_stats/stats.json",
    "inter_human": "inter_human/report.json",
    "eval_rouge": "eval_rouge/report.json",
    "eval_bertscore": "eval_bertscore/report.json",
    "eval_correlation": "eval_correlation/report.json",
    "predictor_eval": "predictor_eval/report.json",
}


@report.command("tables")
@_CONFIG_OPTION
@_step
def report_tables(config_path: Path) -> None:
    """Render whatever step reports exist under the output directory."""
    cfg = _load_cfg(config_path)
    found = {}
    for key, rel in sorted(_REPORT_SOURCES.items()):
        path = cfg.output_dir / rel
        if path.exists():
            found[key] = read_json(path)
    if not found:
        raise ConfigError(
            f"no step reports under {cfg.output_dir}; run data/eval/analyze steps first"
        )
    md, csv_sections = combined_tables(found)
    step_dir = cfg.step_dir("report")
    (step_dir).mkdir(parents=True, exist_ok=True)
    (step_dir / "tables.md").write_text(md, encoding="utf-8")
    outputs = ["tables.md"]
    for name, header, rows in csv_sections:
        write_csv(step_dir / f"tables_{name}.csv", header, rows)
        outputs.append(f"tables_{name}.csv")
    _write_manifest(step_dir, "report tables", cfg,
                    inputs={"sources": sorted(found)}, outputs=outputs)
    click.echo(md)


if __name__ == "__main__":
    main()
