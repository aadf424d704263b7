"""Baseline and length-aware summarizers over a pluggable backend.

The four modes cross two flags: a length-aware input ("Summary length: #z."
prefixed to the dialogue prompt) and a multitask output (the model emits its
own length prediction alongside the summary). Training always uses gold
budgets; inference chooses among gold, pseudo, and fixed budgets. Control
flows only through the input prompt: there is no decoding-time truncation
or length-penalized search.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .backend import DecodingConfig, Seq2SeqBackend, TrainingConfig, TrainPair
from .corpus import Dialogue, Example
from .jsonio import read_jsonl, write_jsonl
from .templates import (
    LengthBudget,
    parse_generated,
    render_dialogue,
    render_la_input,
    render_la_target,
)

LENGTH_SOURCES = ("none", "gold", "pseudo", "fixed")


@dataclass(frozen=True)
class SummarizerMode:
    """One of the four model rows: plain or length-aware input, with or
    without the auxiliary length output."""

    length_aware: bool = False
    multitask: bool = False

    @property
    def label(self) -> str:
        base = "la" if self.length_aware else "baseline"
        return base + ("+len_out" if self.multitask else "")


@dataclass(frozen=True)
class GenerationRecord:
    """One generation. ``ref_index`` names the reference whose length supplied
    the budget (gold inference), or None. ``parsed_len`` is present exactly
    when the mode is multitask and the output parsed cleanly; on a parse
    failure ``output_text`` keeps the raw generation."""

    example_id: str
    ref_index: int | None
    output_text: str
    parsed_len: int | None
    budget: LengthBudget | None


def build_pairs(
    mode: SummarizerMode,
    examples: Sequence[Example],
    budget_source: str = "gold",
    pseudo_budgets: Mapping[str, LengthBudget] | None = None,
) -> list[TrainPair]:
    """Training pairs, one per (example, reference).

    With a length-aware mode the source carries a budget: the reference's own
    word count under ``gold`` (the training default), or a supplied pseudo
    budget. Baseline sources are the bare dialogue prompt.
    """
    if not examples:
        raise ValueError("build_pairs requires a non-empty corpus")
    if budget_source not in ("gold", "pseudo"):
        raise ValueError(f"training budget source must be gold or pseudo, got {budget_source!r}")
    pairs = []
    for ex in examples:
        for i in range(len(ex.refs)):
            if mode.length_aware:
                if budget_source == "pseudo":
                    if pseudo_budgets is None or ex.id not in pseudo_budgets:
                        raise ValueError(f"missing pseudo budget for example {ex.id!r}")
                    budget = pseudo_budgets[ex.id]
                else:
                    budget = LengthBudget(value=ex.refs[i].word_len, source="gold")
                source = render_la_input(budget, ex.dialogue)
            else:
                source = render_dialogue(ex.dialogue)
            pairs.append(TrainPair(source=source, target=render_la_target(mode.multitask, ex, i)))
    return pairs


def train_summarizer(
    mode: SummarizerMode,
    examples: Sequence[Example],
    backend: Seq2SeqBackend,
    hyper: TrainingConfig = TrainingConfig(),
    budget_source: str = "gold",
    pseudo_budgets: Mapping[str, LengthBudget] | None = None,
) -> Seq2SeqBackend:
    return backend.fine_tune(build_pairs(mode, examples, budget_source, pseudo_budgets), hyper)


def _resolve_budget(
    mode: SummarizerMode,
    example: Example,
    length_source: str,
    budgets: Mapping[str, LengthBudget] | None,
    ref_index: int | None,
    fixed_len: int | None,
) -> tuple[LengthBudget | None, int | None]:
    if length_source not in LENGTH_SOURCES:
        raise ValueError(f"unknown length source {length_source!r}; expected one of {LENGTH_SOURCES}")
    if not mode.length_aware:
        if length_source != "none":
            raise ValueError(
                f"baseline mode takes no length budget (got source {length_source!r})"
            )
        return None, None
    if length_source == "none":
        raise ValueError("length-aware mode requires a budget source: gold, pseudo, or fixed")
    if length_source == "gold":
        if ref_index is None:
            raise ValueError("gold length source requires a reference index")
        if not 0 <= ref_index < len(example.refs):
            raise IndexError(
                f"reference index {ref_index} out of range for example {example.id!r}"
            )
        return LengthBudget(value=example.refs[ref_index].word_len, source="gold"), ref_index
    if length_source == "pseudo":
        if budgets is None or example.id not in budgets:
            raise ValueError(f"missing pseudo budget for example {example.id!r}")
        return budgets[example.id], None
    if fixed_len is None:
        raise ValueError("fixed length source requires fixed_len")
    return LengthBudget(value=int(fixed_len), source="user"), None


def _postprocess(raw: str, multitask: bool) -> tuple[str, int | None]:
    if multitask:
        parsed = parse_generated("length_plus_summary", raw)
        if parsed.ok:
            return parsed.summary, parsed.length
    return raw, None


def summarize(
    handle: Seq2SeqBackend,
    mode: SummarizerMode,
    example: Example,
    length_source: str = "none",
    *,
    budgets: Mapping[str, LengthBudget] | None = None,
    ref_index: int | None = None,
    fixed_len: int | None = None,
    cfg: DecodingConfig = DecodingConfig(),
) -> GenerationRecord:
    """Render the mode's input for one example, generate, and parse."""
    budget, matched_ref = _resolve_budget(mode, example, length_source, budgets, ref_index, fixed_len)
    if budget is None:
        input_text = render_dialogue(example.dialogue)
    else:
        input_text = render_la_input(budget, example.dialogue)
    output_text, parsed_len = _postprocess(handle.generate(input_text, cfg), mode.multitask)
    return GenerationRecord(
        example_id=example.id,
        ref_index=matched_ref,
        output_text=output_text,
        parsed_len=parsed_len,
        budget=budget,
    )


def summarize_corpus(
    handle: Seq2SeqBackend,
    mode: SummarizerMode,
    examples: Sequence[Example],
    length_source: str = "none",
    *,
    budgets: Mapping[str, LengthBudget] | None = None,
    fixed_len: int | None = None,
    cfg: DecodingConfig = DecodingConfig(),
    workers: int = 1,
) -> list[GenerationRecord]:
    """Run inference over a corpus.

    Gold budgets produce one record per (example, reference) so each output
    can be scored against the reference whose length it was given; every
    other source produces one record per example. Work is order-preserving
    even with multiple workers.
    """
    tasks: list[tuple[Example, int | None]] = []
    for ex in examples:
        if mode.length_aware and length_source == "gold":
            tasks.extend((ex, i) for i in range(len(ex.refs)))
        else:
            tasks.append((ex, None))

    def run(task: tuple[Example, int | None]) -> GenerationRecord:
        ex, idx = task
        return summarize(
            handle, mode, ex, length_source,
            budgets=budgets, ref_index=idx, fixed_len=fixed_len, cfg=cfg,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, tasks))
    return [run(task) for task in tasks]


def length_sweep(
    handle: Seq2SeqBackend,
    dialogue: Dialogue,
    lengths: Sequence[int],
    cfg: DecodingConfig = DecodingConfig(),
    multitask: bool = False,
) -> list[GenerationRecord]:
    """Generate once per requested length, ascending; the rendered inputs
    differ only in the budget integer."""
    if not lengths:
        raise ValueError("length_sweep requires at least one length")
    records = []
    for z in sorted(int(z) for z in lengths):
        budget = LengthBudget(value=z, source="user")
        raw = handle.generate(render_la_input(budget, dialogue), cfg)
        output_text, parsed_len = _postprocess(raw, multitask)
        records.append(
            GenerationRecord(
                example_id=dialogue.id,
                ref_index=None,
                output_text=output_text,
                parsed_len=parsed_len,
                budget=budget,
            )
        )
    return records


def save_generations(records: Sequence[GenerationRecord], path: str | Path) -> Path:
    rows = []
    for rec in records:
        rows.append(
            {
                "example_id": rec.example_id,
                "ref_index": rec.ref_index,
                "budget": None
                if rec.budget is None
                else {"value": rec.budget.value, "source": rec.budget.source},
                "output_text": rec.output_text,
                "parsed_len": rec.parsed_len,
            }
        )
    return write_jsonl(path, rows)


def load_generations(path: str | Path) -> list[GenerationRecord]:
    records = []
    for row in read_jsonl(path):
        budget = row.get("budget")
        records.append(
            GenerationRecord(
                example_id=row["example_id"],
                ref_index=row.get("ref_index"),
                output_text=row["output_text"],
                parsed_len=row.get("parsed_len"),
                budget=None
                if budget is None
                else LengthBudget(value=int(budget["value"]), source=budget["source"]),
            )
        )
    return records
