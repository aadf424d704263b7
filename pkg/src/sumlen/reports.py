"""Markdown and CSV rendering for step reports.

JSON artifacts keep raw fractions; these renderers apply the usual display
conventions (ROUGE and correlations scaled by 100, two decimals; length
deltas in words, one decimal).
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence


def pct(value) -> str:
    return "-" if value is None else f"{100 * value:.2f}"


def words(value) -> str:
    return "-" if value is None else f"{value:.1f}"


def markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    lines.extend("| " + " | ".join(str(cell) for cell in row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


_STATS_HEADER = ("split", "dialogues", "summaries", "compression_rate")


def stats_rows(stats: Mapping) -> list[list]:
    rows = []
    for split, values in stats["splits"].items():
        rows.append(
            [split, values["dialogues"], values["summaries"], f"{values['compression_rate']:.4f}"]
        )
    overall = stats["overall"]
    rows.append(
        ["overall", overall["dialogues"], overall["summaries"], f"{overall['compression_rate']:.4f}"]
    )
    return rows


def stats_markdown(stats: Mapping) -> str:
    title = f"# Dataset statistics ({stats['format']})\n\n"
    rows = [
        [r[0], str(r[1]), str(r[2]), f"{float(r[3]) * 100:.2f}%"] for r in stats_rows(stats)
    ]
    return title + markdown_table(("Split", "Dialogues", "Summaries", "Comp. rate"), rows)


_ROUGE_HEADER = (
    "system",
    "rouge-1 prec", "rouge-1 rec", "rouge-1 f1",
    "rouge-2 prec", "rouge-2 rec", "rouge-2 f1",
    "rouge-l prec", "rouge-l rec", "rouge-l f1",
    "len_delta",
)


def rouge_row(system: str, rouge: Mapping, length_delta: float | None) -> list[str]:
    row = [system]
    for metric in ("rouge-1", "rouge-2", "rouge-l"):
        triple = rouge.get(metric)
        if triple is None:
            row.extend(["-", "-", "-"])
        else:
            row.extend([pct(triple["precision"]), pct(triple["recall"]), pct(triple["f1"])])
    row.append(words(length_delta))
    return row


def rouge_markdown(title: str, rows: Sequence[Sequence[str]]) -> str:
    header = (
        "Model",
        "R-1 Prec.", "R-1 Rec.", "R-1 F-1",
        "R-2 Prec.", "R-2 Rec.", "R-2 F-1",
        "R-L Prec.", "R-L Rec.", "R-L F-1",
        "Len Δ",
    )
    return f"# {title}\n\n" + markdown_table(header, rows)


_CORR_HEADER = ("system", "pearson_r", "spearman_rho", "kendall_tau")


def correlation_row(system: str, corr: Mapping) -> list[str]:
    return [
        system,
        pct(corr.get("pearson_r")),
        pct(corr.get("spearman_rho")),
        pct(corr.get("kendall_tau")),
    ]


def correlation_markdown(title: str, rows: Sequence[Sequence[str]]) -> str:
    return f"# {title}\n\n" + markdown_table(("Model", "r", "ρ", "τ"), rows)


def bertscore_row(system: str, triple: Mapping) -> list[str]:
    return [system, pct(triple["precision"]), pct(triple["recall"]), pct(triple["f1"])]


def bertscore_markdown(title: str, rows: Sequence[Sequence[str]]) -> str:
    return f"# {title}\n\n" + markdown_table(("Model", "Prec.", "Rec.", "F-1"), rows)


def combined_tables(found: Mapping[str, Mapping]) -> tuple[str, list[tuple[str, list, list]]]:
    """Render every available report into one markdown document plus a list of
    (section name, header, rows) for CSV emission."""
    sections_md: list[str] = []
    sections_csv: list[tuple[str, list, list]] = []

    stats = found.get("data_stats")
    if stats:
        sections_md.append(stats_markdown(stats))
        sections_csv.append(("data_stats", list(_STATS_HEADER), stats_rows(stats)))

    rouge_rows = []
    for key in ("eval_rouge", "inter_human"):
        report = found.get(key)
        if not report:
            continue
        system = report.get("system", "inter-human" if key == "inter_human" else "model")
        rouge_rows.append(rouge_row(system, report["rouge"], report.get("length_delta")))
    if rouge_rows:
        sections_md.append(rouge_markdown("Summary quality and length agreement", rouge_rows))
        sections_csv.append(("rouge", list(_ROUGE_HEADER), rouge_rows))

    corr_rows = []
    for key, default in (("eval_correlation", "model"), ("inter_human", "inter-human")):
        report = found.get(key)
        if not report:
            continue
        corr = report.get("length_correlation") or report.get("correlation")
        if corr:
            corr_rows.append(correlation_row(report.get("system", default), corr))
    if corr_rows:
        sections_md.append(correlation_markdown("Length correlations", corr_rows))
        sections_csv.append(("correlation", list(_CORR_HEADER), corr_rows))

    bs = found.get("eval_bertscore")
    if bs:
        rows = [bertscore_row(bs.get("system", "model"), bs["bertscore"])]
        sections_md.append(bertscore_markdown("BERTScore", rows))
        sections_csv.append(("bertscore", ["system", "precision", "recall", "f1"], rows))

    pred = found.get("predictor_eval")
    if pred:
        rows = [[pred.get("variant", "predictor"), words(pred["length_delta"])]]
        if pred.get("inter_human_length_delta") is not None:
            rows.append(["inter-human", words(pred["inter_human_length_delta"])])
        sections_md.append("# Length prediction\n\n" + markdown_table(("Model", "Len Δ"), rows))
        sections_csv.append(("predictor", ["system", "len_delta"], rows))

    return "\n".join(sections_md), sections_csv
