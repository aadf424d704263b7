"""Evaluation mathematics: ROUGE, length agreement, rank correlations,
embedding-based scoring, and human-ranking aggregation.

Scores are fractions in [0, 1] (correlations in [-1, 1]); report renderers
rescale to the usual percentage convention. Tokenization for overlap metrics
is deliberately minimal and documented: lowercase, split on whitespace,
strip leading/trailing non-alphanumeric characters, no stemming. Absolute
ROUGE values are sensitive to this convention.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Protocol, Sequence

import numpy as np

from .corpus import Example, word_count
from .summarizer import GenerationRecord

TOKEN_RULES = ("whitespace_strip_punct",)
MULTI_REF_MODES = ("average",)

TOKENIZATION_NOTE = (
    "overlap metrics tokenize by lowercasing, splitting on whitespace, and "
    "stripping leading/trailing non-alphanumeric characters, with no stemming; "
    "absolute ROUGE values shift by roughly a point under other conventions"
)

_EDGE_PUNCT = re.compile(r"^[^0-9a-zA-Z]+|[^0-9a-zA-Z]+$")


def rouge_tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Whitespace tokens with edge punctuation stripped; emptied tokens drop."""
    if lowercase:
        text = text.lower()
    tokens = []
    for raw in text.split():
        token = _EDGE_PUNCT.sub("", raw)
        if token:
            tokens.append(token)
    return tokens


@dataclass(frozen=True)
class RougeConfig:
    n_values: tuple[int, ...] = (1, 2)
    use_lcs: bool = True
    lowercase: bool = True
    token_rule: str = "whitespace_strip_punct"
    multi_ref: str = "average"

    def __post_init__(self) -> None:
        if not self.n_values and not self.use_lcs:
            raise ValueError("at least one ROUGE metric must be enabled")
        if any(n < 1 for n in self.n_values):
            raise ValueError("n-gram orders must be positive")
        if self.token_rule not in TOKEN_RULES:
            raise ValueError(f"unknown token rule {self.token_rule!r}")
        if self.multi_ref not in MULTI_REF_MODES:
            raise ValueError(f"unknown multi-reference mode {self.multi_ref!r}")

    @property
    def metric_names(self) -> tuple[str, ...]:
        names = tuple(f"rouge-{n}" for n in self.n_values)
        if self.use_lcs:
            names += ("rouge-l",)
        return names


@dataclass(frozen=True)
class ScoreTriple:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "ScoreTriple":
        denom = precision + recall
        f1 = 2 * precision * recall / denom if denom > 0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1)

    @classmethod
    def from_counts(cls, overlap: float, candidate_total: int, reference_total: int) -> "ScoreTriple":
        p = overlap / candidate_total if candidate_total else 0.0
        r = overlap / reference_total if reference_total else 0.0
        return cls.from_pr(p, r)


def mean_triple(triples: Sequence[ScoreTriple]) -> ScoreTriple:
    """Elementwise mean; the aggregation used for multi-reference scores and
    corpus-level reporting."""
    if not triples:
        raise ValueError("cannot average zero score triples")
    n = len(triples)
    return ScoreTriple(
        precision=sum(t.precision for t in triples) / n,
        recall=sum(t.recall for t in triples) / n,
        f1=sum(t.f1 for t in triples) / n,
    )


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Two-row dynamic program, O(len(a) * len(b)).
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _rouge_single(
    cand_tokens: Sequence[str], ref_tokens: Sequence[str], cfg: RougeConfig
) -> dict[str, ScoreTriple]:
    scores: dict[str, ScoreTriple] = {}
    for n in cfg.n_values:
        cand_counts = _ngram_counts(cand_tokens, n)
        ref_counts = _ngram_counts(ref_tokens, n)
        overlap = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        scores[f"rouge-{n}"] = ScoreTriple.from_counts(
            overlap,
            max(len(cand_tokens) - n + 1, 0),
            max(len(ref_tokens) - n + 1, 0),
        )
    if cfg.use_lcs:
        scores["rouge-l"] = ScoreTriple.from_counts(
            _lcs_length(cand_tokens, ref_tokens), len(cand_tokens), len(ref_tokens)
        )
    return scores


def rouge(
    candidate: str, references: Sequence[str], cfg: RougeConfig = RougeConfig()
) -> dict[str, ScoreTriple]:
    """ROUGE-n (clipped n-gram matching) and ROUGE-L (subsequence overlap)
    precision/recall/F1; multiple references average per-reference triples."""
    cand_tokens = rouge_tokenize(candidate, cfg.lowercase)
    if not cand_tokens:
        raise ValueError("candidate tokenizes to nothing")
    if not references:
        raise ValueError("at least one reference is required")
    per_ref = []
    for i, ref in enumerate(references):
        ref_tokens = rouge_tokenize(ref, cfg.lowercase)
        if not ref_tokens:
            raise ValueError(f"reference {i} tokenizes to nothing")
        per_ref.append(_rouge_single(cand_tokens, ref_tokens, cfg))
    return {name: mean_triple([s[name] for s in per_ref]) for name in cfg.metric_names}


def abs_len_diff(candidate: str, references: Sequence[str]) -> float:
    """Mean absolute word-count difference against each reference."""
    if not references:
        raise ValueError("at least one reference is required")
    cand_len = word_count(candidate)
    return sum(abs(cand_len - word_count(ref)) for ref in references) / len(references)


@dataclass(frozen=True)
class CorrelationTriple:
    """Pearson r, Spearman rho, Kendall tau-b. Components are None when the
    statistic is undefined (a constant input), never coerced to 0."""

    pearson_r: float | None
    spearman_rho: float | None
    kendall_tau: float | None


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    num = float(np.dot(dx, dy))
    den = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    return max(-1.0, min(1.0, num / den))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their positions."""
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _kendall_tau_b(x: np.ndarray, y: np.ndarray) -> float:
    concordant = discordant = tied_x = tied_y = 0
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                tied_x += 1
                tied_y += 1
            elif dx == 0:
                tied_x += 1
            elif dy == 0:
                tied_y += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    den = math.sqrt((n0 - tied_x) * (n0 - tied_y))
    return max(-1.0, min(1.0, (concordant - discordant) / den))


def correlations(xs: Sequence[float], ys: Sequence[float]) -> CorrelationTriple:
    """Pearson product-moment, Spearman on mean-ranked data, and tie-corrected
    Kendall tau-b. Returns absent components when either input is constant."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 3:
        raise ValueError("correlations need at least 3 paired observations")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return CorrelationTriple(None, None, None)
    return CorrelationTriple(
        pearson_r=_pearson(x, y),
        spearman_rho=_pearson(_average_ranks(x), _average_ranks(y)),
        kendall_tau=_kendall_tau_b(x, y),
    )


def mean_correlation(triples: Sequence[CorrelationTriple]) -> CorrelationTriple:
    """Componentwise mean; a component is absent if it is absent anywhere."""
    if not triples:
        raise ValueError("cannot average zero correlation triples")

    def component(values: list[float | None]) -> float | None:
        if any(v is None for v in values):
            return None
        return sum(values) / len(values)

    return CorrelationTriple(
        pearson_r=component([t.pearson_r for t in triples]),
        spearman_rho=component([t.spearman_rho for t in triples]),
        kendall_tau=component([t.kendall_tau for t in triples]),
    )


@dataclass(frozen=True)
class InterHumanReport:
    rouge: dict[str, ScoreTriple]
    length_delta: float
    length_correlation: CorrelationTriple
    n_examples: int
    n_annotators: int


def inter_human(
    examples: Sequence[Example], cfg: RougeConfig = RougeConfig()
) -> InterHumanReport:
    """Pairwise annotator agreement on a multi-reference corpus.

    For each unordered annotator pair (i < j), annotator i's summary is
    scored as the candidate against annotator j's as the reference; scores
    average over pairs, then over examples. Length correlations run over the
    whole corpus per pair and the triples average across pairs.
    """
    if not examples:
        raise ValueError("inter_human requires a non-empty corpus")
    counts = {len(ex.refs) for ex in examples}
    if min(counts) < 2:
        offender = next(ex for ex in examples if len(ex.refs) < 2)
        raise ValueError(f"example {offender.id!r} has fewer than 2 references")
    if len(counts) > 1:
        raise ValueError(f"annotator count varies across the corpus: {sorted(counts)}")
    k = counts.pop()
    pairs = list(combinations(range(k), 2))

    per_example_rouge = []
    per_example_delta = []
    for ex in examples:
        pair_scores = [rouge(ex.refs[i].text, [ex.refs[j].text], cfg) for i, j in pairs]
        per_example_rouge.append(
            {name: mean_triple([s[name] for s in pair_scores]) for name in cfg.metric_names}
        )
        per_example_delta.append(
            sum(abs(ex.refs[i].word_len - ex.refs[j].word_len) for i, j in pairs) / len(pairs)
        )

    corr = mean_correlation(
        [
            correlations(
                [ex.refs[i].word_len for ex in examples],
                [ex.refs[j].word_len for ex in examples],
            )
            for i, j in pairs
        ]
    )
    return InterHumanReport(
        rouge={
            name: mean_triple([scores[name] for scores in per_example_rouge])
            for name in cfg.metric_names
        },
        length_delta=sum(per_example_delta) / len(per_example_delta),
        length_correlation=corr,
        n_examples=len(examples),
        n_annotators=k,
    )


class TokenEmbedder(Protocol):
    """Maps a token sequence to unit-norm vectors, one row per token.
    Implementations must be deterministic."""

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        ...


class HashEmbedder:
    """Deterministic test embedder. Per-token unit vectors have non-negative
    components derived from a hash of the token, so all pairwise cosine
    similarities (and hence scores) stay in [0, 1]."""

    def __init__(self, dim: int = 32):
        if dim < 2:
            raise ValueError("embedding dimension must be at least 2")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")
            raw = np.abs(np.random.default_rng(seed).standard_normal(self.dim)) + 1e-9
            vec = raw / np.linalg.norm(raw)
            self._cache[token] = vec
        return vec

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            raise ValueError("cannot embed an empty token sequence")
        return np.stack([self._vector(t) for t in tokens])


def bertscore(
    candidate: str,
    reference: str,
    embedder: TokenEmbedder,
    lowercase: bool = True,
) -> ScoreTriple:
    """Greedy matching on token-level cosine similarity: recall averages each
    reference token's best match among candidate tokens, precision is the
    mirror image. No IDF weighting, no baseline rescaling."""
    cand_tokens = rouge_tokenize(candidate, lowercase)
    ref_tokens = rouge_tokenize(reference, lowercase)
    if not cand_tokens:
        raise ValueError("candidate tokenizes to nothing")
    if not ref_tokens:
        raise ValueError("reference tokenizes to nothing")
    sims = embedder.embed(cand_tokens) @ embedder.embed(ref_tokens).T
    return ScoreTriple.from_pr(
        precision=float(sims.max(axis=1).mean()),
        recall=float(sims.max(axis=0).mean()),
    )


@dataclass(frozen=True)
class RankingMatrix:
    """Strict orderings (best first) of one fixed candidate set, one ordering
    per (dialogue, annotator) judgement."""

    candidates: tuple[str, ...]
    orderings: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if len(self.candidates) < 2:
            raise ValueError("need at least 2 candidates")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidate labels must be unique")
        if not self.orderings:
            raise ValueError("need at least one ranking")
        expected = sorted(self.candidates)
        for i, ordering in enumerate(self.orderings):
            if sorted(ordering) != expected:
                raise ValueError(f"ordering {i} is not a permutation of the candidate set")


def aggregate_rankings(matrix: RankingMatrix) -> dict[str, float]:
    """Within each ranking the best candidate scores (k - 1) down to 0 for the
    worst; each candidate's scores are averaged over all rankings."""
    k = len(matrix.candidates)
    totals = {c: 0 for c in matrix.candidates}
    for ordering in matrix.orderings:
        for position, label in enumerate(ordering):
            totals[label] += (k - 1) - position
    n = len(matrix.orderings)
    return {c: totals[c] / n for c in matrix.candidates}


@dataclass(frozen=True)
class GenerationEvalReport:
    rouge: dict[str, ScoreTriple]
    length_delta: float
    n_examples: int
    n_records: int


def _group_records(
    records: Sequence[GenerationRecord], examples: Sequence[Example]
) -> tuple[dict[str, Example], dict[str, list[GenerationRecord]], list[str]]:
    by_id = {ex.id: ex for ex in examples}
    grouped: dict[str, list[GenerationRecord]] = {}
    order: list[str] = []
    for rec in records:
        ex = by_id.get(rec.example_id)
        if ex is None:
            raise ValueError(f"generation references unknown example {rec.example_id!r}")
        if rec.ref_index is not None and not 0 <= rec.ref_index < len(ex.refs):
            raise ValueError(
                f"generation for {rec.example_id!r} names reference {rec.ref_index}, "
                f"out of range for {len(ex.refs)} references"
            )
        if rec.example_id not in grouped:
            order.append(rec.example_id)
            grouped[rec.example_id] = []
        grouped[rec.example_id].append(rec)
    return by_id, grouped, order


def _target_refs(record: GenerationRecord, example: Example) -> list[str]:
    # Reference-matched scoring: a record generated from reference r's budget
    # is judged against reference r only; unmatched records face all of them.
    if record.ref_index is None:
        return [ref.text for ref in example.refs]
    return [example.refs[record.ref_index].text]


def evaluate_generations(
    records: Sequence[GenerationRecord],
    examples: Sequence[Example],
    cfg: RougeConfig = RougeConfig(),
) -> GenerationEvalReport:
    """Corpus ROUGE and length agreement for a generation-record file.

    Scores average over each example's records, then over examples, so a
    gold-budget run (one record per reference) weighs each dialogue equally.
    """
    if not records:
        raise ValueError("no generation records to evaluate")
    by_id, grouped, order = _group_records(records, examples)
    per_example_rouge = []
    per_example_delta = []
    for ex_id in order:
        ex = by_id[ex_id]
        rec_scores = []
        rec_deltas = []
        for rec in grouped[ex_id]:
            refs = _target_refs(rec, ex)
            rec_scores.append(rouge(rec.output_text, refs, cfg))
            rec_deltas.append(abs_len_diff(rec.output_text, refs))
        per_example_rouge.append(
            {name: mean_triple([s[name] for s in rec_scores]) for name in cfg.metric_names}
        )
        per_example_delta.append(sum(rec_deltas) / len(rec_deltas))
    return GenerationEvalReport(
        rouge={
            name: mean_triple([scores[name] for scores in per_example_rouge])
            for name in cfg.metric_names
        },
        length_delta=sum(per_example_delta) / len(per_example_delta),
        n_examples=len(order),
        n_records=len(records),
    )


def _record_for_annotator(
    recs: Sequence[GenerationRecord], annotator: int, ex_id: str
) -> GenerationRecord:
    matched = [r for r in recs if r.ref_index == annotator]
    if len(matched) > 1:
        raise ValueError(f"multiple records for example {ex_id!r} reference {annotator}")
    if matched:
        return matched[0]
    unmatched = [r for r in recs if r.ref_index is None]
    if len(unmatched) != 1:
        raise ValueError(f"no unique record for example {ex_id!r} covering reference {annotator}")
    return unmatched[0]


def length_correlation(
    records: Sequence[GenerationRecord], examples: Sequence[Example]
) -> CorrelationTriple:
    """Correlate output word counts with reference word counts across the
    corpus, averaging the triple over annotators."""
    by_id, grouped, order = _group_records(records, examples)
    if not order:
        raise ValueError("no generation records")
    ref_counts = {len(by_id[ex_id].refs) for ex_id in order}
    if len(ref_counts) > 1:
        raise ValueError(f"annotator count varies across the corpus: {sorted(ref_counts)}")
    k = ref_counts.pop()
    triples = []
    for annotator in range(k):
        xs = []
        ys = []
        for ex_id in order:
            rec = _record_for_annotator(grouped[ex_id], annotator, ex_id)
            xs.append(word_count(rec.output_text))
            ys.append(by_id[ex_id].refs[annotator].word_len)
        triples.append(correlations(xs, ys))
    return mean_correlation(triples)


def bertscore_generations(
    records: Sequence[GenerationRecord],
    examples: Sequence[Example],
    embedder: TokenEmbedder,
    lowercase: bool = True,
) -> ScoreTriple:
    """Corpus BERTScore with the same matched-reference and averaging scheme
    as :func:`evaluate_generations`."""
    if not records:
        raise ValueError("no generation records to evaluate")
    by_id, grouped, order = _group_records(records, examples)
    per_example = []
    for ex_id in order:
        ex = by_id[ex_id]
        rec_triples = []
        for rec in grouped[ex_id]:
            ref_triples = [
                bertscore(rec.output_text, ref, embedder, lowercase)
                for ref in _target_refs(rec, ex)
            ]
            rec_triples.append(mean_triple(ref_triples))
        per_example.append(mean_triple(rec_triples))
    return mean_triple(per_example)
