"""Independent brute-force reference implementations used only by tests.

These deliberately avoid the package's data structures and algorithms: n-gram
matching scans lists, the LCS is a memoized recursion, and the correlation
statistics come straight from their textbook formulas.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence


def ngram_list(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def brute_rouge_n(cand: Sequence[str], ref: Sequence[str], n: int) -> tuple[float, float, float]:
    cand_grams = ngram_list(cand, n)
    ref_grams = ngram_list(ref, n)
    overlap = 0
    for gram in set(cand_grams):
        overlap += min(cand_grams.count(gram), ref_grams.count(gram))
    p = overlap / len(cand_grams) if cand_grams else 0.0
    r = overlap / len(ref_grams) if ref_grams else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def brute_lcs(a: Sequence[str], b: Sequence[str]) -> int:
    a = tuple(a)
    b = tuple(b)

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == 0 or j == 0:
            return 0
        if a[i - 1] == b[j - 1]:
            return rec(i - 1, j - 1) + 1
        return max(rec(i - 1, j), rec(i, j - 1))

    return rec(len(a), len(b))


def brute_rouge_l(cand: Sequence[str], ref: Sequence[str]) -> tuple[float, float, float]:
    lcs = brute_lcs(cand, ref)
    p = lcs / len(cand) if cand else 0.0
    r = lcs / len(ref) if ref else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def brute_pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = math.sqrt(sum((x - mx) ** 2 for x in xs) * sum((y - my) ** 2 for y in ys))
    return num / den


def brute_ranks(values: Sequence[float]) -> list[float]:
    ranks = []
    for v in values:
        smaller = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        # mean of positions smaller+1 .. smaller+equal
        ranks.append(smaller + (equal + 1) / 2)
    return ranks


def brute_spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    return brute_pearson(brute_ranks(xs), brute_ranks(ys))


def brute_kendall_tau_b(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    concordant = discordant = 0
    tied_x = tied_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            sx = (xs[i] > xs[j]) - (xs[i] < xs[j])
            sy = (ys[i] > ys[j]) - (ys[i] < ys[j])
            if sx == 0:
                tied_x += 1
            if sy == 0:
                tied_y += 1
            if sx != 0 and sy != 0:
                if sx == sy:
                    concordant += 1
                else:
                    discordant += 1
    n0 = n * (n - 1) / 2
    return (concordant - discordant) / math.sqrt((n0 - tied_x) * (n0 - tied_y))


def brute_greedy_match(cand_vecs, ref_vecs) -> tuple[float, float, float]:
    def cosine(u, v) -> float:
        dot = sum(a * b for a, b in zip(u, v))
        nu = math.sqrt(sum(a * a for a in u))
        nv = math.sqrt(sum(b * b for b in v))
        return dot / (nu * nv)

    p_terms = [max(cosine(c, r) for r in ref_vecs) for c in cand_vecs]
    r_terms = [max(cosine(c, r) for c in cand_vecs) for r in ref_vecs]
    p = sum(p_terms) / len(p_terms)
    r = sum(r_terms) / len(r_terms)
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f
