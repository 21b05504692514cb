"""Example-tuple selection: rank complete rows by mean longest-common-substring
similarity over the selected attributes, then pick k similar rows with
distinct target values."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import DataError
from .mining import _Automaton
from .table import MISSING, Table

__all__ = [
    "AttributeOverlap",
    "SimilarityScore",
    "ExampleSet",
    "tuple_similarity",
    "select_examples",
]


class AttributeOverlap(NamedTuple):
    lcs_length: int
    max_length: int
    ratio: float


@dataclass(frozen=True)
class SimilarityScore:
    """Mean of per-attribute LCS-length ratios; each ratio lies in [0, 1]."""

    value: float
    per_attribute: dict[str, AttributeOverlap]


@dataclass(frozen=True)
class ExampleSet:
    """The rows chosen to demonstrate the imputation for one query row.

    Examples are ordered by descending score (ties by row index). When
    ``diversity_satisfied`` is set, their target values are pairwise
    distinct; otherwise fewer distinct values existed than slots and the
    remainder was filled with the next best rows.
    """

    query_row: int
    examples: tuple[tuple[int, Optional[SimilarityScore], str], ...]
    k_requested: int
    diversity_satisfied: bool

    def rows(self) -> list[int]:
        return [row for row, _score, _target in self.examples]

    def to_json_dict(self) -> dict:
        return {
            "query_row": self.query_row,
            "examples": [
                {
                    "row": row,
                    "score": None if score is None else score.value,
                    "target": target,
                }
                for row, score, target in self.examples
            ],
            "diverse": self.diversity_satisfied,
        }


def _cell_text(cell) -> str:
    return "" if cell is MISSING else cell


class _QueryScorer:
    """Scores rows against one query row, reusing one automaton per attribute.

    Building the substring index once over each query value amortizes the
    LCS queries across all candidate rows down to a linear scan per cell.
    """

    def __init__(self, t: Table, query_row: int, attrs: list[str]):
        if not attrs:
            raise DataError("similarity needs a non-empty attribute set")
        self.table = t
        self.attrs = attrs
        self.cols = [t.column_index(a) for a in attrs]
        self.query_cells = [_cell_text(t.rows[query_row][j]) for j in self.cols]
        self.automata = [
            _Automaton(cell) if cell else None for cell in self.query_cells
        ]

    def score(self, row: int) -> SimilarityScore:
        per_attr: dict[str, AttributeOverlap] = {}
        total = 0.0
        cells = self.table.rows[row]
        for attr, j, q_cell, auto in zip(
            self.attrs, self.cols, self.query_cells, self.automata
        ):
            other = _cell_text(cells[j])
            if not q_cell and not other:
                overlap = AttributeOverlap(0, 0, 1.0)
            elif not q_cell or not other:
                overlap = AttributeOverlap(0, max(len(q_cell), len(other)), 0.0)
            else:
                best = 0
                for _j, length, _v in auto.scan(other):
                    if length > best:
                        best = length
                denom = max(len(q_cell), len(other))
                overlap = AttributeOverlap(best, denom, best / denom)
            per_attr[attr] = overlap
            total += overlap.ratio
        return SimilarityScore(value=total / len(self.attrs), per_attribute=per_attr)


def tuple_similarity(
    t: Table, row_i: int, row_j: int, attrs: list[str]
) -> SimilarityScore:
    """Mean over ``attrs`` of |LCS(a, b)| / max(|a|, |b|) for the two rows' cells.

    Two empty (or missing) cells count as identical (ratio 1); one empty
    side scores 0 for that attribute.
    """
    return _QueryScorer(t, row_i, attrs).score(row_j)


def select_examples(
    t: Table,
    query: int,
    attrs: list[str],
    target: str,
    k: int,
    mode: str = "diverse-similarity",
    seed: int = 0,
) -> ExampleSet:
    """Pick up to k complete rows to serve as few-shot examples.

    diverse-similarity: score every complete row against the query, then
    greedily take the best row per not-yet-seen target value; if fewer
    distinct values than k exist, fill with the next best rows and clear the
    diversity flag. random: a seeded uniform sample, scores omitted.
    """
    if k < 1:
        raise DataError("k must be >= 1")
    if mode not in ("diverse-similarity", "random"):
        raise DataError(f"unknown tuple-selection mode: {mode!r}")
    tj = t.column_index(target)
    if t.rows[query][tj] is not MISSING:
        raise DataError(f"query row {query} already has a target value")
    complete = [i for i, row in enumerate(t.rows) if row[tj] is not MISSING]
    if not complete:
        raise DataError("no rows with a complete target value")

    if mode == "random":
        rng = random.Random(seed)
        chosen = sorted(rng.sample(complete, min(k, len(complete))))
        examples = tuple((i, None, t.rows[i][tj]) for i in chosen)
        targets = [target_value for _i, _s, target_value in examples]
        return ExampleSet(
            query_row=query,
            examples=examples,
            k_requested=k,
            diversity_satisfied=len(set(targets)) == len(targets),
        )

    scorer = _QueryScorer(t, query, attrs)
    scored = [(i, scorer.score(i)) for i in complete]
    scored.sort(key=lambda pair: (-pair[1].value, pair[0]))

    chosen: list[tuple[int, SimilarityScore, str]] = []
    seen_values: set[str] = set()
    for i, score in scored:
        if len(chosen) == k:
            break
        value = t.rows[i][tj]
        if value in seen_values:
            continue
        seen_values.add(value)
        chosen.append((i, score, value))

    diversity_satisfied = True
    if len(chosen) < k:
        # fewer distinct target values than slots: fill with duplicates
        taken = {i for i, _s, _v in chosen}
        for i, score in scored:
            if len(chosen) == k:
                break
            if i in taken:
                continue
            chosen.append((i, score, t.rows[i][tj]))
            taken.add(i)
        values = [v for _i, _s, v in chosen]
        diversity_satisfied = len(set(values)) == len(values)

    chosen.sort(key=lambda e: (-e[1].value, e[0]))
    return ExampleSet(
        query_row=query,
        examples=tuple(chosen),
        k_requested=k,
        diversity_satisfied=diversity_satisfied,
    )
