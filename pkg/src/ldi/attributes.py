"""Attribute selection: find candidate columns whose substring patterns are
group-specific enough to predict the target column.

A candidate qualifies when, for at least a ``p`` fraction of sampled target
groups, some substring occurs in at least a ``q`` fraction of the group's
candidate cells and is frequent in no other group.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .errors import DataError, SchemaError
from .mining import (
    DocumentSet,
    FrequentSubstringSet,
    ceil_threshold,
    frequent_substrings,
    group_unique_check,
)
from .table import MISSING, GroupIndex, Table, group_by_target

__all__ = [
    "SamplingConfig",
    "DependencyConfig",
    "GroupPatternSet",
    "DependencyReport",
    "group_sample",
    "detect_group_patterns",
    "filter_unique_patterns",
    "prune_contained",
    "evaluate_dependency",
    "select_attributes",
    "selected_attributes",
]

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplingConfig:
    """How many groups (m) and rows per group (n) to sample for phase 1."""

    m: int = 10
    n: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise DataError("sampling needs m >= 1 and n >= 1")


@dataclass(frozen=True)
class DependencyConfig:
    """Thresholds for dependency evaluation.

    ``p`` is the fraction of groups that must carry a unique pattern; ``q``
    is the within-group frequency a substring needs to count as a pattern.
    Setting either to 0 disables the dependency constraint entirely and every
    candidate is retained. ``max_cell_chars`` truncates pathological cells
    before mining.
    """

    p: float = 0.9
    q: float = 0.9
    prune_contained: bool = True
    max_cell_chars: int = 2000

    def __post_init__(self):
        if not 0 <= self.p <= 1 or not 0 <= self.q <= 1:
            raise DataError("p and q must lie in [0, 1]")

    @property
    def unconditional(self) -> bool:
        return self.p == 0 or self.q == 0


@dataclass(frozen=True)
class GroupPatternSet:
    """Retained substrings (with group-frequency counts) for one target value."""

    key: str
    patterns: dict[str, int]
    size: int

    def as_frequent_set(self, q: float) -> FrequentSubstringSet:
        return FrequentSubstringSet(
            entries=dict(self.patterns),
            threshold=ceil_threshold(q, self.size),
        )


@dataclass(frozen=True)
class DependencyReport:
    """Verdict for one candidate attribute, with the evidence behind it.

    ``witnesses`` maps each supporting group key to the substrings unique to
    that group; it is the user-facing answer to "why was this attribute
    selected". Reports built under p=0 or q=0 carry ``unconditional=True``
    and no witnesses.
    """

    candidate: str
    supporting: tuple[str, ...]
    total_groups: int
    verdict: bool
    witnesses: dict[str, tuple[str, ...]]
    unconditional: bool = False
    auto_rejected_constant: bool = False

    def to_json_dict(self) -> dict:
        d = {
            "candidate": self.candidate,
            "verdict": self.verdict,
            "supporting": list(self.supporting),
            "total_groups": self.total_groups,
            "witnesses": {g: list(w) for g, w in self.witnesses.items()},
        }
        if self.unconditional:
            d["unconditional"] = True
        if self.auto_rejected_constant:
            d["auto_rejected_constant"] = True
        return d


def group_sample(
    t: Table, target: str, cfg: SamplingConfig
) -> tuple[Table, GroupIndex]:
    """Sample up to m groups of up to n rows each, preserving target diversity.

    Groups with at least n rows are preferred; when fewer than m of those
    exist, the largest remaining groups fill the open slots with every row
    they have. Deterministic for a fixed seed.
    """
    full_index = group_by_target(t, target)
    if not full_index.groups:
        raise DataError(f"no non-missing values in target {target!r}")
    rng = random.Random(cfg.seed)
    keys = list(full_index.groups.keys())
    eligible = [k for k in keys if len(full_index.groups[k]) >= cfg.n]

    if len(eligible) >= cfg.m:
        chosen = rng.sample(eligible, cfg.m)
    else:
        chosen = list(eligible)
        leftovers = [k for k in keys if k not in set(eligible)]
        leftovers.sort(key=lambda k: -len(full_index.groups[k]))
        chosen.extend(leftovers[: cfg.m - len(chosen)])

    picked_rows: list[int] = []
    for key in chosen:
        rows = full_index.groups[key]
        if len(rows) > cfg.n:
            rows = sorted(rng.sample(rows, cfg.n))
        picked_rows.extend(rows)

    sampled = Table(t.schema, tuple(t.rows[i] for i in picked_rows))
    return sampled, group_by_target(sampled, target)


def detect_group_patterns(
    sample: Table,
    groups: GroupIndex,
    candidate: str,
    q: float,
    max_cell_chars: int | None = 2000,
) -> list[GroupPatternSet]:
    """Mine each group's candidate cells for substrings frequent within it.

    MISSING cells become empty documents, so they count against the
    frequency threshold rather than silently shrinking the group.
    """
    if candidate == groups.target:
        raise SchemaError("candidate attribute must differ from the target")
    j = sample.column_index(candidate)
    out: list[GroupPatternSet] = []
    truncated = 0
    for key, rows in groups.groups.items():
        docs = []
        for i in rows:
            cell = sample.rows[i][j]
            text = "" if cell is MISSING else cell
            if max_cell_chars is not None and len(text) > max_cell_chars:
                text = text[:max_cell_chars]
                truncated += 1
            docs.append(text)
        mined = frequent_substrings(DocumentSet(tuple(docs)), q)
        out.append(GroupPatternSet(key=key, patterns=mined.entries, size=len(rows)))
    if truncated:
        _log.warning(
            "truncated %d cell(s) of %r to %d chars before mining",
            truncated, candidate, max_cell_chars,
        )
    return out


def filter_unique_patterns(sets: list[GroupPatternSet]) -> list[GroupPatternSet]:
    """Keep only patterns that are frequent in exactly one group."""
    if not sets:
        return []
    freq_sets = [
        FrequentSubstringSet(entries=s.patterns, threshold=0) for s in sets
    ]
    unique = group_unique_check(freq_sets)
    return [
        GroupPatternSet(
            key=s.key,
            patterns={p: c for p, c in s.patterns.items() if p in uniq},
            size=s.size,
        )
        for s, uniq in zip(sets, unique)
    ]


def prune_contained(s: GroupPatternSet) -> GroupPatternSet:
    """Drop patterns that are substrings of a longer retained pattern.

    Purely cosmetic for dependency verdicts (a non-empty set stays
    non-empty), but it keeps witnesses readable.
    """
    kept = {
        p: c
        for p, c in s.patterns.items()
        if not any(p != other and p in other for other in s.patterns)
    }
    return GroupPatternSet(key=s.key, patterns=kept, size=s.size)


def evaluate_dependency(
    sets: list[GroupPatternSet], p: float, candidate: str = ""
) -> DependencyReport:
    """Verdict: do at least ceil(p * #groups) groups hold a unique pattern?"""
    if not sets:
        raise DataError("dependency evaluation needs at least one group")
    supporting = tuple(s.key for s in sets if s.patterns)
    needed = ceil_threshold(p, len(sets))
    witnesses = {
        s.key: tuple(sorted(s.patterns, key=lambda x: (-len(x), x)))
        for s in sets
        if s.patterns
    }
    return DependencyReport(
        candidate=candidate,
        supporting=supporting,
        total_groups=len(sets),
        verdict=len(supporting) >= needed,
        witnesses=witnesses,
    )


def _is_constant(sample: Table, attr: str) -> bool:
    j = sample.column_index(attr)
    values = {row[j] if row[j] is not MISSING else MISSING for row in sample.rows}
    return len(values) <= 1


def select_attributes(
    t: Table,
    target: str,
    scfg: SamplingConfig,
    dcfg: DependencyConfig,
) -> list[tuple[str, DependencyReport]]:
    """Run the whole phase over every non-target column on one shared sample.

    Returns a (candidate, report) pair for every candidate in schema order,
    selected or not, so rejections stay explainable.
    """
    if target not in t.schema:
        raise SchemaError(f"no such attribute: {target!r}")
    if len(t.schema) < 2:
        raise SchemaError("need at least one candidate attribute")
    candidates = [a for a in t.schema if a != target]

    if dcfg.unconditional:
        # p=0 or q=0 lifts the dependency constraint: keep every candidate.
        sample, groups = group_sample(t, target, scfg)
        m_actual = len(groups.groups)
        return [
            (
                a,
                DependencyReport(
                    candidate=a,
                    supporting=(),
                    total_groups=m_actual,
                    verdict=True,
                    witnesses={},
                    unconditional=True,
                ),
            )
            for a in candidates
        ]

    sample, groups = group_sample(t, target, scfg)
    reports: list[tuple[str, DependencyReport]] = []
    for candidate in candidates:
        if _is_constant(sample, candidate):
            # a column constant across the sample cannot carry group-specific
            # evidence; skip the tree builds
            reports.append(
                (
                    candidate,
                    DependencyReport(
                        candidate=candidate,
                        supporting=(),
                        total_groups=len(groups.groups),
                        verdict=False,
                        witnesses={},
                        auto_rejected_constant=True,
                    ),
                )
            )
            continue
        raw = detect_group_patterns(
            sample, groups, candidate, dcfg.q, dcfg.max_cell_chars
        )
        unique = filter_unique_patterns(raw)
        if dcfg.prune_contained:
            unique = [prune_contained(s) for s in unique]
        reports.append((candidate, evaluate_dependency(unique, dcfg.p, candidate)))
    return reports


def selected_attributes(
    reports: list[tuple[str, DependencyReport]]
) -> list[str]:
    return [a for a, r in reports if r.verdict]
