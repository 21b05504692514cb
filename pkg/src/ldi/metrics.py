"""Scoring: strict exact match and unigram-overlap F1."""

from __future__ import annotations

from collections import Counter

from .backend import normalize_answer

__all__ = ["exact_match", "rouge1_f1"]


def exact_match(pred: str, truth: str) -> bool:
    """Case-sensitive equality after normalizing both sides."""
    return normalize_answer(pred) == normalize_answer(truth)


def rouge1_f1(pred: str, truth: str) -> float:
    """Clipped unigram-overlap F1 over whitespace-split, case-folded tokens.

    Defined as 0 when exactly one side is empty and 1 when both are.
    """
    pred_tokens = pred.lower().split()
    truth_tokens = truth.lower().split()
    if not pred_tokens and not truth_tokens:
        return 1.0
    if not pred_tokens or not truth_tokens:
        return 0.0
    pred_counts = Counter(pred_tokens)
    truth_counts = Counter(truth_tokens)
    overlap = sum(min(c, truth_counts[tok]) for tok, c in pred_counts.items())
    precision = overlap / len(pred_tokens)
    recall = overlap / len(truth_tokens)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
