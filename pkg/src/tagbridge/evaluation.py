"""Ranking evaluation: per-tag ROC-AUC, macro averaging, stratified folds.

AUC is computed in its rank-sum (Mann-Whitney) form: the probability that a
randomly drawn positive item outranks a randomly drawn negative one, with
ties counting one half. It is therefore invariant under any strictly
increasing rescoring. Tags whose column is all-positive or all-negative
have no defined AUC and are skipped, never silently mapped to 0 or 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Mapping, Sequence

import numpy as np

from .errors import EvaluationError, ValidationError
from .mapping import ScoreMatrix
from .validation import as_binary_array, as_float_vector, check_same_length


@dataclass(frozen=True)
class EvalReport:
    """Per-tag AUCs (None where undefined) and their unweighted mean."""

    per_tag_auc: Mapping[str, float | None]
    macro_auc: float
    skipped_tags: frozenset[str]


@dataclass(frozen=True)
class FoldAssignment:
    """Item → fold index in [0, k)."""

    fold_of: Mapping[str, int]
    k: int

    def fold_items(self, fold: int) -> tuple[str, ...]:
        return tuple(item for item, f in self.fold_of.items() if f == fold)


@dataclass(frozen=True)
class CrossValidationReport:
    """Per-fold evaluations plus the mean and sample std of their macro-AUCs."""

    fold_reports: tuple[EvalReport, ...]
    fold_macro_aucs: tuple[float, ...]
    mean_macro_auc: float
    std_macro_auc: float
    folds: FoldAssignment


def roc_auc(scores, labels) -> float | None:
    """Probability a random positive outranks a random negative, ties = 1/2.

    Computed from average ranks, which is exactly equivalent to exhaustive
    pair counting. Returns None when the labels are all one class.
    """
    scores = as_float_vector(scores, "scores")
    labels = as_binary_array(labels, "labels")
    check_same_length(scores, labels, "scores and labels")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def macro_auc(scores, truth, tags: Sequence[str] | None = None) -> EvalReport:
    """Column-wise AUC over an items × tags score matrix, macro-averaged.

    Degenerate columns (all 0 or all 1 in ``truth``) are reported in
    ``skipped_tags`` and excluded from the mean. Raises when every column is
    degenerate.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise ValidationError(f"shape mismatch: scores {scores.shape}, truth {truth.shape}")
    if scores.ndim != 2:
        raise ValidationError(f"expected 2-D matrices, got shape {scores.shape}")
    if tags is None:
        tags = tuple(str(j) for j in range(scores.shape[1]))
    if len(tags) != scores.shape[1]:
        raise ValidationError(f"{len(tags)} tag names for {scores.shape[1]} columns")

    per_tag: dict[str, float | None] = {}
    defined: list[float] = []
    skipped: set[str] = set()
    for j, tag in enumerate(tags):
        auc = roc_auc(scores[:, j], truth[:, j])
        per_tag[tag] = auc
        if auc is None:
            skipped.add(tag)
        else:
            defined.append(auc)
    if not defined:
        raise EvaluationError("every tag is degenerate (single-class); no AUC is defined")
    return EvalReport(
        per_tag_auc=per_tag,
        macro_auc=float(np.mean(defined)),
        skipped_tags=frozenset(skipped),
    )


def iterative_stratified_split(
    item_ids: Sequence[str],
    label_matrix,
    k: int,
    seed: int = 0,
) -> FoldAssignment:
    """Multi-label stratified fold assignment, rarest label first.

    Repeatedly takes the label with the fewest remaining positive items and
    deals those items to the fold with the greatest remaining demand for
    that label; ties fall back to overall remaining capacity, then to seeded
    randomness. Deterministic for a fixed seed; every item is assigned
    exactly once. Every item must carry at least one positive label.
    """
    labels = as_binary_array(label_matrix, "label matrix")
    if labels.ndim != 2:
        raise ValidationError(f"label matrix must be 2-D, got shape {labels.shape}")
    n, n_labels = labels.shape
    if len(item_ids) != n:
        raise ValidationError(f"{len(item_ids)} item ids for {n} label rows")
    if len(set(item_ids)) != n:
        raise ValidationError("item ids must be unique")
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of items ({n})")
    if n and not labels.any(axis=1).all():
        raise ValidationError("every item must have at least one positive label")

    rng = Random(seed)
    remaining = set(range(n))
    capacity = [n / k] * k
    demand = [[labels[:, l].sum() / k for l in range(n_labels)] for _ in range(k)]

    fold_of: dict[str, int] = {}
    while remaining:
        counts = labels[sorted(remaining)].sum(axis=0)
        active = [l for l in range(n_labels) if counts[l] > 0]
        if not active:  # unreachable: every item has a positive label
            raise ValidationError("items without positive labels cannot be stratified")
        label = min(active, key=lambda l: (counts[l], l))
        items = [i for i in sorted(remaining) if labels[i, label]]
        for i in items:
            best_demand = max(demand[f][label] for f in range(k))
            candidates = [f for f in range(k) if demand[f][label] == best_demand]
            if len(candidates) > 1:
                best_capacity = max(capacity[f] for f in candidates)
                candidates = [f for f in candidates if capacity[f] == best_capacity]
            fold = candidates[0] if len(candidates) == 1 else rng.choice(candidates)
            fold_of[item_ids[i]] = fold
            remaining.discard(i)
            capacity[fold] -= 1
            for l in range(n_labels):
                if labels[i, l]:
                    demand[fold][l] -= 1
    return FoldAssignment(fold_of=fold_of, k=k)


def cross_validate(score_matrix: ScoreMatrix, k: int = 3, seed: int = 0) -> CrossValidationReport:
    """Evaluate a score matrix under k-fold stratified splitting.

    Scoring here is unsupervised, so folds are evaluation slices only: each
    fold's rows are evaluated independently and the macro-AUCs aggregated as
    mean ± sample standard deviation. Tags degenerate within a fold are
    skipped for that fold only.
    """
    folds = iterative_stratified_split(score_matrix.item_ids, score_matrix.truth, k, seed)
    row_of = {item: i for i, item in enumerate(score_matrix.item_ids)}
    reports: list[EvalReport] = []
    for fold in range(k):
        rows = [row_of[item] for item in folds.fold_items(fold)]
        reports.append(
            macro_auc(
                score_matrix.scores[rows],
                score_matrix.truth[rows],
                score_matrix.target_tags,
            )
        )
    macro = tuple(r.macro_auc for r in reports)
    return CrossValidationReport(
        fold_reports=tuple(reports),
        fold_macro_aucs=macro,
        mean_macro_auc=float(np.mean(macro)),
        std_macro_auc=float(np.std(macro, ddof=1)),
        folds=folds,
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their group's average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks
