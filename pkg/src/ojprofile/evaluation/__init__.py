"""Bag-level AUC, fold assignment, cross-validation and rank tests."""

from .crossval import ComparisonMatrix, EvaluationResult, comparison_matrix, cross_validate, fold_scores
from .folds import FoldAssignment, make_folds
from .metrics import auc, auc_from_labels, pair_counts
from .wilcoxon import wilcoxon_rank_sum, wilcoxon_signed_rank

__all__ = [
    "ComparisonMatrix",
    "EvaluationResult",
    "FoldAssignment",
    "auc",
    "auc_from_labels",
    "comparison_matrix",
    "cross_validate",
    "fold_scores",
    "make_folds",
    "pair_counts",
    "wilcoxon_rank_sum",
    "wilcoxon_signed_rank",
]
