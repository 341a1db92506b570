"""Shapley attribution, importance rankings and cohort analysis."""

from .cohorts import (
    CohortImpact,
    CohortRule,
    CohortSignificance,
    cohort_impacts,
    cohort_labels,
    cohort_significance,
    cohorts_csv,
    extract_cohorts,
)
from .shapley import (
    Attribution,
    Explanation,
    coalition_values,
    dependence_csv,
    dependence_export,
    dependence_rows,
    explain,
    global_importance,
    importance_from_phi,
    sample_background,
    score_function,
    shapley,
    shapley_permutations,
    shapley_values,
    tree_shapley_values,
)

__all__ = [
    "Attribution",
    "CohortImpact",
    "CohortRule",
    "CohortSignificance",
    "Explanation",
    "coalition_values",
    "cohort_impacts",
    "cohort_labels",
    "cohort_significance",
    "cohorts_csv",
    "dependence_csv",
    "dependence_export",
    "dependence_rows",
    "explain",
    "extract_cohorts",
    "global_importance",
    "importance_from_phi",
    "sample_background",
    "score_function",
    "shapley",
    "shapley_permutations",
    "shapley_values",
    "tree_shapley_values",
]
