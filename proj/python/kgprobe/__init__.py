"""Knowledge-graph probing toolkit for evaluating machine unlearning."""

from kgprobe._kgprobe import (
    estimate_totals,
    grade,
    harmonic_overall,
    level_width,
    normalize_name,
    normalize_relation,
    parse_question,
    random_world,
    render_question,
    run_pipeline,
    scores_from_accuracies,
    spearman,
    spearman_pvalue,
)

__all__ = [
    "estimate_totals",
    "grade",
    "harmonic_overall",
    "level_width",
    "normalize_name",
    "normalize_relation",
    "parse_question",
    "random_world",
    "render_question",
    "run_pipeline",
    "scores_from_accuracies",
    "spearman",
    "spearman_pvalue",
]
