"""Python bindings for the promptlit core library."""

from ._core import (
    PromptlitError,
    classify_matrix_csv,
    cohen_kappa,
    cronbach_alpha,
    difficulty_index,
    discrimination_index,
    explanation_accuracy,
    mcnemar_test,
    mock_grade,
    parse_grade_report,
    pearson_correlation,
    replay,
    scenario_dimensions,
    scenarios,
    simulate,
    validate_item_bank,
    validate_scenario_config,
    wilcoxon_signed_rank,
)

__all__ = [
    "PromptlitError",
    "classify_matrix_csv",
    "cohen_kappa",
    "cronbach_alpha",
    "difficulty_index",
    "discrimination_index",
    "explanation_accuracy",
    "mcnemar_test",
    "mock_grade",
    "parse_grade_report",
    "pearson_correlation",
    "replay",
    "scenario_dimensions",
    "scenarios",
    "simulate",
    "validate_item_bank",
    "validate_scenario_config",
    "wilcoxon_signed_rank",
]
