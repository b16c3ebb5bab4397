"""weldlab: Taguchi S/N, ANOVA, and from-scratch tree ensembles for
process-parameter experiments, built around a 9-run friction-stir-welding
hardness dataset.

Everything is deterministic: one documented 64-bit PRNG drives all
randomness, and reports replay bit-for-bit from (input, config, seed).
"""

from .anova import (
    AnovaTable,
    GlmFit,
    ModelSummary,
    anova_table,
    f_survival,
    fit_glm,
    model_summary,
)
from .cart import (
    ClassDistribution,
    SplitPartition,
    TreeConfig,
    entropy,
    export_tree,
    fit_regression_tree,
    gain_ratio,
    gini_impurity,
    information_gain,
    predict_tree,
)
from .dataset import (
    Dataset,
    Run,
    bootstrap_indices,
    builtin_aa6262,
    kfold_plan,
    load_csv,
    summarize,
)
from .ensemble import (
    BoostModel,
    ForestModel,
    ModelSpec,
    cross_validate,
    feature_importance,
    fit_gbm,
    fit_random_forest,
    load_model,
    predict_ensemble,
    regression_metrics,
    save_model,
)
from .taguchi import (
    check_design,
    optimal_combination,
    response_table,
    sn_larger_is_better,
)

__version__ = "0.1.0"

__all__ = [
    "AnovaTable",
    "BoostModel",
    "ClassDistribution",
    "Dataset",
    "ForestModel",
    "GlmFit",
    "ModelSpec",
    "ModelSummary",
    "Run",
    "SplitPartition",
    "TreeConfig",
    "anova_table",
    "bootstrap_indices",
    "builtin_aa6262",
    "check_design",
    "cross_validate",
    "entropy",
    "export_tree",
    "f_survival",
    "feature_importance",
    "fit_gbm",
    "fit_glm",
    "fit_random_forest",
    "fit_regression_tree",
    "gain_ratio",
    "gini_impurity",
    "information_gain",
    "kfold_plan",
    "load_csv",
    "load_model",
    "model_summary",
    "optimal_combination",
    "predict_ensemble",
    "predict_tree",
    "regression_metrics",
    "response_table",
    "save_model",
    "sn_larger_is_better",
    "summarize",
]
