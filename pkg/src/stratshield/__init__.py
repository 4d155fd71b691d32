"""Truthful binary classifiers for inputs whose features can be strategically
withheld, plus the evaluation harness to measure what that truthfulness buys.
"""

from .baselines import (
    ImputedLrModel,
    MajModel,
    ReducedFeatureModel,
    impute_values_from,
    train_imp_lr,
    train_maj,
    train_rf_lr,
)
from .empirical import EmpiricalDistribution, from_dataset, from_weighted
from .features import (
    CATEGORICAL,
    ENUMERATION_LIMIT,
    MISSING,
    NUMERIC,
    Dataset,
    FeatureSchema,
    FeatureSpec,
    LatticeTooLargeError,
    apply_shift,
    bin_apply,
    bin_index,
    can_report,
    discretize_mdlp,
    invert_features,
    iter_reachable,
    present_indices,
    project,
    reachable_set,
    schema,
    shift_nonnegative,
)
from .harness import (
    Discretizer,
    ExperimentConfig,
    ExperimentResult,
    FoldPipeline,
    MetricRow,
    StageError,
    auc,
    example1,
    fit_discretizer,
    fit_pipeline,
    load_csv,
    mask_features,
    nx2_cv,
    run_experiment,
    select_features,
    undersample_balance,
)
from .hc_ensemble import (
    HcConfig,
    MaxEnsemble,
    SubsetClassifier,
    anova_f_rank,
    anova_f_scores,
    ensemble_predict,
    ensemble_proba,
    generate_subsets,
    hc_train,
)
from .linear_models import (
    FeatureCodec,
    LinearModel,
    TrainConfig,
    TrainingDivergedError,
    gradient_descent,
    load_model,
    save_model,
    sigmoid,
    train_iclr,
    train_logistic,
)
from .mincut import (
    MincutClassifier,
    brute_force_optimal,
    build_graph,
    cut_capacity,
    max_flow_min_cut,
    train_mincut,
)
from .strategic import (
    AuditReport,
    ClassifierHandle,
    as_handle,
    audit_truthfulness,
    best_response,
    best_response_imputed_linear,
    direct_revelation,
    strategic_accuracy,
    truthful_accuracy,
)

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "CATEGORICAL",
    "ClassifierHandle",
    "Dataset",
    "Discretizer",
    "ENUMERATION_LIMIT",
    "EmpiricalDistribution",
    "ExperimentConfig",
    "ExperimentResult",
    "FeatureCodec",
    "FeatureSchema",
    "FeatureSpec",
    "FoldPipeline",
    "HcConfig",
    "ImputedLrModel",
    "LatticeTooLargeError",
    "LinearModel",
    "MISSING",
    "MajModel",
    "MaxEnsemble",
    "MetricRow",
    "MincutClassifier",
    "NUMERIC",
    "ReducedFeatureModel",
    "StageError",
    "SubsetClassifier",
    "TrainConfig",
    "TrainingDivergedError",
    "anova_f_rank",
    "anova_f_scores",
    "apply_shift",
    "as_handle",
    "auc",
    "audit_truthfulness",
    "best_response",
    "best_response_imputed_linear",
    "bin_apply",
    "bin_index",
    "brute_force_optimal",
    "build_graph",
    "can_report",
    "cut_capacity",
    "direct_revelation",
    "discretize_mdlp",
    "ensemble_predict",
    "ensemble_proba",
    "example1",
    "fit_discretizer",
    "fit_pipeline",
    "from_dataset",
    "from_weighted",
    "generate_subsets",
    "gradient_descent",
    "hc_train",
    "impute_values_from",
    "invert_features",
    "iter_reachable",
    "load_csv",
    "load_model",
    "mask_features",
    "max_flow_min_cut",
    "nx2_cv",
    "present_indices",
    "project",
    "reachable_set",
    "run_experiment",
    "save_model",
    "schema",
    "select_features",
    "shift_nonnegative",
    "sigmoid",
    "strategic_accuracy",
    "train_iclr",
    "train_imp_lr",
    "train_logistic",
    "train_maj",
    "train_mincut",
    "train_rf_lr",
    "truthful_accuracy",
    "undersample_balance",
]
