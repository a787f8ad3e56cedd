"""Predicting biologic-therapy discontinuation: cohort tooling, from-scratch
learners, evaluation metrics, input optimization and a risk service.
"""

from .cohort import (
    BIOLOGICS,
    CSV_COLUMNS,
    FEASIBLE_RANGES,
    OUTCOMES,
    CohortSpec,
    NumericMarginal,
    OutcomeLabel,
    PatientRecord,
    RocGroup,
    completeness_report,
    dermbio_like_spec,
    group_outcomes,
    load_cohort,
    save_cohort,
    synthesize_cohort,
    synthesize_cohort_detailed,
    weight_step_spec,
)
from .evaluate import (
    AgreementReport,
    ConfusionMatrix,
    CvReport,
    RocCurve,
    bland_altman,
    confusion_and_accuracy,
    cross_validate,
    cross_validate_length,
    kfold_split,
    regression_metrics,
    roc_auc_ovr,
    roc_curves,
)
from .learn import (
    CLASS_NAMES,
    ModelArtifact,
    ModelConfig,
    Prediction,
    export_tree,
    fit_model,
    load_model,
    predict,
    predict_proba,
    save_model,
)
from .prescribe import (
    OptimizationResult,
    Profile,
    ProfileConstraint,
    optimize_profile,
    sweep_feature,
)
from .preprocess import (
    FeatureMatrix,
    FeatureSchema,
    PcaScreenReport,
    derive_schema,
    encode,
    pca_screen,
)

__version__ = "0.1.0"
