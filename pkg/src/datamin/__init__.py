"""Data minimization for ML models: generalize or suppress input features as
far as a black-box model's prediction accuracy allows, plus the metrics and
collection modes that go with it."""

from .data_model import (
    CleanPolicy,
    Dataset,
    FeatureSchema,
    ImputeStats,
    SplitSpec,
    clean_dataset,
    impute_missing,
    load_dataset,
    split_dataset,
)
from .generalization import (
    Generalization,
    apply_generalization,
    cluster_profiles,
    derive_global,
    generalize_record,
    remove_feature,
    select_representatives,
)
from .metrics import (
    AccuracyReport,
    NcpReport,
    disclosure_risk,
    ilag,
    ncp_categorical,
    ncp_dataset,
    ncp_numeric,
    relative_accuracy,
)
from .minimize import (
    MinimizationConfig,
    MinimizationResult,
    accuracy_gain,
    minimize,
    validate,
)
from .oracle import (
    BaggedTreesOracle,
    HttpOracle,
    MemoizingOracle,
    PrecomputedOracle,
    PredictionOracle,
    SubprocessOracle,
    null_accuracy,
    train_reference_model,
)
from .tree import GeneralizerTree, GrowthParams, fit_tree, prune_level, route_record

__version__ = "0.1.0"
