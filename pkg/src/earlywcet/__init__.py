"""Early worst-case execution time estimation from static program features.

The pipeline: parse VMIR programs and count their twelve instruction
categories (`vmir`), pair counts with cycle labels and normalize (`dataset`),
train a from-scratch feed-forward regressor (`neuralnet`), and evaluate via
cross-validated hyperparameter grids with RMSE reports (`experiment`).
"""

from .dataset import (
    CostModel,
    Dataset,
    FoldAssignment,
    NormStats,
    Sample,
    apply_norm,
    default_cost_model,
    denorm_label,
    expected_cycles,
    fit_norm,
    kfold_split,
    load_dataset,
    normalize_features,
    normalize_labels,
    save_dataset,
    synthesize_corpus,
)
from .experiment import (
    FoldResult,
    GridSpec,
    RunReport,
    cross_validate,
    emit_report,
    model_rmse,
    rmse,
    run_grid,
    select_best,
    train_on_dataset,
)
from .neuralnet import (
    AdamState,
    LearningCurve,
    ModelParams,
    NetworkConfig,
    TrainConfig,
    adam_step,
    backward,
    forward,
    init_network,
    load_model,
    loss,
    predict,
    save_model,
    train,
)
from .vmir import (
    FEATURE_NAMES,
    Category,
    FeatureVector,
    Instruction,
    VmirProgram,
    extract_features,
    extract_features_batch,
    parse_vmir,
    parse_vmir_file,
    render_vmir,
    write_feature_csv,
)

__version__ = "0.1.0"
